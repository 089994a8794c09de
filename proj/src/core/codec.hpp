#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/score.hpp"
#include "core/vocabulary.hpp"

namespace mmtc {

// Representation variants. All four use the same 5-event note group
// (beat, position, instrument, pitch, duration); they differ only in which
// prefix sections appear before start-of-notes.
enum class Variant : uint8_t { uncond = 0, mmt_i = 1, mmt_g = 2, mmt_gi = 3 };

const char* variant_name(Variant v);
bool variant_has_tags(Variant v);
bool variant_has_programs(Variant v);

// The vocabulary a variant trains and samples with. Instrument events are
// always present (every note group carries one); tag events only for the
// genre-conditioned variants.
Vocabulary variant_vocab(Variant v);

// Streaming grammar state. Small value type; copy freely per sampling stream.
struct GrammarState {
  enum class Section : uint8_t {
    expect_sos,
    expect_sot,     // start-of-tags marker pending
    tags,           // inside the tag list (at least one tag required)
    expect_sop,     // start-of-program marker pending
    programs,       // inside the instrument list (may be empty)
    expect_son,     // start-of-notes marker pending
    notes_boundary, // expecting a beat (>= last_beat) or end-of-song
    in_note,        // expecting `next_field`
    done,
  };
  enum class NoteField : uint8_t { position, instrument, pitch, duration };

  Section section = Section::expect_sos;
  NoteField next_field = NoteField::position;
  int last_beat = 0;
  uint64_t declared_programs = 0; // bitset over canonical instrument ids
  uint32_t declared_tags = 0;     // bitset over genre ids
  bool saw_tag = false;

  bool has_program(int id) const { return (declared_programs >> id) & 1; }
  bool any_programs() const { return declared_programs != 0; }

  friend bool operator==(const GrammarState&, const GrammarState&) = default;
};

GrammarState initial_state();

struct AdvanceResult {
  bool accepted = false;
  GrammarState next;
  // Kinds that would have been accepted, filled on rejection.
  std::vector<EventKind> allowed;
};

// One grammar transition. Rejection never throws; the result carries the
// allowed-kinds set for error reporting.
AdvanceResult advance(const GrammarState& state, const Event& event, Variant variant);

bool accepts(const GrammarState& state, const Event& event, Variant variant);

// mask[i] is true iff advance accepts entries[i]. With enforce_condition set
// and a nonempty declared program list, instrument slots are restricted to
// the declared programs. Pad is always false.
std::vector<bool> allowed_mask(const GrammarState& state, const Vocabulary& vocab,
                               Variant variant, bool enforce_condition);

// Song -> events. Requires a song already canonicalized by quantize_and_sort;
// MMT-G/MMT-GI additionally require nonempty genre tags.
std::vector<Event> encode(const Song& song, Variant variant);

// Events -> song. Accepts any grammar-valid stream; a stream truncated after
// start-of-notes (missing end-of-song, possibly mid note group) decodes too,
// with the incomplete trailing group dropped. Track drum flags come from the
// tables' instrument entries.
Song decode(const std::vector<Event>& events, Variant variant,
            const CanonicalTables& tables = CanonicalTables::builtin());

// Id-level convenience wrappers over the vocabulary.
std::vector<int32_t> encode_ids(const Song& song, Variant variant, const Vocabulary& vocab);
Song decode_ids(const std::vector<int32_t>& ids, Variant variant, const Vocabulary& vocab,
                const CanonicalTables& tables = CanonicalTables::builtin());

// Token files: header line `#vocab <fingerprint>`, then one sequence per
// line as space-separated decimal ids.
void write_token_file(const std::string& path, const Vocabulary& vocab,
                      const std::vector<std::vector<int32_t>>& sequences);
struct TokenFile {
  uint64_t vocab_fingerprint = 0;
  std::vector<std::vector<int32_t>> sequences;
};
TokenFile read_token_file(const std::string& path);

} // namespace mmtc
