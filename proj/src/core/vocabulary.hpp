#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mmtc {

enum class EventKind : uint8_t {
  pad = 0,
  start_of_song,
  start_of_tags,
  start_of_program,
  start_of_notes,
  end_of_song,
  tag,        // 0..19
  instrument, // 0..63
  beat,       // 0..63
  position,   // 0..11
  pitch,      // 0..127
  duration,   // 1..192
};

const char* event_kind_name(EventKind kind);
std::optional<EventKind> event_kind_from_name(const std::string& name);

struct Event {
  EventKind kind = EventKind::pad;
  int arg = 0;

  friend bool operator==(const Event&, const Event&) = default;
  friend auto operator<=>(const Event&, const Event&) = default;
};

std::string event_to_string(const Event& e);

// Checks the per-kind argument range (structural kinds take arg 0).
bool event_arg_valid(const Event& e);

inline Event make_event(EventKind kind, int arg = 0) { return {kind, arg}; }

// Dense token-id space over events. Layout is fixed so that token files and
// checkpoints are comparable across runs: pad, structural markers, beats,
// positions, pitches, durations, then instruments and tags when included.
class Vocabulary {
public:
  static Vocabulary build(bool include_tags, bool include_instruments);

  size_t size() const { return entries_.size(); }
  const std::vector<Event>& entries() const { return entries_; }
  const Event& event_of(int id) const;

  // Token id for an event, or -1 when the event is not in the vocabulary.
  int id_of(const Event& e) const;
  bool contains(const Event& e) const { return id_of(e) >= 0; }

  uint64_t fingerprint() const { return fingerprint_; }
  int version() const { return version_; }
  bool includes_tags() const { return include_tags_; }
  bool includes_instruments() const { return include_instruments_; }

  static constexpr int pad_id = 0;

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

private:
  Vocabulary() = default;
  void rebuild_index();

  std::vector<Event> entries_;
  // Per-kind dense offsets; -1 when the kind is absent.
  int kind_offset_[12] = {};
  uint64_t fingerprint_ = 0;
  int version_ = 1;
  bool include_tags_ = false;
  bool include_instruments_ = false;
};

// For each target id, the base id holding the same event, or -1 when the
// event is newly introduced. Mapping is by event value, never by position.
struct SharedIdMap {
  std::vector<int> base_id_of_target; // size |target|
  size_t num_new = 0;
};

// Fails when base contains an event absent from target (vocabulary shrink).
SharedIdMap extend_vocab(const Vocabulary& base, const Vocabulary& target);

} // namespace mmtc
