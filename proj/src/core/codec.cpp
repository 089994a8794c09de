#include "core/codec.hpp"

#include <algorithm>
#include <array>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "core/error.hpp"

namespace mmtc {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::uncond: return "uncond";
    case Variant::mmt_i: return "mmt-i";
    case Variant::mmt_g: return "mmt-g";
    case Variant::mmt_gi: return "mmt-gi";
  }
  return "?";
}

bool variant_has_tags(Variant v) { return v == Variant::mmt_g || v == Variant::mmt_gi; }

bool variant_has_programs(Variant v) { return v == Variant::mmt_i || v == Variant::mmt_gi; }

Vocabulary variant_vocab(Variant v) {
  // Instrument events are needed by every variant's note groups; tag events
  // only when the variant carries a tag prefix.
  return Vocabulary::build(variant_has_tags(v), true);
}

GrammarState initial_state() { return GrammarState{}; }

namespace {

using Section = GrammarState::Section;
using NoteField = GrammarState::NoteField;

// Kinds acceptable in the current state, ignoring argument constraints.
std::vector<EventKind> allowed_kinds(const GrammarState& s, Variant variant) {
  switch (s.section) {
    case Section::expect_sos:
      return {EventKind::start_of_song};
    case Section::expect_sot:
      return {EventKind::start_of_tags};
    case Section::tags: {
      std::vector<EventKind> kinds = {EventKind::tag};
      if (s.saw_tag) {
        kinds.push_back(variant_has_programs(variant) ? EventKind::start_of_program
                                                      : EventKind::start_of_notes);
      }
      return kinds;
    }
    case Section::expect_sop:
      return {EventKind::start_of_program};
    case Section::programs:
      return {EventKind::instrument, EventKind::start_of_notes};
    case Section::expect_son:
      return {EventKind::start_of_notes};
    case Section::notes_boundary:
      return {EventKind::beat, EventKind::end_of_song};
    case Section::in_note:
      switch (s.next_field) {
        case NoteField::position: return {EventKind::position};
        case NoteField::instrument: return {EventKind::instrument};
        case NoteField::pitch: return {EventKind::pitch};
        case NoteField::duration: return {EventKind::duration};
      }
      return {};
    case Section::done:
      return {};
  }
  return {};
}

} // namespace

AdvanceResult advance(const GrammarState& state, const Event& event, Variant variant) {
  AdvanceResult result;
  result.next = state;
  const auto kinds = allowed_kinds(state, variant);
  const bool kind_ok =
      event_arg_valid(event) &&
      std::find(kinds.begin(), kinds.end(), event.kind) != kinds.end();
  // Beat arguments must be monotone across the song.
  const bool arg_ok =
      event.kind != EventKind::beat || event.arg >= state.last_beat;
  if (!kind_ok || !arg_ok) {
    result.allowed = kinds;
    return result;
  }

  GrammarState& next = result.next;
  switch (event.kind) {
    case EventKind::start_of_song:
      if (variant_has_tags(variant)) {
        next.section = Section::expect_sot;
      } else if (variant_has_programs(variant)) {
        next.section = Section::expect_sop;
      } else {
        next.section = Section::expect_son;
      }
      break;
    case EventKind::start_of_tags:
      next.section = Section::tags;
      break;
    case EventKind::tag:
      next.declared_tags |= 1u << event.arg;
      next.saw_tag = true;
      break;
    case EventKind::start_of_program:
      next.section = Section::programs;
      break;
    case EventKind::instrument:
      if (state.section == Section::programs) {
        next.declared_programs |= uint64_t{1} << event.arg;
      } else {
        next.next_field = NoteField::pitch;
      }
      break;
    case EventKind::start_of_notes:
      next.section = Section::notes_boundary;
      break;
    case EventKind::beat:
      next.last_beat = event.arg;
      next.section = Section::in_note;
      next.next_field = NoteField::position;
      break;
    case EventKind::position:
      next.next_field = NoteField::instrument;
      break;
    case EventKind::pitch:
      next.next_field = NoteField::duration;
      break;
    case EventKind::duration:
      next.section = Section::notes_boundary;
      break;
    case EventKind::end_of_song:
      next.section = Section::done;
      break;
    case EventKind::pad:
      break; // unreachable, pad is never in the allowed set
  }
  result.accepted = true;
  return result;
}

bool accepts(const GrammarState& state, const Event& event, Variant variant) {
  return advance(state, event, variant).accepted;
}

std::vector<bool> allowed_mask(const GrammarState& state, const Vocabulary& vocab,
                               Variant variant, bool enforce_condition) {
  const bool restrict_instruments =
      enforce_condition && state.section == Section::in_note &&
      state.next_field == NoteField::instrument && state.any_programs();
  std::vector<bool> mask(vocab.size(), false);
  for (size_t id = 0; id < vocab.size(); ++id) {
    const Event& e = vocab.entries()[id];
    if (!accepts(state, e, variant)) continue;
    if (restrict_instruments && e.kind == EventKind::instrument && !state.has_program(e.arg)) {
      continue;
    }
    mask[id] = true;
  }
  return mask;
}

std::vector<Event> encode(const Song& song, Variant variant) {
  if (variant_has_tags(variant) && song.genre_tags.empty()) {
    fail(ErrorCode::grammar, "missing genre condition for variant " +
                                 std::string(variant_name(variant)));
  }

  std::vector<Event> events;
  events.reserve(8 + 5 * song.note_count());
  events.push_back({EventKind::start_of_song, 0});

  if (variant_has_tags(variant)) {
    events.push_back({EventKind::start_of_tags, 0});
    std::vector<int> tags = song.genre_tags;
    std::sort(tags.begin(), tags.end());
    tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
    for (int t : tags) events.push_back({EventKind::tag, t});
  }
  if (variant_has_programs(variant)) {
    events.push_back({EventKind::start_of_program, 0});
    std::vector<int> programs;
    for (const auto& track : song.tracks) programs.push_back(track.program);
    std::sort(programs.begin(), programs.end());
    programs.erase(std::unique(programs.begin(), programs.end()), programs.end());
    for (int p : programs) events.push_back({EventKind::instrument, p});
  }
  events.push_back({EventKind::start_of_notes, 0});

  // Flatten across tracks by (onset, program, pitch, duration).
  struct Flat {
    int onset, program, pitch, duration;
  };
  std::vector<Flat> flat;
  flat.reserve(song.note_count());
  for (const auto& track : song.tracks) {
    for (const auto& note : track.notes) {
      flat.push_back({note.onset, track.program, note.pitch, note.duration});
    }
  }
  std::sort(flat.begin(), flat.end(), [](const Flat& a, const Flat& b) {
    return std::tie(a.onset, a.program, a.pitch, a.duration) <
           std::tie(b.onset, b.program, b.pitch, b.duration);
  });

  for (const Flat& n : flat) {
    const int beat = n.onset / kResolution;
    const int position = n.onset - kResolution * beat;
    const Event group[5] = {{EventKind::beat, beat},
                            {EventKind::position, position},
                            {EventKind::instrument, n.program},
                            {EventKind::pitch, n.pitch},
                            {EventKind::duration, n.duration}};
    for (const Event& e : group) {
      if (!event_arg_valid(e)) {
        fail(ErrorCode::invalid_argument,
             "song not normalized: " + event_to_string(e) + " out of range");
      }
      events.push_back(e);
    }
  }
  events.push_back({EventKind::end_of_song, 0});
  return events;
}

namespace {

std::string kinds_to_string(const std::vector<EventKind>& kinds) {
  std::string out = "{";
  for (size_t i = 0; i < kinds.size(); ++i) {
    if (i) out += ", ";
    out += event_kind_name(kinds[i]);
  }
  out += "}";
  return out;
}

} // namespace

Song decode(const std::vector<Event>& events, Variant variant,
            const CanonicalTables& tables) {
  GrammarState state = initial_state();
  std::vector<int> tags;
  std::map<int, std::vector<Note>> notes_by_program;
  int cur_beat = 0, cur_position = 0, cur_instrument = 0, cur_pitch = 0;

  for (size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    AdvanceResult step = advance(state, e, variant);
    if (!step.accepted) {
      std::string detail;
      if (e.kind == EventKind::tag) {
        detail = "tag outside tag section";
      } else if (e.kind == EventKind::instrument &&
                 state.section != Section::programs &&
                 state.section != Section::in_note) {
        detail = "instrument outside program section";
      } else {
        detail = std::string("unexpected ") + event_to_string(e);
      }
      fail(ErrorCode::grammar, "decode error at index " + std::to_string(i) + ": " +
                                   detail + ", expected " +
                                   kinds_to_string(step.allowed));
    }
    if (state.section == Section::tags && e.kind == EventKind::tag) {
      tags.push_back(e.arg);
    } else if (e.kind == EventKind::beat) {
      cur_beat = e.arg;
    } else if (state.section == Section::in_note) {
      switch (state.next_field) {
        case NoteField::position: cur_position = e.arg; break;
        case NoteField::instrument: cur_instrument = e.arg; break;
        case NoteField::pitch: cur_pitch = e.arg; break;
        case NoteField::duration:
          notes_by_program[cur_instrument].push_back(
              {kResolution * cur_beat + cur_position, cur_pitch, e.arg, kDefaultVelocity});
          break;
      }
    }
    state = step.next;
  }

  // A stream may stop early once the notes section has begun; an incomplete
  // trailing group is dropped. Stopping before start-of-notes is an error.
  if (state.section != Section::notes_boundary && state.section != Section::in_note &&
      state.section != Section::done) {
    fail(ErrorCode::grammar, "decode error: stream truncated before notes section");
  }

  Song song;
  for (auto& [program, notes] : notes_by_program) {
    song.tracks.push_back({program, tables.instrument(program).is_drum, std::move(notes)});
  }
  std::sort(tags.begin(), tags.end());
  tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
  song.genre_tags = std::move(tags);
  song.has_metadata = !song.genre_tags.empty();
  return song;
}

std::vector<int32_t> encode_ids(const Song& song, Variant variant, const Vocabulary& vocab) {
  const auto events = encode(song, variant);
  std::vector<int32_t> ids;
  ids.reserve(events.size());
  for (const Event& e : events) {
    const int id = vocab.id_of(e);
    if (id < 0) {
      fail(ErrorCode::internal, "event " + event_to_string(e) + " not in vocabulary");
    }
    ids.push_back(id);
  }
  return ids;
}

Song decode_ids(const std::vector<int32_t>& ids, Variant variant, const Vocabulary& vocab,
                const CanonicalTables& tables) {
  std::vector<Event> events;
  events.reserve(ids.size());
  for (int32_t id : ids) events.push_back(vocab.event_of(id));
  return decode(events, variant, tables);
}

void write_token_file(const std::string& path, const Vocabulary& vocab,
                      const std::vector<std::vector<int32_t>>& sequences) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write token file: " + path);
  char fp[32];
  std::snprintf(fp, sizeof(fp), "%016" PRIx64, vocab.fingerprint());
  out << "#vocab " << fp << "\n";
  for (const auto& seq : sequences) {
    for (size_t i = 0; i < seq.size(); ++i) {
      if (i) out << ' ';
      out << seq[i];
    }
    out << '\n';
  }
}

TokenFile read_token_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open token file: " + path);
  std::string header;
  if (!std::getline(in, header) || header.rfind("#vocab ", 0) != 0) {
    fail(ErrorCode::parse, path + ": missing #vocab header");
  }
  TokenFile file;
  file.vocab_fingerprint = std::strtoull(header.c_str() + 7, nullptr, 16);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') continue;
    std::vector<int32_t> seq;
    std::istringstream ls(line);
    int64_t id = 0;
    while (ls >> id) seq.push_back(static_cast<int32_t>(id));
    if (!ls.eof()) fail(ErrorCode::parse, path + ": malformed token line: " + line);
    file.sequences.push_back(std::move(seq));
  }
  return file;
}

} // namespace mmtc
