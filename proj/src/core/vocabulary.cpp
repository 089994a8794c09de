#include "core/vocabulary.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/score.hpp"

namespace mmtc {

namespace {

struct KindInfo {
  EventKind kind;
  const char* name;
  int arg_min;
  int arg_max;
};

constexpr std::array<KindInfo, 12> kKinds = {{
    {EventKind::pad, "pad", 0, 0},
    {EventKind::start_of_song, "start-of-song", 0, 0},
    {EventKind::start_of_tags, "start-of-tags", 0, 0},
    {EventKind::start_of_program, "start-of-program", 0, 0},
    {EventKind::start_of_notes, "start-of-notes", 0, 0},
    {EventKind::end_of_song, "end-of-song", 0, 0},
    {EventKind::tag, "tag", 0, kNumGenres - 1},
    {EventKind::instrument, "instrument", 0, kNumInstruments - 1},
    {EventKind::beat, "beat", 0, kMaxBeats - 1},
    {EventKind::position, "position", 0, kResolution - 1},
    {EventKind::pitch, "pitch", 0, 127},
    {EventKind::duration, "duration", 1, kMaxDuration},
}};

const KindInfo& kind_info(EventKind kind) { return kKinds[static_cast<size_t>(kind)]; }

} // namespace

const char* event_kind_name(EventKind kind) { return kind_info(kind).name; }

std::optional<EventKind> event_kind_from_name(const std::string& name) {
  for (const auto& info : kKinds) {
    if (name == info.name) return info.kind;
  }
  return std::nullopt;
}

std::string event_to_string(const Event& e) {
  const auto& info = kind_info(e.kind);
  if (info.arg_min == info.arg_max) return info.name;
  return std::string(info.name) + "(" + std::to_string(e.arg) + ")";
}

bool event_arg_valid(const Event& e) {
  const auto& info = kind_info(e.kind);
  return e.arg >= info.arg_min && e.arg <= info.arg_max;
}

Vocabulary Vocabulary::build(bool include_tags, bool include_instruments) {
  Vocabulary v;
  v.include_tags_ = include_tags;
  v.include_instruments_ = include_instruments;

  auto push_kind = [&v](EventKind kind) {
    const auto& info = kind_info(kind);
    for (int arg = info.arg_min; arg <= info.arg_max; ++arg) {
      v.entries_.push_back({kind, arg});
    }
  };

  push_kind(EventKind::pad);
  push_kind(EventKind::start_of_song);
  if (include_tags) push_kind(EventKind::start_of_tags);
  if (include_instruments) push_kind(EventKind::start_of_program);
  push_kind(EventKind::start_of_notes);
  push_kind(EventKind::end_of_song);
  push_kind(EventKind::beat);
  push_kind(EventKind::position);
  push_kind(EventKind::pitch);
  push_kind(EventKind::duration);
  if (include_instruments) push_kind(EventKind::instrument);
  if (include_tags) push_kind(EventKind::tag);

  v.rebuild_index();
  return v;
}

void Vocabulary::rebuild_index() {
  for (auto& offset : kind_offset_) offset = -1;
  for (size_t id = 0; id < entries_.size(); ++id) {
    const Event& e = entries_[id];
    const size_t k = static_cast<size_t>(e.kind);
    if (kind_offset_[k] < 0) {
      kind_offset_[k] = static_cast<int>(id) - (e.arg - kind_info(e.kind).arg_min);
    }
  }
  // Content hash over the entry list.
  std::string blob;
  blob.reserve(entries_.size() * 4);
  for (const Event& e : entries_) {
    blob.push_back(static_cast<char>(e.kind));
    blob.push_back(static_cast<char>(e.arg & 0xff));
    blob.push_back(static_cast<char>((e.arg >> 8) & 0xff));
  }
  fingerprint_ = hash64(blob.data(), blob.size(), 0x4d4d5443u /* "MMTC" */);
}

const Event& Vocabulary::event_of(int id) const {
  if (id < 0 || id >= static_cast<int>(entries_.size())) {
    fail(ErrorCode::invalid_argument, "token id out of range: " + std::to_string(id));
  }
  return entries_[id];
}

int Vocabulary::id_of(const Event& e) const {
  if (!event_arg_valid(e)) return -1;
  const int offset = kind_offset_[static_cast<size_t>(e.kind)];
  if (offset < 0) return -1;
  return offset + (e.arg - kind_info(e.kind).arg_min);
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write vocabulary file: " + path);
  char fp[32];
  std::snprintf(fp, sizeof(fp), "%016llx", static_cast<unsigned long long>(fingerprint_));
  out << "# mmtc-vocab v" << version_ << " fingerprint " << fp
      << " tags " << (include_tags_ ? 1 : 0)
      << " instruments " << (include_instruments_ ? 1 : 0) << "\n";
  for (size_t id = 0; id < entries_.size(); ++id) {
    const Event& e = entries_[id];
    out << id << " " << event_kind_name(e.kind) << " " << e.arg << "\n";
  }
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open vocabulary file: " + path);
  std::string header;
  if (!std::getline(in, header) || header.rfind("# mmtc-vocab", 0) != 0) {
    fail(ErrorCode::parse, path + ": missing vocabulary header");
  }
  Vocabulary v;
  {
    std::istringstream hs(header);
    std::string hash_word, word;
    while (hs >> word) {
      if (word == "tags") hs >> word, v.include_tags_ = (word == "1");
      else if (word == "instruments") hs >> word, v.include_instruments_ = (word == "1");
      else if (word == "fingerprint") hs >> hash_word;
    }
  }
  std::string line;
  size_t expected_id = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    size_t id = 0;
    std::string kind_name;
    int arg = 0;
    if (!(ls >> id >> kind_name >> arg) || id != expected_id) {
      fail(ErrorCode::parse, path + ": malformed vocabulary line: " + line);
    }
    const auto kind = event_kind_from_name(kind_name);
    if (!kind) fail(ErrorCode::parse, path + ": unknown event kind: " + kind_name);
    const Event e{*kind, arg};
    if (!event_arg_valid(e)) {
      fail(ErrorCode::parse, path + ": event argument out of range: " + line);
    }
    v.entries_.push_back(e);
    ++expected_id;
  }
  if (v.entries_.empty()) fail(ErrorCode::parse, path + ": empty vocabulary");
  v.rebuild_index();
  return v;
}

SharedIdMap extend_vocab(const Vocabulary& base, const Vocabulary& target) {
  SharedIdMap map;
  map.base_id_of_target.assign(target.size(), -1);
  for (size_t target_id = 0; target_id < target.size(); ++target_id) {
    const int base_id = base.id_of(target.entries()[target_id]);
    map.base_id_of_target[target_id] = base_id;
    if (base_id < 0) ++map.num_new;
  }
  // Every base event must survive into the target.
  for (size_t base_id = 0; base_id < base.size(); ++base_id) {
    if (!target.contains(base.entries()[base_id])) {
      fail(ErrorCode::invalid_argument, "vocabulary shrink not supported: base event " +
                                            event_to_string(base.entries()[base_id]) +
                                            " missing from target");
    }
  }
  return map;
}

} // namespace mmtc
