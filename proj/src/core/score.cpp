#include "core/score.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "core/error.hpp"

namespace mmtc {

size_t Song::note_count() const {
  size_t n = 0;
  for (const auto& track : tracks) n += track.notes.size();
  return n;
}

namespace {

// General MIDI names for the even programs; canonical id c covers external
// programs 2c and 2c+1.
const char* kPitchedNames[63] = {
    "acoustic-grand-piano", "electric-grand-piano", "electric-piano",
    "harpsichord", "celesta", "music-box", "marimba", "tubular-bells",
    "drawbar-organ", "rock-organ", "reed-organ", "harmonica",
    "nylon-guitar", "jazz-guitar", "muted-guitar", "distortion-guitar",
    "acoustic-bass", "picked-bass", "slap-bass", "synth-bass",
    "violin", "cello", "tremolo-strings", "orchestral-harp",
    "string-ensemble", "synth-strings", "choir-aahs", "synth-voice",
    "trumpet", "tuba", "french-horn", "synth-brass",
    "soprano-sax", "tenor-sax", "oboe", "bassoon",
    "piccolo", "recorder", "blown-bottle", "whistle",
    "square-lead", "calliope-lead", "charang-lead", "fifths-lead",
    "new-age-pad", "polysynth-pad", "bowed-pad", "halo-pad",
    "fx-rain", "fx-crystal", "fx-brightness", "fx-echoes",
    "sitar", "shamisen", "kalimba", "fiddle",
    "tinkle-bell", "steel-drums", "taiko-drum", "synth-drum",
    "guitar-fret-noise", "seashore", "telephone-ring",
};

const char* kGenreNames[kNumGenres] = {
    "classical", "pop", "rock", "folk", "soundtrack",
    "jazz", "religious", "electronic", "country", "blues",
    "world", "latin", "hiphop", "rnb", "reggae",
    "metal", "punk", "newage", "disco", "funk",
};

std::string to_lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

} // namespace

CanonicalTables make_builtin_tables() {
  CanonicalTables t;
  for (int c = 0; c < 63; ++c) {
    t.instruments_.push_back({kPitchedNames[c], 2 * c, false});
  }
  t.instruments_.push_back({"drum-kit", 0, true});
  for (const char* g : kGenreNames) t.genres_.emplace_back(g);
  t.program_map_.assign(128, -1);
  for (int p = 0; p < 126; ++p) t.program_map_[p] = p / 2;
  // 126 (applause) and 127 (gunshot) stay unmapped.
  t.drum_canonical_ = 63;
  t.validate();
  return t;
}

const CanonicalTables& CanonicalTables::builtin() {
  static const CanonicalTables tables = make_builtin_tables();
  return tables;
}

void CanonicalTables::validate() const {
  if (instruments_.size() != kNumInstruments) {
    fail(ErrorCode::parse, "canonical tables: expected 64 instruments, got " +
                               std::to_string(instruments_.size()));
  }
  if (genres_.size() != kNumGenres) {
    fail(ErrorCode::parse, "canonical tables: expected 20 genres, got " +
                               std::to_string(genres_.size()));
  }
  if (program_map_.size() != 128) {
    fail(ErrorCode::parse, "canonical tables: program map must have 128 entries");
  }
  std::set<std::string> names;
  for (const auto& inst : instruments_) names.insert(inst.name);
  if (names.size() != instruments_.size()) {
    fail(ErrorCode::parse, "canonical tables: instrument names must be unique");
  }
  names.clear();
  for (const auto& g : genres_) names.insert(to_lower(g));
  if (names.size() != genres_.size()) {
    fail(ErrorCode::parse, "canonical tables: genre names must be unique");
  }
  for (int id : program_map_) {
    if (id < -1 || id >= kNumInstruments) {
      fail(ErrorCode::parse, "canonical tables: program map entry out of range");
    }
  }
  if (drum_canonical_ < -1 || drum_canonical_ >= kNumInstruments) {
    fail(ErrorCode::parse, "canonical tables: drum id out of range");
  }
}

CanonicalTables CanonicalTables::load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open tables file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse, path + ": " + e.what());
  }
  CanonicalTables t;
  try {
    for (const auto& inst : j.at("instruments")) {
      t.instruments_.push_back({inst.at("name").get<std::string>(),
                                inst.at("midi_program").get<int>(),
                                inst.value("is_drum", false)});
    }
    t.genres_ = j.at("genres").get<std::vector<std::string>>();
    t.program_map_ = j.at("program_map").get<std::vector<int>>();
    t.drum_canonical_ = j.at("drum_canonical").get<int>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse, path + ": " + e.what());
  }
  t.validate();
  return t;
}

void CanonicalTables::save_json(const std::string& path) const {
  nlohmann::json j;
  j["version"] = 1;
  j["genres"] = genres_;
  j["instruments"] = nlohmann::json::array();
  for (const auto& inst : instruments_) {
    j["instruments"].push_back({{"name", inst.name},
                                {"midi_program", inst.midi_program},
                                {"is_drum", inst.is_drum}});
  }
  j["program_map"] = program_map_;
  j["drum_canonical"] = drum_canonical_;
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write tables file: " + path);
  out << j.dump(2) << "\n";
}

int CanonicalTables::map_program(int external_program, bool is_drum) const {
  if (is_drum) return drum_canonical_;
  if (external_program < 0 || external_program > 127) return -1;
  return program_map_[external_program];
}

int CanonicalTables::map_genre(const std::string& name) const {
  const std::string needle = to_lower(name);
  for (size_t i = 0; i < genres_.size(); ++i) {
    if (to_lower(genres_[i]) == needle) return static_cast<int>(i);
  }
  return -1;
}

const CanonicalTables::Instrument& CanonicalTables::instrument(int id) const {
  if (id < 0 || id >= static_cast<int>(instruments_.size())) {
    fail(ErrorCode::invalid_argument, "instrument id out of range: " + std::to_string(id));
  }
  return instruments_[id];
}

const std::string& CanonicalTables::genre_name(int id) const {
  if (id < 0 || id >= static_cast<int>(genres_.size())) {
    fail(ErrorCode::invalid_argument, "genre id out of range: " + std::to_string(id));
  }
  return genres_[id];
}

NormalizeReport quantize_and_sort(Song& song) {
  NormalizeReport report;
  // Merge tracks sharing (program, is_drum), keeping track order by key.
  std::map<std::pair<int, bool>, std::vector<Note>> merged;
  for (auto& track : song.tracks) {
    auto& dest = merged[{track.program, track.is_drum}];
    for (const auto& note : track.notes) {
      Note n = note;
      if (n.onset < 0 || n.onset / kResolution >= kMaxBeats) {
        ++report.dropped_notes;
        continue;
      }
      if (n.duration < 1 || n.duration > kMaxDuration) {
        n.duration = std::clamp(n.duration, 1, kMaxDuration);
        ++report.clipped_durations;
      }
      dest.push_back(n);
    }
  }
  song.tracks.clear();
  for (auto& [key, notes] : merged) {
    if (notes.empty()) continue;
    std::stable_sort(notes.begin(), notes.end(), [](const Note& a, const Note& b) {
      return std::tie(a.onset, a.pitch, a.duration) < std::tie(b.onset, b.pitch, b.duration);
    });
    song.tracks.push_back({key.first, key.second, std::move(notes)});
  }
  std::sort(song.genre_tags.begin(), song.genre_tags.end());
  song.genre_tags.erase(std::unique(song.genre_tags.begin(), song.genre_tags.end()),
                        song.genre_tags.end());
  if (!song.genre_tags.empty()) song.has_metadata = true;
  return report;
}

Song quantized_and_sorted(Song song) {
  quantize_and_sort(song);
  return song;
}

std::vector<std::string> validate_song(const Song& song) {
  std::vector<std::string> violations;
  auto report = [&](const std::string& what) { violations.push_back(what); };

  for (size_t t = 0; t < song.tracks.size(); ++t) {
    const auto& track = song.tracks[t];
    const std::string where = "track " + std::to_string(t);
    if (track.program < 0 || track.program >= kNumInstruments) {
      report("program out of range at " + where + ": " + std::to_string(track.program));
    }
    for (size_t n = 0; n < track.notes.size(); ++n) {
      const auto& note = track.notes[n];
      const std::string at = where + " note " + std::to_string(n);
      if (note.pitch < 0 || note.pitch > 127) {
        report("pitch out of range at " + at + ": " + std::to_string(note.pitch));
      }
      if (note.onset < 0) {
        report("onset negative at " + at + ": " + std::to_string(note.onset));
      } else if (note.onset / kResolution >= kMaxBeats) {
        report("onset beyond beat 63 at " + at + ": " + std::to_string(note.onset));
      }
      if (note.duration < 1) {
        report("duration below 1 at " + at + ": " + std::to_string(note.duration));
      } else if (note.duration > kMaxDuration) {
        report("duration above 192 at " + at + ": " + std::to_string(note.duration));
      }
      if (note.velocity < 0 || note.velocity > 127) {
        report("velocity out of range at " + at + ": " + std::to_string(note.velocity));
      }
    }
  }
  for (size_t i = 0; i < song.genre_tags.size(); ++i) {
    const int tag = song.genre_tags[i];
    if (tag < 0 || tag >= kNumGenres) {
      report("genre tag out of range at index " + std::to_string(i) + ": " +
             std::to_string(tag));
    }
  }
  if (!song.genre_tags.empty() && !song.has_metadata) {
    report("genre tags present but has_metadata is false");
  }
  if (song.steps_per_measure <= 0) {
    report("steps_per_measure must be positive: " + std::to_string(song.steps_per_measure));
  }
  return violations;
}

} // namespace mmtc
