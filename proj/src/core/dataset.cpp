#include "core/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>

#include <json.hpp>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace mmtc {

namespace fs = std::filesystem;
using nlohmann::json;

const char* subset_name(Subset s) {
  switch (s) {
    case Subset::full: return "full";
    case Subset::metadata: return "metadata";
    case Subset::genre: return "genre";
  }
  return "?";
}

Song load_song_json(const std::string& path, const CanonicalTables& tables,
                    LoadReport* report) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open song file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::parse, path + ": " + e.what());
  }

  LoadReport local;
  LoadReport& rep = report ? *report : local;
  Song song;
  try {
    const int resolution = j.at("resolution").get<int>();
    if (resolution <= 0 || resolution % kResolution != 0) {
      fail(ErrorCode::parse, path + ": resolution must be a positive multiple of 12, got " +
                                 std::to_string(resolution));
    }
    const int scale = resolution / kResolution;
    for (const auto& jt : j.at("tracks")) {
      const int program = jt.at("program").get<int>();
      const bool is_drum = jt.value("is_drum", false);
      const int canonical = tables.map_program(program, is_drum);
      if (canonical < 0) {
        ++rep.skipped_tracks;
        continue;
      }
      Track track;
      track.program = canonical;
      track.is_drum = tables.instrument(canonical).is_drum;
      for (const auto& jn : jt.at("notes")) {
        Note note;
        note.onset = jn.at("time").get<int>() / scale;
        note.pitch = jn.at("pitch").get<int>();
        note.duration = std::max(1, jn.at("duration").get<int>() / scale);
        note.velocity = jn.value("velocity", kDefaultVelocity);
        track.notes.push_back(note);
      }
      song.tracks.push_back(std::move(track));
    }
    if (j.contains("metadata")) {
      song.has_metadata = true;
      const auto& jm = j.at("metadata");
      for (const auto& name : jm.value("genres", std::vector<std::string>{})) {
        const int id = tables.map_genre(name);
        if (id < 0) {
          ++rep.dropped_genres;
        } else {
          song.genre_tags.push_back(id);
        }
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::parse, path + ": " + e.what());
  }

  const NormalizeReport norm = quantize_and_sort(song);
  rep.dropped_notes += norm.dropped_notes;
  rep.clipped_durations += norm.clipped_durations;
  return song;
}

void save_song_json(const std::string& path, const Song& song,
                    const CanonicalTables& tables) {
  json j;
  j["resolution"] = kResolution;
  j["tracks"] = json::array();
  for (const auto& track : song.tracks) {
    const auto& inst = tables.instrument(track.program);
    json jt;
    jt["program"] = inst.midi_program;
    jt["is_drum"] = inst.is_drum;
    jt["notes"] = json::array();
    for (const auto& note : track.notes) {
      jt["notes"].push_back({{"time", note.onset},
                             {"pitch", note.pitch},
                             {"duration", note.duration},
                             {"velocity", note.velocity}});
    }
    j["tracks"].push_back(std::move(jt));
  }
  if (song.has_metadata) {
    std::vector<std::string> names;
    for (int tag : song.genre_tags) names.push_back(tables.genre_name(tag));
    j["metadata"] = {{"genres", names}};
  }
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write song file: " + path);
  out << j.dump() << "\n";
}

std::vector<CorpusEntry> load_corpus(const std::string& dir, const CanonicalTables& tables,
                                     LoadReport* report) {
  if (!fs::is_directory(dir)) fail(ErrorCode::io, "not a directory: " + dir);
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      paths.push_back(entry.path().string());
    }
  }
  std::sort(paths.begin(), paths.end());

  std::vector<CorpusEntry> corpus;
  for (const auto& path : paths) {
    CorpusEntry entry;
    entry.id = fs::path(path).stem().string();
    entry.song = load_song_json(path, tables, report);
    corpus.push_back(std::move(entry));
  }
  if (corpus.empty()) {
    fail(ErrorCode::io, "no corpus entries found under " + dir);
  }
  return corpus;
}

std::vector<CorpusEntry> filter_subset(const std::vector<CorpusEntry>& corpus, Subset subset) {
  std::vector<CorpusEntry> out;
  for (const auto& entry : corpus) {
    switch (subset) {
      case Subset::full:
        out.push_back(entry);
        break;
      case Subset::metadata:
        if (entry.song.has_metadata) out.push_back(entry);
        break;
      case Subset::genre:
        if (!entry.song.genre_tags.empty()) out.push_back(entry);
        break;
    }
  }
  return out;
}

SplitResult split_corpus(const std::vector<CorpusEntry>& corpus, uint64_t seed) {
  SplitResult result;
  for (size_t i = 0; i < corpus.size(); ++i) {
    const auto& id = corpus[i].id;
    const uint64_t h = hash64(id.data(), id.size(), seed);
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    if (u < 0.90) {
      result.train.push_back(i);
    } else if (u < 0.95) {
      result.valid.push_back(i);
    } else {
      result.test.push_back(i);
    }
  }
  return result;
}

CorpusStats corpus_stats(const std::vector<CorpusEntry>& corpus) {
  std::map<int, size_t> genre_counts, instrument_counts;
  for (const auto& entry : corpus) {
    for (int tag : entry.song.genre_tags) ++genre_counts[tag];
    for (const auto& track : entry.song.tracks) ++instrument_counts[track.program];
  }
  auto to_table = [](const std::map<int, size_t>& counts) {
    FrequencyTable table;
    table.rows.assign(counts.begin(), counts.end());
    std::stable_sort(table.rows.begin(), table.rows.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    return table;
  };
  return {to_table(genre_counts), to_table(instrument_counts)};
}

} // namespace mmtc
