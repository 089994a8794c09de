#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/score.hpp"

namespace mmtc {

struct CorpusEntry {
  std::string id; // filename stem, unique within a corpus
  Song song;      // normalized
};

enum class Subset : uint8_t { full = 0, metadata = 1, genre = 2 };

const char* subset_name(Subset s);

struct LoadReport {
  size_t skipped_tracks = 0;    // unmappable programs
  size_t dropped_notes = 0;     // outside the 64-beat window
  size_t clipped_durations = 0;
  size_t dropped_genres = 0;    // names outside the canonical table
};

// One song per JSON file: {"resolution": R, "tracks": [{"program", "is_drum",
// "notes": [{"time", "pitch", "duration", "velocity"?}]}], "metadata"?:
// {"genres": [names]}}. R must be a positive multiple of 12; times and
// durations are rescaled onto the 12-step grid.
Song load_song_json(const std::string& path, const CanonicalTables& tables,
                    LoadReport* report = nullptr);
// Writes the normalized interchange form (resolution 12, canonical ids mapped
// back to representative external programs, genre ids to names).
void save_song_json(const std::string& path, const Song& song,
                    const CanonicalTables& tables);

// Loads every *.json file under `dir` (non-recursive), sorted by id.
// Fails when no file yields a valid entry.
std::vector<CorpusEntry> load_corpus(const std::string& dir, const CanonicalTables& tables,
                                     LoadReport* report = nullptr);

std::vector<CorpusEntry> filter_subset(const std::vector<CorpusEntry>& corpus, Subset subset);

struct SplitResult {
  std::vector<size_t> train, valid, test; // indices into the corpus
};

// Deterministic 90/5/5 assignment by keyed hash of the entry id; the same id
// lands in the same split for a given seed regardless of corpus composition.
SplitResult split_corpus(const std::vector<CorpusEntry>& corpus, uint64_t seed);

struct FrequencyTable {
  std::vector<std::pair<int, size_t>> rows; // (canonical id, count), count desc
};

struct CorpusStats {
  FrequencyTable genres;      // per song
  FrequencyTable instruments; // per track
};

CorpusStats corpus_stats(const std::vector<CorpusEntry>& corpus);

} // namespace mmtc
