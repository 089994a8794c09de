#pragma once

// Brute-force reference implementations for the evaluation metrics, kept
// deliberately independent of src/core/metrics.cpp: different containers,
// different scale-set construction, straight-line arithmetic.

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "core/score.hpp"

namespace mmtc::testing {

inline std::map<int, long> pitch_class_counts(const Song& song) {
  std::map<int, long> counts;
  for (const auto& track : song.tracks) {
    if (track.is_drum) continue;
    for (const auto& note : track.notes) counts[note.pitch % 12] += 1;
  }
  return counts;
}

inline double oracle_pitch_class_entropy(const Song& song) {
  const auto counts = pitch_class_counts(song);
  long total = 0;
  for (const auto& [cls, count] : counts) total += count;
  double h = 0.0;
  for (const auto& [cls, count] : counts) {
    const double p = static_cast<double>(count) / total;
    h -= p * std::log(p) / std::log(2.0);
  }
  return h;
}

// Scale sets built from interval patterns (whole/half steps) rather than
// degree offsets.
inline std::vector<std::set<int>> all_scale_sets() {
  const std::vector<int> major_steps = {2, 2, 1, 2, 2, 2, 1};
  const std::vector<int> minor_steps = {2, 1, 2, 2, 1, 2, 2};
  std::vector<std::set<int>> sets;
  for (int root = 0; root < 12; ++root) {
    for (const auto& steps : {major_steps, minor_steps}) {
      std::set<int> set;
      int cls = root;
      for (int s : steps) {
        set.insert(cls % 12);
        cls += s;
      }
      sets.push_back(set);
    }
  }
  return sets;
}

inline double oracle_scale_consistency(const Song& song) {
  long total = 0;
  std::vector<int> classes;
  for (const auto& track : song.tracks) {
    if (track.is_drum) continue;
    for (const auto& note : track.notes) {
      classes.push_back(note.pitch % 12);
      ++total;
    }
  }
  double best = 0.0;
  for (const auto& set : all_scale_sets()) {
    long hits = 0;
    for (int cls : classes) hits += set.count(cls) ? 1 : 0;
    best = std::max(best, static_cast<double>(hits) / total);
  }
  return best;
}

inline double oracle_groove_consistency(const Song& song) {
  const int steps = song.steps_per_measure;
  std::map<int, std::set<int>> measures; // measure -> in-measure onset steps
  int last = 0;
  for (const auto& track : song.tracks) {
    for (const auto& note : track.notes) {
      measures[note.onset / steps].insert(note.onset % steps);
      last = std::max(last, note.onset / steps);
    }
  }
  const int count = last + 1;
  double sum = 0.0;
  for (int m = 0; m + 1 < count; ++m) {
    const auto& a = measures[m];
    const auto& b = measures[m + 1];
    int differing = 0;
    for (int s = 0; s < steps; ++s) {
      if (a.count(s) != b.count(s)) ++differing;
    }
    sum += static_cast<double>(differing) / steps;
  }
  return 1.0 - sum / (count - 1);
}

} // namespace mmtc::testing
