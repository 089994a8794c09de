#include "core/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "core/error.hpp"

namespace mmtc {

namespace {

// Pitch-class sets as 12-bit masks, bit k = class k in scale.
uint16_t scale_mask(const std::array<int, 7>& degrees, int root) {
  uint16_t mask = 0;
  for (int d : degrees) mask |= uint16_t(1) << ((root + d) % 12);
  return mask;
}

constexpr std::array<int, 7> kMajorDegrees = {0, 2, 4, 5, 7, 9, 11};
constexpr std::array<int, 7> kNaturalMinorDegrees = {0, 2, 3, 5, 7, 8, 10};

} // namespace

double pitch_class_entropy(const Song& song) {
  std::array<double, 12> histogram = {};
  double total = 0.0;
  for (const auto& track : song.tracks) {
    if (track.is_drum) continue;
    for (const auto& note : track.notes) {
      histogram[((note.pitch % 12) + 12) % 12] += 1.0;
      total += 1.0;
    }
  }
  if (total == 0.0) fail(ErrorCode::invalid_argument, "empty pitch histogram");
  double entropy = 0.0;
  for (double count : histogram) {
    if (count == 0.0) continue;
    const double p = count / total;
    entropy -= p * std::log2(p);
  }
  return entropy;
}

double scale_consistency(const Song& song) {
  std::array<int64_t, 12> class_counts = {};
  int64_t total = 0;
  for (const auto& track : song.tracks) {
    if (track.is_drum) continue;
    for (const auto& note : track.notes) {
      ++class_counts[((note.pitch % 12) + 12) % 12];
      ++total;
    }
  }
  if (total == 0) fail(ErrorCode::invalid_argument, "empty pitch histogram");

  int64_t best = 0;
  for (int root = 0; root < 12; ++root) {
    for (const auto& degrees : {kMajorDegrees, kNaturalMinorDegrees}) {
      const uint16_t mask = scale_mask(degrees, root);
      int64_t in_scale = 0;
      for (int k = 0; k < 12; ++k) {
        if ((mask >> k) & 1) in_scale += class_counts[k];
      }
      best = std::max(best, in_scale);
    }
  }
  return static_cast<double>(best) / static_cast<double>(total);
}

double groove_consistency(const Song& song) {
  const int steps = song.steps_per_measure;
  if (steps <= 0) fail(ErrorCode::invalid_argument, "steps_per_measure must be positive");
  int max_onset = -1;
  for (const auto& track : song.tracks) {
    for (const auto& note : track.notes) max_onset = std::max(max_onset, note.onset);
  }
  const int measures = max_onset < 0 ? 0 : max_onset / steps + 1;
  if (measures < 2) fail(ErrorCode::invalid_argument, "too short for groove");

  std::vector<std::vector<bool>> grooves(measures, std::vector<bool>(steps, false));
  for (const auto& track : song.tracks) {
    for (const auto& note : track.notes) {
      grooves[note.onset / steps][note.onset % steps] = true;
    }
  }
  double total_distance = 0.0;
  for (int m = 0; m + 1 < measures; ++m) {
    int hamming = 0;
    for (int s = 0; s < steps; ++s) {
      hamming += grooves[m][s] != grooves[m + 1][s];
    }
    total_distance += static_cast<double>(hamming) / steps;
  }
  return 1.0 - total_distance / (measures - 1);
}

MetricReport aggregate(const std::vector<double>& values) {
  const size_t n = values.size();
  if (n < 2) fail(ErrorCode::invalid_argument, "aggregate requires at least 2 values");
  MetricReport report;
  report.values = values;
  double sum = 0.0;
  for (double v : values) sum += v;
  report.mean = sum / static_cast<double>(n);
  double sq = 0.0;
  for (double v : values) sq += (v - report.mean) * (v - report.mean);
  const double sample_std = std::sqrt(sq / static_cast<double>(n - 1));
  report.ci95 = 1.96 * sample_std / std::sqrt(static_cast<double>(n));
  return report;
}

} // namespace mmtc
