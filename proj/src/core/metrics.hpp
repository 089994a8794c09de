#pragma once

#include <vector>

#include "core/score.hpp"

namespace mmtc {

struct MetricReport {
  std::vector<double> values; // per-song
  double mean = 0.0;
  double ci95 = 0.0; // 1.96 * s / sqrt(n), sample std with n-1 divisor
};

// Shannon entropy (bits) of the 12-bin pitch-class histogram over non-drum
// notes. Fails with "empty pitch histogram" when the song has none.
double pitch_class_entropy(const Song& song);

// Highest pitch-in-scale rate across the 12 major and 12 natural-minor
// scales, non-drum notes only.
double scale_consistency(const Song& song);

// 1 - mean normalized Hamming distance between neighboring per-measure onset
// vectors (drums included). Fails with "too short for groove" for songs
// spanning fewer than two measures.
double groove_consistency(const Song& song);

// Mean and 95% Gaussian confidence half-width. Requires n >= 2.
MetricReport aggregate(const std::vector<double>& values);

} // namespace mmtc
