#pragma once

// Reorders a collection so its values follow a template curve: the returned
// ordering minimizes the largest value-to-curve deviation, and among those
// orderings the summed deviation. Ties resolve to the lexicographically
// smallest ordering.

#include <cstddef>
#include <span>
#include <vector>

#include "narrative/core.hpp"
#include "narrative/spline.hpp"

namespace nd {

struct FitResult {
  Ordering ordering;
  double bottleneck = 0.0;
  double total_deviation = 0.0;
  std::vector<double> per_position_deviation;
};

/// Curve sampled at relative_positions(n); min-max renormalized only when a
/// sample falls outside [0, 1].
std::vector<double> sample_template(const TemplateCurve& curve, std::size_t n);

/// Sorted, de-duplicated {|y_i - z_j|}.
std::vector<double> candidate_thresholds(std::span<const double> y, std::span<const double> z);

/// Whether edges {(i, j) : |y_i - z_j| <= threshold} admit a perfect matching.
bool has_perfect_matching(std::span<const double> y, std::span<const double> z, double threshold);

/// Fit values y (one per track) to per-position targets z.
FitResult fit_to_targets(std::span<const double> y, std::span<const double> z);

/// values must carry the minmax tag and have at least two entries.
FitResult fit_ordering(const EssenceSeries& values, const TemplateCurve& curve);

}  // namespace nd
