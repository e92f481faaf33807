#include "narrative/fitcurve.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "narrative/kernels.hpp"
#include "narrative/matching.hpp"

namespace nd {

namespace {

void check_pair(std::span<const double> y, std::span<const double> z) {
  if (y.size() != z.size())
    throw std::invalid_argument("curve fit: values and targets differ in length");
}

std::vector<std::vector<std::size_t>> threshold_graph(std::span<const double> y,
                                                      std::span<const double> z,
                                                      double threshold) {
  const std::size_t n = y.size();
  std::vector<std::vector<std::size_t>> adj(n);
  std::vector<double> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    kernels::abs_diff(y[i], z, row);
    for (std::size_t j = 0; j < n; ++j)
      if (row[j] <= threshold) adj[i].push_back(j);
  }
  return adj;
}

}  // namespace

std::vector<double> sample_template(const TemplateCurve& curve, std::size_t n) {
  const auto xs = relative_positions(n);
  std::vector<double> z(n);
  for (std::size_t j = 0; j < n; ++j) z[j] = curve.eval(xs[j]);
  const bool overshoot = std::any_of(z.begin(), z.end(), [](double v) { return v < 0.0 || v > 1.0; });
  return overshoot ? normalize_minmax(z) : z;
}

std::vector<double> candidate_thresholds(std::span<const double> y, std::span<const double> z) {
  check_pair(y, z);
  const std::size_t n = y.size();
  std::vector<double> d(n * n);
  for (std::size_t i = 0; i < n; ++i)
    kernels::abs_diff(y[i], z, std::span<double>(d).subspan(i * n, n));
  std::sort(d.begin(), d.end());
  d.erase(std::unique(d.begin(), d.end()), d.end());
  return d;
}

bool has_perfect_matching(std::span<const double> y, std::span<const double> z, double threshold) {
  check_pair(y, z);
  return hopcroft_karp(threshold_graph(y, z, threshold), z.size()) == y.size();
}

FitResult fit_to_targets(std::span<const double> y, std::span<const double> z) {
  check_pair(y, z);
  const std::size_t n = y.size();
  if (n == 0) throw std::invalid_argument("curve fit: empty input");

  const auto d = candidate_thresholds(y, z);
  std::size_t lo = 0, hi = d.size() - 1;
  while (lo != hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (has_perfect_matching(y, z, d[mid]))
      hi = mid;
    else
      lo = mid + 1;
  }
  const double bottleneck = d[lo];

  SparseCostMatrix m;
  std::vector<std::size_t> cols;
  std::vector<double> costs, row(n);
  for (std::size_t i = 0; i < n; ++i) {
    cols.clear();
    costs.clear();
    kernels::abs_diff(y[i], z, row);
    for (std::size_t j = 0; j < n; ++j)
      if (row[j] <= bottleneck) {
        cols.push_back(j);
        costs.push_back(row[j]);
      }
    m.add_row(cols, costs);
  }
  const LapSolution sol = solve_sparse_lap(m);
  const double tol = 1e-11 * std::max(1.0, bottleneck);
  const auto col_to_row = lexicographic_min_cost_matching(m, sol, tol);

  FitResult out;
  out.ordering = Ordering(col_to_row);
  out.bottleneck = bottleneck;
  out.per_position_deviation.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    out.per_position_deviation[j] = std::fabs(y[col_to_row[j]] - z[j]);
    out.total_deviation += out.per_position_deviation[j];
  }
  return out;
}

FitResult fit_ordering(const EssenceSeries& values, const TemplateCurve& curve) {
  if (values.normalization != Normalization::minmax)
    throw std::invalid_argument("curve fit: values for album '" + values.album_id +
                                "' must be min-max normalized");
  if (values.values.size() < 2)
    throw std::invalid_argument("curve fit: album '" + values.album_id + "' has fewer than 2 values");
  const auto z = sample_template(curve, values.values.size());
  return fit_to_targets(values.values, z);
}

}  // namespace nd
