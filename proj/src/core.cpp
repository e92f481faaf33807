#include "narrative/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nd {

const char* to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "train";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "validation") return Split::validation;
  if (s == "test") return Split::test;
  throw std::invalid_argument("unknown split tag '" + s + "'");
}

const char* to_string(Normalization n) {
  switch (n) {
    case Normalization::raw: return "raw";
    case Normalization::zscore: return "zscore";
    case Normalization::minmax: return "minmax";
  }
  return "raw";
}

TrackFeatures::TrackFeatures(std::string track_id, std::vector<double> stats)
    : id_(std::move(track_id)), stats_(std::move(stats)) {
  if (stats_.size() != kFeatureSize)
    throw std::invalid_argument("track '" + id_ + "': expected " + std::to_string(kFeatureSize) +
                                " feature statistics, got " + std::to_string(stats_.size()));
  for (double v : stats_)
    if (!std::isfinite(v)) throw std::invalid_argument("track '" + id_ + "': non-finite feature");
}

bool is_permutation(std::span<const std::size_t> p) {
  std::vector<bool> seen(p.size(), false);
  for (std::size_t v : p) {
    if (v >= p.size() || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

Ordering::Ordering(std::vector<std::size_t> positions) : pos_(std::move(positions)) {
  if (!is_permutation(pos_)) throw std::invalid_argument("ordering is not a permutation");
}

Ordering Ordering::identity(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  return Ordering(std::move(p));
}

std::vector<std::size_t> Ordering::one_based() const {
  std::vector<std::size_t> out(pos_);
  for (auto& v : out) ++v;
  return out;
}

namespace {

void check_values(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("normalization of empty series");
  for (double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument("normalization of non-finite value");
}

}  // namespace

std::vector<double> normalize_minmax(std::span<const double> values) {
  check_values(values);
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double min = *lo, range = *hi - *lo;
  std::vector<double> out(values.size(), 0.5);
  if (range > 0.0) {
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - min) / range;
  }
  return out;
}

std::vector<double> normalize_zscore(std::span<const double> values) {
  check_values(values);
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= n;
  std::vector<double> out(values.size(), 0.0);
  if (var > 0.0) {
    const double sd = std::sqrt(var);
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - mean) / sd;
  }
  return out;
}

std::vector<double> relative_positions(std::size_t n) {
  if (n < 2) throw std::invalid_argument("relative_positions requires n >= 2");
  std::vector<double> out(n);
  const double denom = static_cast<double>(n - 1);
  for (std::size_t j = 0; j < n; ++j) out[j] = static_cast<double>(j) / denom;
  out.back() = 1.0;
  return out;
}

EssenceSeries to_minmax(const EssenceSeries& s) {
  return {s.album_id, normalize_minmax(s.values), Normalization::minmax};
}

}  // namespace nd
