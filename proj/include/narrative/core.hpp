#pragma once

// Shared domain types for ordered media collections.

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nd {

inline constexpr std::size_t kFeatureCount = 75;
inline constexpr std::size_t kStatCount = 7;
inline constexpr std::size_t kFeatureSize = kFeatureCount * kStatCount;

inline constexpr std::size_t kMinAlbumLength = 3;
inline constexpr std::size_t kMaxAlbumLength = 20;

/// Statistic names in column order within one feature row.
inline constexpr std::array<const char*, kStatCount> kStatNames = {
    "mean", "std", "skew", "kurtosis", "median", "min", "max"};

enum class Split { train, validation, test };

const char* to_string(Split s);
Split parse_split(const std::string& s);

/// One track: a 75 x 7 matrix of global feature statistics, stored row-major
/// (row = feature, column = statistic).
class TrackFeatures {
public:
  TrackFeatures() = default;
  TrackFeatures(std::string track_id, std::vector<double> stats);

  const std::string& track_id() const { return id_; }
  std::span<const double> stats() const { return stats_; }
  double at(std::size_t feature, std::size_t stat) const {
    return stats_[feature * kStatCount + stat];
  }

private:
  std::string id_;
  std::vector<double> stats_;
};

/// Tracks in ground-truth order.
struct Album {
  std::string album_id;
  Split split = Split::train;
  std::vector<TrackFeatures> tracks;

  std::size_t length() const { return tracks.size(); }
};

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

enum class Normalization { raw, zscore, minmax };

const char* to_string(Normalization n);

/// Scalar essence values for one album, one per track in the stated order.
struct EssenceSeries {
  std::string album_id;
  std::vector<double> values;
  Normalization normalization = Normalization::raw;
};

/// A permutation of track indices: entry j is the track placed at position j.
/// Stored zero-based; text output is one-based.
class Ordering {
public:
  Ordering() = default;
  explicit Ordering(std::vector<std::size_t> positions);

  static Ordering identity(std::size_t n);

  std::size_t size() const { return pos_.size(); }
  std::size_t operator[](std::size_t j) const { return pos_[j]; }
  const std::vector<std::size_t>& positions() const { return pos_; }
  std::vector<std::size_t> one_based() const;

  friend bool operator==(const Ordering&, const Ordering&) = default;
  friend auto operator<=>(const Ordering&, const Ordering&) = default;

private:
  std::vector<std::size_t> pos_;
};

bool is_permutation(std::span<const std::size_t> p);

// Normalizations. Constant input maps to 0.5 (min-max) or 0 (z-score).
std::vector<double> normalize_minmax(std::span<const double> values);
std::vector<double> normalize_zscore(std::span<const double> values);

/// [0, 1/(n-1), ..., 1]
std::vector<double> relative_positions(std::size_t n);

EssenceSeries to_minmax(const EssenceSeries& s);

}  // namespace nd
