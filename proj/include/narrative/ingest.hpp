#pragma once

// Feature-table ingestion, album filtering, split assignment and a synthetic
// generator that plants an ordering signal in the feature statistics.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "narrative/core.hpp"
#include "narrative/spline.hpp"

namespace nd {

/// Named per-track scalar features (for probing), keyed by track id.
struct ScalarTable {
  std::vector<std::string> names;
  std::map<std::string, std::vector<std::optional<double>>> rows;

  std::size_t column(const std::string& name) const;  // throws if absent
  std::optional<double> get(const std::string& track_id, std::size_t column) const;
};

struct Dataset {
  std::vector<Album> albums;
  std::optional<ScalarTable> scalars;

  std::size_t track_count() const;
};

struct LoadReport {
  std::size_t rows = 0;
  std::size_t dropped_missing_album = 0;
  std::size_t albums_loaded = 0;
  std::size_t albums_filtered_out = 0;
};

/// Column names of the feature table, in file order.
std::vector<std::string> feature_table_header();

/// Parses feature-table CSV text. Albums are ordered by first appearance,
/// tracks by track_position. Applies the 3..20 length filter unless told not to.
Dataset parse_feature_table(std::string_view text, const std::string& source,
                            LoadReport* report = nullptr, bool apply_filter = true);
Dataset load_feature_table(const std::filesystem::path& path, LoadReport* report = nullptr,
                           bool apply_filter = true);
std::string format_feature_table(const Dataset& ds);

ScalarTable parse_scalar_table(std::string_view text, const std::string& source);
ScalarTable load_scalar_table(const std::filesystem::path& path);
std::string format_scalar_table(const ScalarTable& t);

/// Keeps albums with min_len <= length <= max_len, in order.
Dataset filter_albums(const Dataset& ds, std::size_t min_len = kMinAlbumLength,
                      std::size_t max_len = kMaxAlbumLength);

/// 80/10/10 by FNV-1a hash of the album id.
Split hash_split(std::string_view album_id);

Dataset select_split(const Dataset& ds, Split split);

/// Reorders the tracks of every album uniformly at random (no-signal null).
Dataset shuffle_orders(const Dataset& ds, std::uint64_t seed);

enum class LatentShape { rising, falling, valley, peak };

const char* to_string(LatentShape s);
LatentShape parse_shape(const std::string& s);

/// Control curve a shape arranges latents along.
TemplateCurve shape_curve(LatentShape s);

struct SynthConfig {
  std::size_t n_albums = 200;
  std::size_t length_min = kMinAlbumLength;
  std::size_t length_max = kMaxAlbumLength;
  LatentShape shape = LatentShape::rising;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Feature slots (flat indices into the 75x7 matrix) carrying the latent.
/// Slot k holds sign_k * latent + noise, sign alternating starting at +1.
const std::vector<std::size_t>& planted_slots();

/// Latent as read back from the first planted slot.
double read_planted(const TrackFeatures& t);

/// Albums whose latent values follow the configured shape over relative
/// position. Scalars: "latent" (clean), "planted" (first slot, with noise),
/// "noise" (independent N(0,1)).
Dataset synth_generate(const SynthConfig& config);

/// Concatenates albums (and scalar rows); album ids must stay unique.
Dataset merge_datasets(const Dataset& a, const Dataset& b);

}  // namespace nd
