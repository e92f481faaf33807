#pragma once

// The versioned JSON run configuration shared by all subcommands.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "narrative/essence.hpp"
#include "narrative/ingest.hpp"
#include "narrative/templates.hpp"

namespace nd::cli {

inline constexpr int kConfigVersion = 1;

struct DataPaths {
  std::optional<std::filesystem::path> features, scalars, essence, model, templates, report, album;
};

struct SynthSection {
  std::size_t n_albums = 200;
  std::size_t length_min = kMinAlbumLength;
  std::size_t length_max = kMaxAlbumLength;
  std::vector<LatentShape> shapes{LatentShape::rising};
  double noise_sigma = 0.0;
};

struct SweepSection {
  std::vector<std::size_t> dims;  // empty: no sweep
  std::size_t runs = 1;
};

struct ProbeSection {
  std::vector<std::string> features;  // empty: every scalar column
  bool negate = true;
};

struct SplitChoice {
  std::optional<Split> split;  // nullopt: all albums
};

struct RunConfig {
  std::uint64_t seed = 0;
  DataPaths data;
  SynthSection synth;
  TrainConfig train;
  SweepSection sweep;
  ProbeSection probe;
  GAConfig ga;
  SplitChoice template_split{Split::train};
  SplitChoice eval_split{Split::test};
  std::size_t essence_column = 1;  // 1-based column of the essence table
  double alpha = 0.05;
  std::optional<std::size_t> eval_k;
  std::optional<std::size_t> reorder_template;  // 1-based; nullopt means all
  std::size_t plot_points = 101;
  bool plot_svg = true;

  /// Canonical document (defaults filled in); its hash tags every output.
  nlohmann::json canonical;
  std::string hash;
};

/// Parses the document; relative paths resolve against `base_dir`.
/// Throws ConfigError on unknown keys, a missing version or invalid values.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                           std::optional<std::uint64_t> seed_override);

RunConfig load_run_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override);

}  // namespace nd::cli
