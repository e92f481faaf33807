#include "narrative/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "narrative/fitcurve.hpp"
#include "narrative/io.hpp"
#include "narrative/rng.hpp"

namespace nd {

namespace {

constexpr std::size_t kMetaColumns = 4;

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
    lines.push_back(text.substr(start, end - start));
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return lines;
}

bool skip_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line.empty() || line.front() == '#';
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::size_t ScalarTable::column(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::invalid_argument("scalar feature '" + name + "' not present");
  return static_cast<std::size_t>(it - names.begin());
}

std::optional<double> ScalarTable::get(const std::string& track_id, std::size_t column) const {
  auto it = rows.find(track_id);
  if (it == rows.end() || column >= it->second.size()) return std::nullopt;
  return it->second[column];
}

std::size_t Dataset::track_count() const {
  std::size_t n = 0;
  for (const auto& a : albums) n += a.length();
  return n;
}

std::vector<std::string> feature_table_header() {
  std::vector<std::string> h{"album_id", "track_id", "track_position", "split"};
  char buf[8];
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    std::snprintf(buf, sizeof buf, "f%03zu", f + 1);
    for (const char* stat : kStatNames) h.push_back(std::string(buf) + "_" + stat);
  }
  return h;
}

Dataset parse_feature_table(std::string_view text, const std::string& source, LoadReport* report,
                            bool apply_filter) {
  const auto lines = split_lines(text);
  const auto expected = feature_table_header();
  LoadReport rep;

  std::size_t lineno = 0;
  bool have_header = false;
  struct Row {
    std::size_t position;
    TrackFeatures track;
    std::size_t line;
  };
  struct Pending {
    std::string id;
    std::optional<Split> split;
    std::vector<Row> rows;
  };
  std::vector<Pending> pending;
  std::unordered_map<std::string, std::size_t> index;

  for (std::string_view line : lines) {
    ++lineno;
    if (skip_line(line)) continue;
    auto fields = split_csv_line(line);
    if (!have_header) {
      if (fields != expected)
        throw ParseError(source, lineno, "header does not match the feature-table schema");
      have_header = true;
      continue;
    }
    if (fields.size() != expected.size())
      throw ParseError(source, lineno,
                       "expected " + std::to_string(expected.size()) + " columns, got " +
                           std::to_string(fields.size()));
    ++rep.rows;
    if (fields[0].empty()) {
      ++rep.dropped_missing_album;
      continue;
    }
    std::size_t position = 0;
    {
      const auto& p = fields[2];
      auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), position);
      if (p.empty() || ec != std::errc() || ptr != p.data() + p.size())
        throw ParseError(source, lineno, "track_position '" + p + "' is not a non-negative integer");
    }
    std::optional<Split> split;
    if (!fields[3].empty()) {
      try {
        split = parse_split(fields[3]);
      } catch (const std::invalid_argument& e) {
        throw ParseError(source, lineno, e.what());
      }
    }
    std::vector<double> stats(kFeatureSize);
    for (std::size_t k = 0; k < kFeatureSize; ++k) {
      try {
        stats[k] = parse_double(fields[kMetaColumns + k]);
      } catch (const std::invalid_argument&) {
        throw ParseError(source, lineno,
                         "column '" + expected[kMetaColumns + k] + "' is not a finite number");
      }
    }

    auto [it, inserted] = index.try_emplace(fields[0], pending.size());
    if (inserted) pending.push_back({fields[0], std::nullopt, {}});
    Pending& album = pending[it->second];
    if (split) {
      if (album.split && *album.split != *split)
        throw ParseError(source, lineno, "album '" + album.id + "' has conflicting split tags");
      album.split = split;
    }
    album.rows.push_back({position, TrackFeatures(fields[1], std::move(stats)), lineno});
  }
  if (!have_header) throw ParseError(source, lineno, "missing header row");

  Dataset ds;
  for (auto& p : pending) {
    std::stable_sort(p.rows.begin(), p.rows.end(),
                     [](const Row& a, const Row& b) { return a.position < b.position; });
    std::set<std::string> ids;
    Album album;
    album.album_id = p.id;
    album.split = p.split.value_or(hash_split(p.id));
    for (std::size_t k = 0; k < p.rows.size(); ++k) {
      if (k > 0 && p.rows[k].position == p.rows[k - 1].position)
        throw ParseError(source, p.rows[k].line,
                         "album '" + p.id + "' has duplicate track_position " +
                             std::to_string(p.rows[k].position));
      if (!ids.insert(p.rows[k].track.track_id()).second)
        throw ParseError(source, p.rows[k].line,
                         "album '" + p.id + "' has duplicate track_id '" +
                             p.rows[k].track.track_id() + "'");
      album.tracks.push_back(std::move(p.rows[k].track));
    }
    ds.albums.push_back(std::move(album));
  }
  rep.albums_loaded = ds.albums.size();
  if (apply_filter) {
    ds = filter_albums(ds);
    rep.albums_filtered_out = rep.albums_loaded - ds.albums.size();
  }
  if (report) *report = rep;
  return ds;
}

Dataset load_feature_table(const std::filesystem::path& path, LoadReport* report,
                           bool apply_filter) {
  return parse_feature_table(read_file(path), path.string(), report, apply_filter);
}

std::string format_feature_table(const Dataset& ds) {
  std::ostringstream out;
  const auto header = feature_table_header();
  for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << '\n';
  for (const auto& album : ds.albums) {
    for (std::size_t j = 0; j < album.tracks.size(); ++j) {
      const auto& t = album.tracks[j];
      out << csv_field(album.album_id) << ',' << csv_field(t.track_id()) << ',' << (j + 1) << ','
          << to_string(album.split);
      for (double v : t.stats()) out << ',' << format_double(v);
      out << '\n';
    }
  }
  return out.str();
}

ScalarTable parse_scalar_table(std::string_view text, const std::string& source) {
  ScalarTable t;
  bool have_header = false;
  std::size_t lineno = 0;
  for (std::string_view line : split_lines(text)) {
    ++lineno;
    if (skip_line(line)) continue;
    auto fields = split_csv_line(line);
    if (!have_header) {
      if (fields.empty() || fields[0] != "track_id")
        throw ParseError(source, lineno, "scalar table must start with a track_id column");
      t.names.assign(fields.begin() + 1, fields.end());
      have_header = true;
      continue;
    }
    if (fields.size() != t.names.size() + 1)
      throw ParseError(source, lineno,
                       "expected " + std::to_string(t.names.size() + 1) + " columns, got " +
                           std::to_string(fields.size()));
    std::vector<std::optional<double>> values(t.names.size());
    for (std::size_t k = 0; k < t.names.size(); ++k) {
      if (fields[k + 1].empty()) continue;
      try {
        values[k] = parse_double(fields[k + 1]);
      } catch (const std::invalid_argument&) {
        throw ParseError(source, lineno, "column '" + t.names[k] + "' is not a finite number");
      }
    }
    if (!t.rows.emplace(fields[0], std::move(values)).second)
      throw ParseError(source, lineno, "duplicate track_id '" + fields[0] + "'");
  }
  if (!have_header) throw ParseError(source, lineno, "missing header row");
  return t;
}

ScalarTable load_scalar_table(const std::filesystem::path& path) {
  return parse_scalar_table(read_file(path), path.string());
}

std::string format_scalar_table(const ScalarTable& t) {
  std::ostringstream out;
  out << "track_id";
  for (const auto& n : t.names) out << ',' << csv_field(n);
  out << '\n';
  for (const auto& [id, values] : t.rows) {
    out << csv_field(id);
    for (const auto& v : values) {
      out << ',';
      if (v) out << format_double(*v);
    }
    out << '\n';
  }
  return out.str();
}

Dataset filter_albums(const Dataset& ds, std::size_t min_len, std::size_t max_len) {
  Dataset out;
  out.scalars = ds.scalars;
  for (const auto& a : ds.albums)
    if (a.length() >= min_len && a.length() <= max_len) out.albums.push_back(a);
  return out;
}

Split hash_split(std::string_view album_id) {
  const auto bucket = fnv1a(album_id) % 10;
  if (bucket < 8) return Split::train;
  return bucket == 8 ? Split::validation : Split::test;
}

Dataset select_split(const Dataset& ds, Split split) {
  Dataset out;
  out.scalars = ds.scalars;
  for (const auto& a : ds.albums)
    if (a.split == split) out.albums.push_back(a);
  return out;
}

Dataset shuffle_orders(const Dataset& ds, std::uint64_t seed) {
  Dataset out = ds;
  for (std::size_t a = 0; a < out.albums.size(); ++a) {
    Rng rng = make_rng(derive_seed(seed, "shuffle-orders"), a);
    std::shuffle(out.albums[a].tracks.begin(), out.albums[a].tracks.end(), rng);
  }
  return out;
}

const char* to_string(LatentShape s) {
  switch (s) {
    case LatentShape::rising: return "rising";
    case LatentShape::falling: return "falling";
    case LatentShape::valley: return "valley";
    case LatentShape::peak: return "peak";
  }
  return "rising";
}

LatentShape parse_shape(const std::string& s) {
  if (s == "rising") return LatentShape::rising;
  if (s == "falling") return LatentShape::falling;
  if (s == "valley") return LatentShape::valley;
  if (s == "peak") return LatentShape::peak;
  throw std::invalid_argument("unknown latent shape '" + s + "'");
}

TemplateCurve shape_curve(LatentShape s) {
  switch (s) {
    case LatentShape::rising: return TemplateCurve({0.0, 1.0}, {0.0, 1.0});
    case LatentShape::falling: return TemplateCurve({0.0, 1.0}, {1.0, 0.0});
    case LatentShape::valley: return TemplateCurve({0.0, 0.5, 1.0}, {1.0, 0.0, 1.0});
    case LatentShape::peak: return TemplateCurve({0.0, 0.5, 1.0}, {0.0, 1.0, 0.0});
  }
  throw std::invalid_argument("unknown latent shape");
}

void SynthConfig::validate() const {
  if (n_albums == 0) throw std::invalid_argument("synth: n_albums must be positive");
  if (length_min < kMinAlbumLength || length_max > kMaxAlbumLength || length_min > length_max)
    throw std::invalid_argument("synth: length range must satisfy 3 <= min <= max <= 20");
  if (!std::isfinite(noise_sigma) || noise_sigma < 0.0)
    throw std::invalid_argument("synth: noise_sigma must be finite and >= 0");
}

const std::vector<std::size_t>& planted_slots() {
  // The mean and median columns of the first eight features.
  static const std::vector<std::size_t> slots = [] {
    std::vector<std::size_t> s;
    for (std::size_t f = 0; f < 8; ++f) {
      s.push_back(f * kStatCount + 0);
      s.push_back(f * kStatCount + 4);
    }
    return s;
  }();
  return slots;
}

double read_planted(const TrackFeatures& t) { return t.stats()[planted_slots().front()]; }

Dataset synth_generate(const SynthConfig& config) {
  config.validate();
  Dataset ds;
  ScalarTable scalars;
  scalars.names = {"latent", "planted", "noise"};
  const auto curve = shape_curve(config.shape);
  const auto& slots = planted_slots();
  const std::string prefix =
      std::string("synth-") + to_string(config.shape) + "-s" + std::to_string(config.seed) + "-";

  for (std::size_t a = 0; a < config.n_albums; ++a) {
    Rng rng = make_rng(derive_seed(config.seed, "synth"), a);
    std::uniform_int_distribution<std::size_t> len_dist(config.length_min, config.length_max);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    const std::size_t n = len_dist(rng);
    std::vector<double> latent(n);
    for (auto& u : latent) u = unit(rng);
    // Rank matching: the k-th smallest latent goes where the k-th smallest
    // target sits (ties by position).
    const auto target = sample_template(curve, n);
    std::vector<std::size_t> by_latent(n), by_target(n), placed(n);
    std::iota(by_latent.begin(), by_latent.end(), std::size_t{0});
    std::iota(by_target.begin(), by_target.end(), std::size_t{0});
    std::stable_sort(by_latent.begin(), by_latent.end(),
                     [&](std::size_t x, std::size_t y) { return latent[x] < latent[y]; });
    std::stable_sort(by_target.begin(), by_target.end(),
                     [&](std::size_t x, std::size_t y) { return target[x] < target[y]; });
    for (std::size_t k = 0; k < n; ++k) placed[by_target[k]] = by_latent[k];

    char buf[16];
    std::snprintf(buf, sizeof buf, "%04zu", a);
    Album album;
    album.album_id = prefix + buf;
    album.split = hash_split(album.album_id);
    for (std::size_t j = 0; j < n; ++j) {
      const double u = latent[placed[j]];
      std::vector<double> stats(kFeatureSize);
      for (auto& v : stats) v = normal(rng);
      for (std::size_t k = 0; k < slots.size(); ++k) {
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        stats[slots[k]] = sign * u + config.noise_sigma * normal(rng);
      }
      const std::string track_id = album.album_id + "-t" + std::to_string(j + 1);
      const double planted = stats[slots.front()];
      scalars.rows[track_id] = {u, planted, normal(rng)};
      album.tracks.emplace_back(track_id, std::move(stats));
    }
    ds.albums.push_back(std::move(album));
  }
  ds.scalars = std::move(scalars);
  return ds;
}

Dataset merge_datasets(const Dataset& a, const Dataset& b) {
  Dataset out = a;
  std::set<std::string> ids;
  for (const auto& al : a.albums) ids.insert(al.album_id);
  for (const auto& al : b.albums) {
    if (!ids.insert(al.album_id).second)
      throw std::invalid_argument("merge: duplicate album id '" + al.album_id + "'");
    out.albums.push_back(al);
  }
  if (b.scalars) {
    if (!out.scalars) {
      out.scalars = b.scalars;
    } else {
      if (out.scalars->names != b.scalars->names)
        throw std::invalid_argument("merge: scalar tables have different columns");
      for (const auto& [id, row] : b.scalars->rows) out.scalars->rows[id] = row;
    }
  }
  return out;
}

}  // namespace nd
