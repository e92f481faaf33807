#include "run_config.hpp"

#include <set>

#include "cli.hpp"
#include "narrative/io.hpp"
#include "narrative/persist.hpp"

namespace nd::cli {

namespace {

using nlohmann::json;

void allow(const json& j, const std::set<std::string>& keys, const std::string& where) {
  if (!j.is_object()) throw ConfigError("config: '" + where + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!keys.count(it.key())) throw ConfigError("config: unknown key '" + where + "." + it.key() + "'");
}

template <class T>
void opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

SplitChoice split_choice(const std::string& s) {
  if (s == "all") return SplitChoice{std::nullopt};
  return SplitChoice{parse_split(s)};
}

}  // namespace

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir,
                           std::optional<std::uint64_t> seed_override) {
  RunConfig c;
  try {
    allow(doc, {"version", "seed", "data", "synth", "train", "sweep", "probe", "ga", "templates", "eval",
                "reorder", "plot"},
          "");
    if (!doc.contains("version")) throw ConfigError("config: missing required key 'version'");
    if (doc.at("version").get<int>() != kConfigVersion)
      throw ConfigError("config: unsupported version " + doc.at("version").dump());
    opt(doc, "seed", c.seed);
    if (seed_override) c.seed = *seed_override;

    if (doc.contains("data")) {
      const auto& d = doc.at("data");
      allow(d, {"features", "scalars", "essence", "model", "templates", "report", "album"}, "data");
      auto path = [&](const char* key, std::optional<std::filesystem::path>& out) {
        if (!d.contains(key)) return;
        std::filesystem::path p = d.at(key).get<std::string>();
        out = p.is_absolute() ? p : base_dir / p;
      };
      path("features", c.data.features);
      path("scalars", c.data.scalars);
      path("essence", c.data.essence);
      path("model", c.data.model);
      path("templates", c.data.templates);
      path("report", c.data.report);
      path("album", c.data.album);
    }
    if (doc.contains("synth")) {
      const auto& s = doc.at("synth");
      allow(s, {"n_albums", "length_min", "length_max", "shapes", "noise_sigma"}, "synth");
      opt(s, "n_albums", c.synth.n_albums);
      opt(s, "length_min", c.synth.length_min);
      opt(s, "length_max", c.synth.length_max);
      opt(s, "noise_sigma", c.synth.noise_sigma);
      if (s.contains("shapes")) {
        c.synth.shapes.clear();
        for (const auto& v : s.at("shapes")) c.synth.shapes.push_back(parse_shape(v.get<std::string>()));
        if (c.synth.shapes.empty()) throw ConfigError("config: synth.shapes must not be empty");
      }
    }
    if (doc.contains("train")) c.train = train_config_from_json(doc.at("train"));
    c.train.seed = c.seed;
    if (doc.contains("sweep")) {
      const auto& s = doc.at("sweep");
      allow(s, {"dims", "runs"}, "sweep");
      opt(s, "dims", c.sweep.dims);
      opt(s, "runs", c.sweep.runs);
      if (c.sweep.runs == 0) throw ConfigError("config: sweep.runs must be positive");
      for (auto d : c.sweep.dims)
        if (d == 0) throw ConfigError("config: sweep.dims entries must be positive");
    }
    if (doc.contains("probe")) {
      const auto& p = doc.at("probe");
      allow(p, {"features", "negate"}, "probe");
      opt(p, "features", c.probe.features);
      opt(p, "negate", c.probe.negate);
    }
    if (doc.contains("ga")) c.ga = ga_config_from_json(doc.at("ga"));
    c.ga.seed = c.seed;
    if (doc.contains("templates")) {
      const auto& t = doc.at("templates");
      allow(t, {"split", "essence_column"}, "templates");
      if (t.contains("split")) c.template_split = split_choice(t.at("split").get<std::string>());
      opt(t, "essence_column", c.essence_column);
      if (c.essence_column == 0) throw ConfigError("config: templates.essence_column is 1-based");
    }
    if (doc.contains("eval")) {
      const auto& e = doc.at("eval");
      allow(e, {"split", "alpha", "k"}, "eval");
      if (e.contains("split")) c.eval_split = split_choice(e.at("split").get<std::string>());
      opt(e, "alpha", c.alpha);
      if (e.contains("k")) c.eval_k = e.at("k").get<std::size_t>();
      if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("config: eval.alpha must lie in (0, 1)");
    }
    if (doc.contains("reorder")) {
      const auto& r = doc.at("reorder");
      allow(r, {"template"}, "reorder");
      if (r.contains("template")) {
        const auto& t = r.at("template");
        if (t.is_string() && t.get<std::string>() == "all") {
          c.reorder_template.reset();
        } else {
          c.reorder_template = t.get<std::size_t>();
          if (*c.reorder_template == 0) throw ConfigError("config: reorder.template is 1-based");
        }
      }
    }
    if (doc.contains("plot")) {
      const auto& p = doc.at("plot");
      allow(p, {"points", "svg"}, "plot");
      opt(p, "points", c.plot_points);
      opt(p, "svg", c.plot_svg);
      if (c.plot_points < 2) throw ConfigError("config: plot.points must be at least 2");
    }
    c.train.validate();
    c.ga.validate();
    SynthConfig{c.synth.n_albums, c.synth.length_min, c.synth.length_max, LatentShape::rising,
                c.synth.noise_sigma, c.seed}
        .validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.canonical = doc;
  c.canonical["seed"] = c.seed;
  c.hash = config_hash(c.canonical);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
  if (!std::filesystem::is_regular_file(path)) throw ConfigError("config file not found: " + path.string());
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  return parse_run_config(doc, path.parent_path(), seed_override);
}

}  // namespace nd::cli
