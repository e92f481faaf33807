#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "narrative/eval.hpp"
#include "narrative/fitcurve.hpp"
#include "narrative/ingest.hpp"
#include "narrative/io.hpp"
#include "narrative/persist.hpp"
#include "run_config.hpp"

namespace nd::cli {

namespace fs = std::filesystem;

namespace {

struct Context {
  RunConfig cfg;
  fs::path out_dir;
  unsigned threads = 1;
  std::ostream* out = nullptr;

  Provenance prov() const { return {cfg.hash, cfg.seed}; }
  void write(const std::string& name, const std::string& content) const {
    write_file_atomic(out_dir / name, content);
    spdlog::info("wrote {}", (out_dir / name).string());
  }
};

const fs::path& require(const std::optional<fs::path>& p, const char* key) {
  if (!p) throw ConfigError(std::string("config: data.") + key + " is required for this command");
  if (!fs::is_regular_file(*p)) throw ConfigError("input file not found: " + p->string());
  return *p;
}

void check_optional(const std::optional<fs::path>& p) {
  if (p && !fs::is_regular_file(*p)) throw ConfigError("input file not found: " + p->string());
}

Dataset load_dataset(const Context& ctx) {
  LoadReport report;
  Dataset ds = load_feature_table(require(ctx.cfg.data.features, "features"), &report);
  spdlog::info("loaded {} albums ({} rows, {} dropped without album, {} filtered by length)",
               report.albums_loaded, report.rows, report.dropped_missing_album, report.albums_filtered_out);
  check_optional(ctx.cfg.data.scalars);
  if (ctx.cfg.data.scalars) ds.scalars = load_scalar_table(*ctx.cfg.data.scalars);
  return ds;
}

Dataset choose(const Dataset& ds, const SplitChoice& s) { return s.split ? select_split(ds, *s.split) : ds; }

// Essence per track for the albums of `ds`, from an essence table when
// configured, otherwise from a model.
std::map<std::string, std::vector<double>> essence_lookup(const Context& ctx, const Dataset& ds) {
  std::map<std::string, std::vector<double>> out;
  if (ctx.cfg.data.essence) {
    const auto& path = require(ctx.cfg.data.essence, "essence");
    for (auto& r : parse_essence_csv(read_file(path), path.string())) out[r.track_id] = std::move(r.values);
    return out;
  }
  if (!ctx.cfg.data.model) throw ConfigError("config: data.essence or data.model is required for this command");
  const EssenceModel model = model_from_json(load_json(require(ctx.cfg.data.model, "model")));
  for (const auto& a : ds.albums) {
    const Matrix e = extract_album(model, a);
    for (std::size_t j = 0; j < a.length(); ++j)
      out[a.tracks[j].track_id()] = std::vector<double>(e.row(j).begin(), e.row(j).end());
  }
  return out;
}

std::vector<EssenceSeries> album_series(const Context& ctx, const Dataset& ds) {
  const auto lookup = essence_lookup(ctx, ds);
  const std::size_t col = ctx.cfg.essence_column - 1;
  std::vector<EssenceSeries> out;
  for (const auto& a : ds.albums) {
    EssenceSeries s;
    s.album_id = a.album_id;
    for (const auto& t : a.tracks) {
      auto it = lookup.find(t.track_id());
      if (it == lookup.end()) throw std::runtime_error("missing essence for track '" + t.track_id() + "'");
      if (col >= it->second.size())
        throw ConfigError("config: templates.essence_column exceeds the essence dimension");
      s.values.push_back(it->second[col]);
    }
    out.push_back(to_minmax(s));
  }
  return out;
}

TemplateSet load_templates(const Context& ctx) {
  return templates_from_json(load_json(require(ctx.cfg.data.templates, "templates")));
}

std::string essence_table(const EssenceModel& model, const Dataset& ds, const Provenance& p) {
  std::vector<EssenceRow> rows;
  for (const auto& a : ds.albums) {
    const Matrix e = extract_album(model, a);
    for (std::size_t j = 0; j < a.length(); ++j)
      rows.push_back({a.tracks[j].track_id(), std::vector<double>(e.row(j).begin(), e.row(j).end())});
  }
  return format_essence_csv(rows, p);
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

// ---- commands ----

void cmd_synth(const Context& ctx) {
  Dataset ds;
  for (std::size_t i = 0; i < ctx.cfg.synth.shapes.size(); ++i) {
    SynthConfig sc{ctx.cfg.synth.n_albums, ctx.cfg.synth.length_min, ctx.cfg.synth.length_max,
                   ctx.cfg.synth.shapes[i], ctx.cfg.synth.noise_sigma, ctx.cfg.seed + i};
    ds = merge_datasets(ds, synth_generate(sc));
  }
  const std::string head = provenance_line(ctx.prov());
  ctx.write("features.csv", head + format_feature_table(ds));
  ctx.write("scalars.csv", head + format_scalar_table(*ds.scalars));
  *ctx.out << "albums: " << ds.albums.size() << "\ntracks: " << ds.track_count() << "\n";
}

void cmd_train(const Context& ctx) {
  const Dataset ds = load_dataset(ctx);
  const Provenance p = ctx.prov();
  if (ctx.cfg.sweep.dims.empty()) {
    const TrainResult r = train(ds, ctx.cfg.train);
    ctx.write("model.json", dump(model_to_json(r.model, ctx.cfg.train, r.best_validation_loss, p)));
    ctx.write("history.csv", format_history_csv(r.history, p));
    ctx.write("essence.csv", essence_table(r.model, ds, p));
    *ctx.out << "best epoch: " << r.best_epoch << "\nvalidation MI bound: " << fmt(r.best_validation_mi_bits)
             << " bits\n";
    return;
  }
  std::string summary = provenance_line(p) + "essence_dim,runs,mi_mean_bits,mi_std_bits\n";
  for (std::size_t d : ctx.cfg.sweep.dims) {
    std::vector<double> mi;
    for (std::size_t run = 0; run < ctx.cfg.sweep.runs; ++run) {
      TrainConfig tc = ctx.cfg.train;
      tc.essence_dim = d;
      tc.seed = ctx.cfg.seed + run;
      const TrainResult r = train(ds, tc);
      const std::string tag = "_d" + std::to_string(d) + "_r" + std::to_string(run + 1);
      ctx.write("model" + tag + ".json", dump(model_to_json(r.model, tc, r.best_validation_loss, p)));
      ctx.write("history" + tag + ".csv", format_history_csv(r.history, p));
      mi.push_back(r.best_validation_mi_bits);
    }
    const double mean = std::accumulate(mi.begin(), mi.end(), 0.0) / static_cast<double>(mi.size());
    double ss = 0.0;
    for (double v : mi) ss += (v - mean) * (v - mean);
    const double sd = mi.size() > 1 ? std::sqrt(ss / static_cast<double>(mi.size() - 1)) : 0.0;
    summary += std::to_string(d) + "," + std::to_string(mi.size()) + "," + format_double(mean) + "," +
               format_double(sd) + "\n";
    *ctx.out << "d=" << d << ": " << fmt(mean) << " bits (sd " << fmt(sd) << ")\n";
  }
  ctx.write("sweep.csv", summary);
}

void cmd_probe(const Context& ctx) {
  const Dataset ds = load_dataset(ctx);
  std::vector<std::pair<std::string, FeatureMap>> features;
  if (ctx.cfg.data.model) {
    const EssenceModel model = model_from_json(load_json(require(ctx.cfg.data.model, "model")));
    features.emplace_back("essence", essence_feature(model, ds));
  }
  if (ds.scalars) {
    auto names = ctx.cfg.probe.features.empty() ? ds.scalars->names : ctx.cfg.probe.features;
    for (const auto& n : names) {
      if (std::find(ds.scalars->names.begin(), ds.scalars->names.end(), n) == ds.scalars->names.end())
        throw ConfigError("config: probe feature '" + n + "' is not a scalar column");
      features.emplace_back(n, feature_from_scalars(*ds.scalars, n));
    }
  } else if (!ctx.cfg.probe.features.empty()) {
    throw ConfigError("config: probe.features needs data.scalars");
  }
  if (features.empty()) throw ConfigError("config: nothing to probe (give data.scalars or data.model)");
  if (ctx.cfg.probe.negate) {
    const std::size_t n = features.size();
    for (std::size_t i = 0; i < n; ++i) features.emplace_back("-" + features[i].first, negate(features[i].second));
  }
  std::string table = provenance_line(ctx.prov()) + "feature,validation_mi_bits,dropped_tracks\n";
  for (const auto& [name, f] : features) {
    const ProbeResult r = probe_feature_mi(ds, f, ctx.cfg.train);
    table += name + "," + format_double(r.validation_mi_bits) + "," + std::to_string(r.dropped_tracks) + "\n";
    *ctx.out << name << ": " << fmt(r.validation_mi_bits) << " bits\n";
  }
  ctx.write("probe.csv", table);
}

void cmd_extract_templates(const Context& ctx) {
  const Dataset ds = choose(load_dataset(ctx), ctx.cfg.template_split);
  const auto albums = album_series(ctx, ds);
  if (albums.empty()) throw std::runtime_error("no albums in the selected split");
  GAConfig ga = ctx.cfg.ga;
  ga.threads = ctx.threads;
  const EvolveResult r = evolve_templates(albums, ga);
  ctx.write("templates.json", dump(templates_to_json(r.best, r.best_cost, ctx.prov())));
  ctx.write("template_history.csv", format_cost_history_csv(r.history, ctx.prov()));
  *ctx.out << "templates: " << r.best.k() << "\nfinal cost: " << fmt(r.best_cost, 6) << "\n";
}

void cmd_fit(const Context& ctx) {
  const Dataset ds = choose(load_dataset(ctx), ctx.cfg.eval_split);
  const TemplateSet set = load_templates(ctx);
  const auto albums = album_series(ctx, ds);
  std::vector<TemplateCurve> curves;
  for (std::size_t p = 0; p < set.k(); ++p) curves.push_back(template_curve(set, p));
  std::string table = provenance_line(ctx.prov()) + "album_id,template,bottleneck,total_deviation,ordering\n";
  for (const auto& a : albums) {
    for (std::size_t p = 0; p < set.k(); ++p) {
      const FitResult f = fit_ordering(a, curves[p]);
      std::string ord;
      for (auto v : f.ordering.one_based()) ord += (ord.empty() ? "" : " ") + std::to_string(v);
      table += a.album_id + "," + std::to_string(p + 1) + "," + format_double(f.bottleneck) + "," +
               format_double(f.total_deviation) + "," + ord + "\n";
    }
  }
  ctx.write("fits.csv", table);
  *ctx.out << "albums fitted: " << albums.size() << "\n";
}

void cmd_reorder(const Context& ctx) {
  const auto& path = require(ctx.cfg.data.album, "album");
  const auto rows = parse_essence_csv(read_file(path), path.string());
  const TemplateSet set = load_templates(ctx);
  const std::size_t col = ctx.cfg.essence_column - 1;
  if (rows.size() < 2) throw std::runtime_error(path.string() + ": album needs at least 2 tracks");
  EssenceSeries s;
  s.album_id = path.stem().string();
  for (const auto& r : rows) {
    if (col >= r.values.size()) throw ConfigError("config: templates.essence_column exceeds the essence dimension");
    s.values.push_back(r.values[col]);
  }
  s = to_minmax(s);
  std::vector<std::size_t> chosen;
  if (ctx.cfg.reorder_template) {
    if (*ctx.cfg.reorder_template > set.k())
      throw ConfigError("config: reorder.template " + std::to_string(*ctx.cfg.reorder_template) +
                        " out of range (k = " + std::to_string(set.k()) + ")");
    chosen.push_back(*ctx.cfg.reorder_template - 1);
  } else {
    chosen.resize(set.k());
    std::iota(chosen.begin(), chosen.end(), std::size_t{0});
  }
  json fits = json::array();
  for (std::size_t p : chosen) {
    const FitResult f = fit_ordering(s, template_curve(set, p));
    json j = fit_to_json(s.album_id, p + 1, f);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < f.ordering.size(); ++i) ids.push_back(rows[f.ordering[i]].track_id);
    j["track_ids"] = ids;
    fits.push_back(std::move(j));
    *ctx.out << "template " << p + 1 << ":";
    for (auto v : f.ordering.one_based()) *ctx.out << " " << v;
    *ctx.out << "  (max deviation " << fmt(f.bottleneck) << ")\n";
  }
  const json doc{{"format", "orderings"},     {"config_hash", ctx.cfg.hash}, {"seed", ctx.cfg.seed},
                 {"album_id", s.album_id},    {"fits", fits}};
  ctx.write("orderings.json", dump(doc));
}

void cmd_evaluate(const Context& ctx) {
  const Dataset ds = choose(load_dataset(ctx), ctx.cfg.eval_split);
  const TemplateSet set = load_templates(ctx);
  if (ctx.cfg.eval_k && *ctx.cfg.eval_k != set.k())
    throw ConfigError("config: eval.k = " + std::to_string(*ctx.cfg.eval_k) + " but the template file has k = " +
                      std::to_string(set.k()));
  const auto albums = album_series(ctx, ds);
  const EvalReport r = evaluate_templates(albums, set, derive_seed(ctx.cfg.seed, "evaluate"), ctx.cfg.alpha,
                                          ctx.threads);
  ctx.write("report.json", dump(report_to_json(r, ctx.prov())));
  ctx.write("plot.tsv", format_plot_tsv(r, ctx.prov()));
  for (const auto& s : r.summary) *ctx.out << s.condition << ": " << fmt(s.mean) << " +- " << fmt(s.stderr_) << "\n";
  for (std::size_t i = 0; i < r.p_values.size(); ++i)
    *ctx.out << r.comparisons[i] << ": p = " << r.p_values[i] << (r.rejections[i] ? " (rejected)" : "") << "\n";
}

void cmd_plot_data(const Context& ctx) {
  if (!ctx.cfg.data.report && !ctx.cfg.data.templates)
    throw ConfigError("config: plot-data needs data.report and/or data.templates");
  if (ctx.cfg.data.report) {
    const EvalReport r = report_from_json(load_json(require(ctx.cfg.data.report, "report")));
    ctx.write("plot.tsv", format_plot_tsv(r, ctx.prov()));
  }
  if (ctx.cfg.data.templates) {
    const TemplateSet set = load_templates(ctx);
    ctx.write("curves.tsv", format_curve_tsv(set, ctx.cfg.plot_points, ctx.prov()));
    if (ctx.cfg.plot_svg) ctx.write("curves.svg", format_curve_svg(set, ctx.cfg.plot_points, ctx.prov()));
  }
}

void configure_logging() {
  static bool done = false;
  if (!done) {
    auto logger = spdlog::stderr_color_mt("nd");
    spdlog::set_default_logger(logger);
    done = true;
  }
  spdlog::set_level(spdlog::level::warn);
  if (const char* lvl = std::getenv("ND_LOG")) spdlog::set_level(spdlog::level::from_str(lvl));
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  configure_logging();
  CLI::App app{"Narrative essence, template extraction and reordering", "nd"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string out_dir = ".";

  using Handler = void (*)(const Context&);
  const std::vector<std::tuple<std::string, std::string, Handler>> commands = {
      {"synth", "generate a planted synthetic dataset", cmd_synth},
      {"train", "train the essence model (optionally a dimension sweep)", cmd_train},
      {"probe", "estimate the MI bound of fixed per-track features", cmd_probe},
      {"extract-templates", "evolve template curves from essence values", cmd_extract_templates},
      {"fit", "fit every album to every template", cmd_fit},
      {"evaluate", "score templates against ground truth with baselines and tests", cmd_evaluate},
      {"reorder", "reorder one album to one or all templates", cmd_reorder},
      {"plot-data", "emit plot tables and template curves", cmd_plot_data},
  };
  std::map<std::string, Handler> handlers;
  for (const auto& [name, desc, fn] : commands) {
    auto* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path, "run configuration (JSON)")->required();
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 1024u));
    sub->add_option("--out", out_dir, "output directory");
    handlers[name] = fn;
  }

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    Context ctx;
    ctx.cfg = load_run_config(config_path, seed);
    ctx.threads = threads;
    ctx.out = &out;
    ctx.out_dir = out_dir;
    std::error_code ec;
    if (fs::exists(ctx.out_dir) && !fs::is_directory(ctx.out_dir))
      throw ConfigError("output path is not a directory: " + ctx.out_dir.string());
    fs::create_directories(ctx.out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + ctx.out_dir.string() + ": " + ec.message());
    handlers.at(app.get_subcommands().front()->get_name())(ctx);
    return 0;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace nd::cli
