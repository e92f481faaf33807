#include "narrative/persist.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

#include "narrative/io.hpp"
#include "narrative/rng.hpp"

namespace nd {

namespace {

constexpr int kFormatVersion = 1;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw std::invalid_argument(where + ": unknown key '" + it.key() + "'");
}

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::vector<double> finite_array(const json& j, const std::string& what) {
  if (!j.is_array()) throw std::invalid_argument(what + ": expected an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw std::invalid_argument(what + ": non-numeric entry");
    out.push_back(v.get<double>());
  }
  return out;
}

void check_finite_out(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": non-finite value");
}

std::string fixed(double v) {
  return format_double(v);
}

// Text lines of a CSV/TSV body, skipping blank and '#' comment lines.
std::vector<std::pair<std::size_t, std::string_view>> data_lines(std::string_view text) {
  std::vector<std::pair<std::size_t, std::string_view>> out;
  std::size_t line_no = 0, pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty() && line.front() != '#') out.emplace_back(line_no, line);
    if (end == text.size()) break;
    pos = end + 1;
  }
  return out;
}

}  // namespace

std::string config_hash(const json& config) { return hex64(fnv1a(config.dump())); }

std::string provenance_line(const Provenance& p) {
  return "# config_hash=" + p.config_hash + " seed=" + std::to_string(p.seed) + "\n";
}

json to_json(const TrainConfig& c) {
  return json{{"batch_size", c.batch_size},
              {"negatives", c.negatives},
              {"learning_rate", c.learning_rate},
              {"dropout", c.dropout},
              {"weight_decay_scorer", c.weight_decay_scorer},
              {"max_epochs", c.max_epochs},
              {"patience", c.patience},
              {"essence_dim", c.essence_dim},
              {"extractor_hidden", c.extractor_hidden},
              {"scorer_hidden", c.scorer_hidden},
              {"validation_draws", c.validation_draws}};
}

TrainConfig train_config_from_json(const json& j) {
  reject_unknown(j,
                 {"batch_size", "negatives", "learning_rate", "dropout", "weight_decay_scorer",
                  "max_epochs", "patience", "essence_dim", "extractor_hidden", "scorer_hidden",
                  "validation_draws"},
                 "train");
  TrainConfig c;
  read_opt(j, "batch_size", c.batch_size);
  read_opt(j, "negatives", c.negatives);
  read_opt(j, "learning_rate", c.learning_rate);
  read_opt(j, "dropout", c.dropout);
  read_opt(j, "weight_decay_scorer", c.weight_decay_scorer);
  read_opt(j, "max_epochs", c.max_epochs);
  read_opt(j, "patience", c.patience);
  read_opt(j, "essence_dim", c.essence_dim);
  read_opt(j, "extractor_hidden", c.extractor_hidden);
  read_opt(j, "scorer_hidden", c.scorer_hidden);
  read_opt(j, "validation_draws", c.validation_draws);
  return c;
}

json to_json(const GAConfig& c) {
  return json{{"population", c.population},       {"children", c.children},
              {"k", c.k},                         {"crossover_prob", c.crossover_prob},
              {"generations", c.generations},     {"stagnation_patience", c.stagnation_patience}};
}

GAConfig ga_config_from_json(const json& j) {
  reject_unknown(j, {"population", "children", "k", "crossover_prob", "generations", "stagnation_patience"},
                 "ga");
  GAConfig c;
  read_opt(j, "population", c.population);
  read_opt(j, "children", c.children);
  read_opt(j, "k", c.k);
  read_opt(j, "crossover_prob", c.crossover_prob);
  read_opt(j, "generations", c.generations);
  read_opt(j, "stagnation_patience", c.stagnation_patience);
  return c;
}

json model_to_json(const EssenceModel& model, const TrainConfig& config, double best_validation_loss,
                   const Provenance& p) {
  model.validate();
  check_finite_out(model.input_mean, "model input_mean");
  check_finite_out(model.input_scale, "model input_scale");
  return json{{"format", "essence-model"},
              {"version", kFormatVersion},
              {"config_hash", p.config_hash},
              {"seed", p.seed},
              {"essence_dim", model.essence_dim()},
              {"extractor",
               {{"input", model.extractor_arch.input},
                {"hidden", model.extractor_arch.hidden},
                {"output", model.extractor_arch.output},
                {"dropout", model.extractor_arch.dropout}}},
              {"scorer", {{"essence_dim", model.scorer_arch.essence_dim}, {"hidden", model.scorer_arch.hidden}}},
              {"train_config", to_json(config)},
              {"best_validation_loss", best_validation_loss},
              {"input_mean", model.input_mean},
              {"input_scale", model.input_scale},
              {"extractor_params", model.extractor_params},
              {"scorer_params", model.scorer_params}};
}

EssenceModel model_from_json(const json& j) {
  if (!j.is_object() || j.value("format", std::string{}) != "essence-model")
    throw std::invalid_argument("not a model file");
  if (j.at("version").get<int>() != kFormatVersion)
    throw std::invalid_argument("unsupported model version");
  EssenceModel m;
  const auto& ex = j.at("extractor");
  m.extractor_arch.input = ex.at("input").get<std::size_t>();
  m.extractor_arch.hidden = ex.at("hidden").get<std::size_t>();
  m.extractor_arch.output = ex.at("output").get<std::size_t>();
  m.extractor_arch.dropout = ex.at("dropout").get<double>();
  const auto& sc = j.at("scorer");
  m.scorer_arch.essence_dim = sc.at("essence_dim").get<std::size_t>();
  m.scorer_arch.hidden = sc.at("hidden").get<std::size_t>();
  if (j.at("essence_dim").get<std::size_t>() != m.extractor_arch.output)
    throw std::invalid_argument("model: essence_dim does not match the extractor output");
  m.input_mean = finite_array(j.at("input_mean"), "input_mean");
  m.input_scale = finite_array(j.at("input_scale"), "input_scale");
  m.extractor_params = finite_array(j.at("extractor_params"), "extractor_params");
  m.scorer_params = finite_array(j.at("scorer_params"), "scorer_params");
  m.validate();
  return m;
}

json templates_to_json(const TemplateSet& set, double final_cost, const Provenance& p) {
  set.validate();
  return json{{"format", "template-set"}, {"version", kFormatVersion},
              {"config_hash", p.config_hash}, {"seed", p.seed},
              {"k", set.k()},                 {"xs", set.xs},
              {"templates", set.templates},   {"final_cost", final_cost}};
}

TemplateSet templates_from_json(const json& j) {
  if (!j.is_object() || j.value("format", std::string{}) != "template-set")
    throw std::invalid_argument("not a template-set file");
  TemplateSet s;
  s.xs = finite_array(j.at("xs"), "xs");
  for (const auto& row : j.at("templates")) s.templates.push_back(finite_array(row, "templates"));
  if (j.at("k").get<std::size_t>() != s.k())
    throw std::invalid_argument("template-set: k does not match the template count");
  s.validate();
  return s;
}

json report_to_json(const EvalReport& r, const Provenance& p) {
  json albums = json::array();
  for (const auto& a : r.albums)
    albums.push_back({{"album_id", a.album_id},
                      {"length", a.length},
                      {"best_template", a.best_template},
                      {"learned", a.learned},
                      {"random_orderings", a.random_baseline},
                      {"shuffled_essence", a.shuffled_baseline}});
  json summary = json::array();
  for (const auto& s : r.summary)
    summary.push_back({{"condition", s.condition}, {"mean", s.mean}, {"stderr", s.stderr_}});
  return json{{"format", "eval-report"},
              {"version", kFormatVersion},
              {"config_hash", p.config_hash},
              {"seed", p.seed},
              {"eval_seed", r.seed},
              {"alpha", r.alpha},
              {"comparisons", r.comparisons},
              {"p_values", r.p_values},
              {"rejections", r.rejections},
              {"summary", summary},
              {"albums", albums}};
}

EvalReport report_from_json(const json& j) {
  if (!j.is_object() || j.value("format", std::string{}) != "eval-report")
    throw std::invalid_argument("not an eval-report file");
  EvalReport r;
  r.seed = j.at("eval_seed").get<std::uint64_t>();
  r.alpha = j.at("alpha").get<double>();
  r.comparisons = j.at("comparisons").get<std::vector<std::string>>();
  r.p_values = j.at("p_values").get<std::vector<double>>();
  r.rejections = j.at("rejections").get<std::vector<bool>>();
  for (const auto& s : j.at("summary"))
    r.summary.push_back({s.at("condition").get<std::string>(), s.at("mean").get<double>(),
                         s.at("stderr").get<double>()});
  for (const auto& a : j.at("albums")) {
    AlbumEval e;
    e.album_id = a.at("album_id").get<std::string>();
    e.length = a.at("length").get<std::size_t>();
    e.best_template = a.at("best_template").get<std::size_t>();
    e.learned = a.at("learned").get<double>();
    e.random_baseline = a.at("random_orderings").get<double>();
    e.shuffled_baseline = a.at("shuffled_essence").get<double>();
    r.albums.push_back(std::move(e));
  }
  if (r.p_values.size() != r.rejections.size())
    throw std::invalid_argument("eval-report: p_values and rejections differ in length");
  return r;
}

json fit_to_json(const std::string& album_id, std::size_t template_index, const FitResult& fit) {
  return json{{"album_id", album_id},
              {"template", template_index},
              {"ordering", fit.ordering.one_based()},
              {"bottleneck", fit.bottleneck},
              {"total_deviation", fit.total_deviation},
              {"per_position_deviation", fit.per_position_deviation}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json load_json(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + ": invalid JSON: " + e.what());
  }
}

std::string format_essence_csv(const std::vector<EssenceRow>& rows, const Provenance& p) {
  const std::size_t d = rows.empty() ? 1 : rows.front().values.size();
  std::string out = provenance_line(p) + "track_id";
  for (std::size_t k = 1; k <= d; ++k) out += ",essence_" + std::to_string(k);
  out += '\n';
  for (const auto& r : rows) {
    if (r.values.size() != d) throw std::invalid_argument("essence rows differ in dimension");
    out += r.track_id;
    for (double v : r.values) out += "," + fixed(v);
    out += '\n';
  }
  return out;
}

std::vector<EssenceRow> parse_essence_csv(std::string_view text, const std::string& source) {
  const auto lines = data_lines(text);
  if (lines.empty()) throw ParseError(source, 1, "missing header");
  const auto header = split_csv_line(lines.front().second);
  if (header.size() < 2 || header[0] != "track_id")
    throw ParseError(source, lines.front().first, "header must be track_id,essence_1,...");
  for (std::size_t k = 1; k < header.size(); ++k)
    if (header[k] != "essence_" + std::to_string(k))
      throw ParseError(source, lines.front().first, "unexpected column '" + header[k] + "'");
  std::vector<EssenceRow> rows;
  std::set<std::string> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split_csv_line(lines[i].second);
    if (f.size() != header.size())
      throw ParseError(source, lines[i].first,
                       "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
    EssenceRow r;
    r.track_id = f[0];
    if (r.track_id.empty()) throw ParseError(source, lines[i].first, "empty track_id");
    if (!seen.insert(r.track_id).second)
      throw ParseError(source, lines[i].first, "duplicate track_id '" + r.track_id + "'");
    for (std::size_t k = 1; k < f.size(); ++k) {
      try {
        r.values.push_back(parse_double(f[k]));
      } catch (const std::invalid_argument& e) {
        throw ParseError(source, lines[i].first, e.what());
      }
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string format_history_csv(const std::vector<EpochRecord>& history, const Provenance& p) {
  std::string out = provenance_line(p) + "epoch,train_loss,validation_loss,validation_mi_bits\n";
  for (const auto& h : history)
    out += std::to_string(h.epoch) + "," + fixed(h.train_loss) + "," + fixed(h.validation_loss) + "," +
           fixed(h.validation_mi_bits) + "\n";
  return out;
}

std::string format_cost_history_csv(const std::vector<double>& history, const Provenance& p) {
  std::string out = provenance_line(p) + "generation,best_cost\n";
  for (std::size_t g = 0; g < history.size(); ++g)
    out += std::to_string(g + 1) + "," + fixed(history[g]) + "\n";
  return out;
}

std::string format_plot_tsv(const EvalReport& r, const Provenance& p) {
  std::string out = provenance_line(p) + "condition\tmean\tstderr\n";
  for (const auto& s : r.summary) out += s.condition + "\t" + fixed(s.mean) + "\t" + fixed(s.stderr_) + "\n";
  return out;
}

namespace {

std::vector<std::vector<double>> sample_curves(const TemplateSet& set, std::size_t points) {
  if (points < 2) throw std::invalid_argument("curve sampling needs at least 2 points");
  std::vector<std::vector<double>> out;
  for (std::size_t p = 0; p < set.k(); ++p) {
    const TemplateCurve c = template_curve(set, p);
    std::vector<double> ys(points);
    for (std::size_t i = 0; i < points; ++i)
      ys[i] = c.eval(static_cast<double>(i) / static_cast<double>(points - 1));
    out.push_back(std::move(ys));
  }
  return out;
}

}  // namespace

std::string format_curve_tsv(const TemplateSet& set, std::size_t points, const Provenance& p) {
  set.validate();
  const auto curves = sample_curves(set, points);
  std::string out = provenance_line(p) + "x";
  for (std::size_t t = 1; t <= set.k(); ++t) out += "\ttemplate_" + std::to_string(t);
  out += '\n';
  for (std::size_t i = 0; i < points; ++i) {
    out += fixed(static_cast<double>(i) / static_cast<double>(points - 1));
    for (const auto& c : curves) out += "\t" + fixed(c[i]);
    out += '\n';
  }
  return out;
}

std::string format_curve_svg(const TemplateSet& set, std::size_t points, const Provenance& p) {
  set.validate();
  const auto curves = sample_curves(set, points);
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                 "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};
  constexpr double W = 480, H = 320, M = 32;
  double lo = 0.0, hi = 1.0;
  for (const auto& c : curves)
    for (double v : c) lo = std::min(lo, v), hi = std::max(hi, v);
  auto px = [&](double x) { return M + x * (W - 2 * M); };
  auto py = [&](double y) { return H - M - (y - lo) / (hi - lo) * (H - 2 * M); };
  char buf[64];
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  s << "<!-- config_hash=" << p.config_hash << " seed=" << p.seed << " -->\n";
  s << "<rect x=\"" << M << "\" y=\"" << M << "\" width=\"" << W - 2 * M << "\" height=\"" << H - 2 * M
    << "\" fill=\"none\" stroke=\"#999\"/>\n";
  for (std::size_t t = 0; t < curves.size(); ++t) {
    s << "<polyline fill=\"none\" stroke-width=\"2\" stroke=\"" << colors[t % 8] << "\" points=\"";
    for (std::size_t i = 0; i < points; ++i) {
      std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", i ? " " : "",
                    px(static_cast<double>(i) / static_cast<double>(points - 1)), py(curves[t][i]));
      s << buf;
    }
    s << "\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace nd
