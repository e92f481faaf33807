#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "narrative/io.hpp"
#include "narrative/persist.hpp"

using namespace nd;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run(const std::vector<std::string>& args, std::string* err_text = nullptr, std::string* out_text = nullptr) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  if (err_text) *err_text = err.str();
  if (out_text) *out_text = out.str();
  return code;
}

void write(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

}  // namespace

TEST_CASE("model JSON round trip") {
  auto m = EssenceModel::initialize({kFeatureSize, 4, 2, 0.1}, {2, 3}, 7);
  m.input_mean.assign(kFeatureSize, 0.25);
  const auto j = model_to_json(m, TrainConfig{}, 1.5, {"abc", 7});
  CHECK(j.at("config_hash") == "abc");
  CHECK(j.at("seed") == 7);
  CHECK(j.at("essence_dim") == 2);
  const auto back = model_from_json(json::parse(dump(j)));
  CHECK(back.extractor_params == m.extractor_params);
  CHECK(back.scorer_params == m.scorer_params);
  CHECK(back.input_mean == m.input_mean);
  CHECK(back.extractor_arch.hidden == 4);
  auto broken = j;
  broken["scorer_params"].erase(0);
  CHECK_THROWS(model_from_json(broken));
  CHECK_THROWS(model_from_json(json{{"format", "template-set"}}));
}

TEST_CASE("template set and report round trips") {
  const TemplateSet s{default_grid(), {{0, 1, 0, 1, 0, 1, 0}, {-2, 0.5, 3, 1, 1, 1, 1}}};
  const auto j = templates_to_json(s, 0.75, {"h", 3});
  for (const char* key : {"xs", "templates", "k", "seed", "final_cost", "config_hash"}) CHECK(j.contains(key));
  const auto back = templates_from_json(json::parse(dump(j)));
  CHECK(back.templates == s.templates);
  CHECK(back.xs == s.xs);
  auto bad = j;
  bad["k"] = 3;
  CHECK_THROWS(templates_from_json(bad));

  EvalReport r;
  r.albums = {{"a", 3, 1, 1.0, 0.5, 0.33}};
  r.summary = {{"learned", 1.0, 0.0}};
  r.comparisons = {"x"};
  r.p_values = {0.01};
  r.rejections = {true};
  r.seed = 4;
  const auto rb = report_from_json(json::parse(dump(report_to_json(r, {"h", 3}))));
  CHECK(rb.albums[0].best_template == 1);
  CHECK(rb.albums[0].shuffled_baseline == 0.33);
  CHECK(rb.rejections == r.rejections);
  CHECK(format_plot_tsv(rb, {"h", 3}) == "# config_hash=h seed=3\ncondition\tmean\tstderr\nlearned\t1\t0\n");
}

TEST_CASE("essence CSV") {
  const std::vector<EssenceRow> rows{{"t1", {0.25, 0.5}}, {"t2", {0.125, 1}}};
  const std::string text = format_essence_csv(rows, {"h", 1});
  CHECK(text.rfind("# config_hash=h seed=1\ntrack_id,essence_1,essence_2\n", 0) == 0);
  const auto back = parse_essence_csv(text, "mem");
  REQUIRE(back.size() == 2);
  CHECK(back[1].values == std::vector<double>{0.125, 1});
  CHECK_THROWS_AS(parse_essence_csv("track_id,essence_1\nt1,x\n", "mem"), ParseError);
  CHECK_THROWS_AS(parse_essence_csv("track_id,value\nt1,1\n", "mem"), ParseError);
  CHECK_THROWS_AS(parse_essence_csv("track_id,essence_1\nt1,1\nt1,2\n", "mem"), ParseError);
}

TEST_CASE("config hash is stable and key-order independent") {
  const auto a = json::parse(R"({"version":1,"ga":{"k":2,"population":8}})");
  const auto b = json::parse(R"({"ga":{"population":8,"k":2},"version":1})");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  CHECK(config_hash(a) != config_hash(json::parse(R"({"version":1,"ga":{"k":3,"population":8}})")));
}

TEST_CASE("CLI error contract") {
  TempDir dir("nd_cli_errors");
  std::string err;
  CHECK(run({"train", "--config", (dir.path / "missing.json").string()}, &err) == 2);
  CHECK(err.find("missing.json") != std::string::npos);

  write(dir.path / "nofeat.json", R"({"version":1,"data":{"features":"nowhere/features.csv"}})");
  CHECK(run({"train", "--config", (dir.path / "nofeat.json").string(), "--out", (dir.path / "o").string()}, &err) == 2);
  CHECK(err.find("nowhere/features.csv") != std::string::npos);

  write(dir.path / "unknown.json", R"({"version":1,"train":{"epochs":3}})");
  CHECK(run({"train", "--config", (dir.path / "unknown.json").string()}, &err) == 2);
  CHECK(err.find("epochs") != std::string::npos);

  write(dir.path / "nover.json", R"({"seed":1})");
  CHECK(run({"synth", "--config", (dir.path / "nover.json").string()}, &err) == 2);
  CHECK(err.find("version") != std::string::npos);

  write(dir.path / "badjson.json", "{ not json");
  CHECK(run({"synth", "--config", (dir.path / "badjson.json").string()}, &err) == 2);

  CHECK(run({"bogus"}, &err) == 2);
  CHECK(run({"synth"}, &err) == 2);
  CHECK(run({"synth", "--config", (dir.path / "nover.json").string(), "--threads", "0"}, &err) == 2);
}

TEST_CASE("CLI synth, reorder and plot-data") {
  TempDir dir("nd_cli_small");
  write(dir.path / "cfg.json", R"({"version":1,"seed":3,"synth":{"n_albums":12},
    "data":{"templates":"t.json","album":"album.csv"},"reorder":{"template":"all"}})");
  const std::string cfg = (dir.path / "cfg.json").string(), out = (dir.path / "out").string();
  REQUIRE(run({"synth", "--config", cfg, "--out", out}) == 0);
  const auto ds = load_feature_table(dir.path / "out" / "features.csv");
  CHECK(ds.albums.size() == 12);
  CHECK(read_file(dir.path / "out" / "features.csv").rfind("# config_hash=", 0) == 0);

  const TemplateSet set{default_grid(), {{0, 0.2, 0.3, 0.5, 0.65, 0.8, 1.0}, {1, 0.8, 0.7, 0.5, 0.35, 0.2, 0}}};
  write_file_atomic(dir.path / "t.json", dump(templates_to_json(set, 0.0, {"x", 0})));
  write(dir.path / "album.csv", "track_id,essence_1\nA,0.9\nB,0.1\nC,0.5\n");
  std::string text;
  REQUIRE(run({"reorder", "--config", cfg, "--out", out}, nullptr, &text) == 0);
  const auto j = load_json(dir.path / "out" / "orderings.json");
  REQUIRE(j.at("fits").size() == 2);
  CHECK(j.at("fits")[0].at("ordering") == std::vector<int>{2, 3, 1});
  CHECK(j.at("fits")[1].at("ordering") == std::vector<int>{1, 3, 2});
  CHECK(j.at("fits")[0].at("track_ids") == std::vector<std::string>{"B", "C", "A"});

  write(dir.path / "cfg2.json", R"({"version":1,"data":{"templates":"t.json","album":"album.csv"},"reorder":{"template":5}})");
  std::string err;
  CHECK(run({"reorder", "--config", (dir.path / "cfg2.json").string(), "--out", out}, &err) == 2);
  CHECK(err.find("out of range") != std::string::npos);

  write(dir.path / "cfg3.json", R"({"version":1,"data":{"templates":"t.json"},"plot":{"points":11}})");
  REQUIRE(run({"plot-data", "--config", (dir.path / "cfg3.json").string(), "--out", out}) == 0);
  const std::string tsv = read_file(dir.path / "out" / "curves.tsv");
  CHECK(std::count(tsv.begin(), tsv.end(), '\n') == 13);
  CHECK(read_file(dir.path / "out" / "curves.svg").find("config_hash=") != std::string::npos);
  for (const auto& e : fs::directory_iterator(dir.path / "out")) CHECK(e.path().extension() != ".tmp");
}
