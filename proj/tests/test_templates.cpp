#include <doctest.h>

#include <random>

#include "narrative/templates.hpp"

using namespace nd;

namespace {

EssenceSeries mm(std::vector<double> v) { return to_minmax(EssenceSeries{"a", std::move(v), Normalization::raw}); }

std::vector<EssenceSeries> random_albums(std::mt19937_64& rng, std::size_t count) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<EssenceSeries> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> v(3 + rng() % 10);
    for (auto& x : v) x = u(rng);
    out.push_back(mm(v));
    out.back().album_id = "a" + std::to_string(i);
  }
  return out;
}

TemplateSet random_set(std::mt19937_64& rng, std::size_t k) {
  std::normal_distribution<double> g(0.5, 0.5);
  TemplateSet s{default_grid(), {}};
  for (std::size_t p = 0; p < k; ++p) {
    std::vector<double> t(7);
    for (auto& v : t) v = g(rng);
    s.templates.push_back(t);
  }
  return s;
}

}  // namespace

TEST_CASE("template cost examples") {
  const TemplateSet zero{default_grid(), {std::vector<double>(7, 0.0)}};
  const std::vector<EssenceSeries> one{mm({0, 0.5, 1})};
  CHECK(std::fabs(template_cost(zero, one) - 1.25 / 3.0) <= 1e-9);

  // Values equal to the template's own spline samples cost 0.
  // Series tagged min-max directly so the values are not stretched.
  const TemplateSet t{default_grid(), {{0.35, 0.4, 0.3, 0.45, 0.5, 0.4, 0.45}}};
  const auto curve = template_curve(t, 0);
  EssenceSeries own{"own", {}, Normalization::minmax};
  for (double x : relative_positions(6)) own.values.push_back(curve.eval(x));
  CHECK(template_cost(t, {own}) <= 1e-24);

  CHECK_THROWS(template_cost(zero, {}));
  CHECK_THROWS(template_cost(zero, {EssenceSeries{"raw", {0.1, 0.2, 0.3}, Normalization::raw}}));
}

TEST_CASE("effective controls renormalize only out-of-range genes") {
  CHECK(effective_controls(std::vector<double>{0.2, 0.4}) == std::vector<double>{0.2, 0.4});
  CHECK(effective_controls(std::vector<double>{-1.0, 0.0, 1.0}) == std::vector<double>{0.0, 0.5, 1.0});
}

TEST_CASE("cost properties") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    auto albums = random_albums(rng, 8);
    auto set = random_set(rng, 3);
    const double c = template_cost(set, albums);
    // Album order does not matter.
    auto shuffled = albums;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(template_cost(set, shuffled) == doctest::Approx(c).epsilon(1e-12));
    // Template order does not matter.
    auto rev = set;
    std::reverse(rev.templates.begin(), rev.templates.end());
    CHECK(template_cost(rev, albums) == doctest::Approx(c).epsilon(1e-12));
    // Adding a template never increases the cost.
    auto more = set;
    more.templates.push_back(random_set(rng, 1).templates[0]);
    CHECK(template_cost(more, albums) <= c + 1e-12);
  }
}

TEST_CASE("GA history, elitism and reproducibility") {
  std::mt19937_64 rng(42);
  const auto albums = random_albums(rng, 30);
  GAConfig cfg;
  cfg.k = 2;
  cfg.population = 16;
  cfg.children = 16;
  cfg.generations = 60;
  cfg.stagnation_patience = 0;
  cfg.seed = 9;
  const auto a = evolve_templates(albums, cfg);
  CHECK(a.history.size() == 60);
  for (std::size_t g = 1; g < a.history.size(); ++g) CHECK(a.history[g] <= a.history[g - 1]);
  CHECK(a.best_cost == a.history.back());
  CHECK(template_cost(a.best, albums) == doctest::Approx(a.best_cost).epsilon(1e-12));
  const auto b = evolve_templates(albums, cfg);
  CHECK(a.best.templates == b.best.templates);
  cfg.threads = 3;
  CHECK(evolve_templates(albums, cfg).best.templates == a.best.templates);

  cfg.threads = 1;
  cfg.stagnation_patience = 3;
  cfg.generations = 1000;
  const auto stopped = evolve_templates(albums, cfg);
  CHECK(stopped.history.size() < 1000);
}

TEST_CASE("a zero-cost individual survives") {
  const TemplateSet perfect{default_grid(), {{0, 0.2, 0.3, 0.5, 0.65, 0.8, 1.0}}};
  std::vector<EssenceSeries> albums;
  for (std::size_t n = 3; n < 12; ++n) albums.push_back(mm(relative_positions(n)));
  GAConfig cfg;
  cfg.k = 1;
  cfg.population = 8;
  cfg.children = 8;
  cfg.generations = 20;
  const auto r = evolve_templates(albums, cfg, default_grid(), std::span<const TemplateSet>(&perfect, 1));
  CHECK(r.best_cost <= 1e-24);
  for (double h : r.history) CHECK(h <= 1e-24);
}

TEST_CASE("GA config validation") {
  GAConfig c;
  c.population = 1;
  CHECK_THROWS(c.validate());
  c = GAConfig{};
  c.children = 0;
  CHECK_THROWS(c.validate());
  c = GAConfig{};
  c.k = 0;
  CHECK_THROWS(c.validate());
  c = GAConfig{};
  c.crossover_prob = 1.5;
  CHECK_THROWS(c.validate());
}
