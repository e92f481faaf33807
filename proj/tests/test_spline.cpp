#include <doctest.h>

#include <random>

#include "narrative/spline.hpp"
#include "oracles.hpp"

using namespace nd;

namespace {

std::vector<double> random_grid(std::mt19937_64& rng, std::size_t q) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> xs{0.0, 1.0};
  while (xs.size() < q) {
    const double x = u(rng);
    if (std::all_of(xs.begin(), xs.end(), [&](double v) { return std::fabs(v - x) > 0.02; })) xs.push_back(x);
  }
  std::sort(xs.begin(), xs.end());
  return xs;
}

}  // namespace

TEST_CASE("hand-derived value") {
  const TemplateCurve c({0.0, 0.5, 1.0}, {0.0, 1.0, 0.0});
  CHECK(std::fabs(c.eval(0.25) - 0.6875) <= 1e-9);
  CHECK(std::fabs(c.eval(0.75) - 0.6875) <= 1e-9);
}

TEST_CASE("default grid") {
  CHECK(default_grid() == std::vector<double>{0.0, 0.2, 0.3, 0.5, 0.65, 0.8, 1.0});
}

TEST_CASE("constant and linear reproduction") {
  const TemplateCurve c(default_grid(), std::vector<double>(7, 0.3));
  for (double x = 0; x <= 1.0; x += 0.01) CHECK(std::fabs(c.eval(x) - 0.3) <= 1e-12);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0, 2);
  for (int trial = 0; trial < 100; ++trial) {
    const auto xs = random_grid(rng, 2 + rng() % 8);
    const double a = g(rng), b = g(rng);
    std::vector<double> ys;
    for (double x : xs) ys.push_back(a + b * x);
    const TemplateCurve line(xs, ys);
    for (int i = 0; i <= 200; ++i) {
      const double x = i / 200.0;
      CHECK(std::fabs(line.eval(x) - (a + b * x)) <= 1e-9);
    }
  }
}

TEST_CASE("interpolation, continuity and agreement with a dense solve") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto xs = random_grid(rng, 2 + rng() % 9);
    std::vector<double> ys(xs.size());
    for (auto& y : ys) y = g(rng);
    const TemplateCurve c(xs, ys);
    for (std::size_t k = 0; k < xs.size(); ++k) CHECK(std::fabs(c.eval(xs[k]) - ys[k]) <= 1e-12);
    // Natural ends.
    CHECK(std::fabs(c.piece(0, 0.0).second) <= 1e-9);
    CHECK(std::fabs(c.piece(xs.size() - 2, 1.0).second) <= 1e-9);
    for (std::size_t k = 1; k + 1 < xs.size(); ++k) {
      const auto left = c.piece(k - 1, xs[k]), right = c.piece(k, xs[k]);
      CHECK(std::fabs(left.value - right.value) <= 1e-12);
      CHECK(std::fabs(left.first - right.first) <= 1e-9 * (1 + std::fabs(left.first)));
      CHECK(std::fabs(left.second - right.second) <= 1e-9 * (1 + std::fabs(left.second)));
    }
    const oracle::DenseSpline ref(xs, ys);
    for (int i = 0; i <= 100; ++i) CHECK(std::fabs(c.eval(i / 100.0) - ref(i / 100.0)) <= 1e-9);
  }
}

TEST_CASE("mirror symmetry") {
  const TemplateCurve c({0.0, 0.25, 0.5, 0.75, 1.0}, {0.1, 0.9, 0.3, 0.9, 0.1});
  for (int i = 0; i <= 100; ++i) CHECK(std::fabs(c.eval(i / 100.0) - c.eval(1.0 - i / 100.0)) <= 1e-9);
}

TEST_CASE("validation and domain") {
  CHECK_THROWS(TemplateCurve({0.0}, {1.0}));
  CHECK_THROWS(TemplateCurve({0.0, 0.5, 0.5, 1.0}, {0, 0, 0, 0}));
  CHECK_THROWS(TemplateCurve({0.1, 1.0}, {0, 0}));
  CHECK_THROWS(TemplateCurve({0.0, 0.9}, {0, 0}));
  CHECK_THROWS(TemplateCurve({0.0, 1.0}, {0, 0, 0}));
  CHECK_THROWS(TemplateCurve({0.0, 1.0}, {0, NAN}));
  const TemplateCurve c({0.0, 1.0}, {0.0, 1.0});
  CHECK_THROWS_AS(c.eval(-1e-9), std::domain_error);
  CHECK_THROWS_AS(c.eval(1.0 + 1e-9), std::domain_error);
}

TEST_CASE("basis weights reproduce evaluation") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0, 1);
  const auto xs = default_grid();
  std::vector<double> pts;
  for (int i = 0; i <= 13; ++i) pts.push_back(i / 13.0);
  const auto B = spline_basis(xs, pts);
  REQUIRE(B.size() == pts.size() * xs.size());
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> ys(xs.size());
    for (auto& y : ys) y = g(rng);
    const TemplateCurve c(xs, ys);
    for (std::size_t r = 0; r < pts.size(); ++r) {
      double v = 0;
      for (std::size_t k = 0; k < xs.size(); ++k) v += B[r * xs.size() + k] * ys[k];
      CHECK(std::fabs(v - c.eval(pts[r])) <= 1e-12);
    }
  }
}
