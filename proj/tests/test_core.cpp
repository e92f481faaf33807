#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "narrative/core.hpp"

using namespace nd;

namespace {

std::vector<std::size_t> argsort(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  return idx;
}

}  // namespace

TEST_CASE("normalize_minmax examples") {
  CHECK(normalize_minmax(std::vector<double>{2, 4, 6}) == std::vector<double>{0, 0.5, 1});
  CHECK(normalize_minmax(std::vector<double>{5, 5, 5}) == std::vector<double>{0.5, 0.5, 0.5});
  CHECK(normalize_minmax(std::vector<double>{0.9, 0.1, 0.5})[0] == 1.0);
  CHECK(normalize_minmax(std::vector<double>{0.9, 0.1, 0.5})[1] == 0.0);
  CHECK(normalize_minmax(std::vector<double>{0.9, 0.1, 0.5})[2] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS(normalize_minmax(std::vector<double>{}));
  CHECK_THROWS(normalize_minmax(std::vector<double>{1.0, NAN}));
}

TEST_CASE("normalize_zscore examples") {
  auto z = normalize_zscore(std::vector<double>{1, 2, 3});
  CHECK(z[0] == doctest::Approx(-1.2247).epsilon(1e-4));
  CHECK(z[1] == doctest::Approx(0.0));
  CHECK(z[2] == doctest::Approx(1.2247).epsilon(1e-4));
  CHECK(normalize_zscore(std::vector<double>{7, 7}) == std::vector<double>{0, 0});
  CHECK(normalize_zscore(std::vector<double>{0, 2}) == std::vector<double>{-1, 1});
  CHECK_THROWS(normalize_zscore(std::vector<double>{}));
}

TEST_CASE("relative_positions") {
  CHECK(relative_positions(2) == std::vector<double>{0, 1});
  CHECK(relative_positions(3) == std::vector<double>{0, 0.5, 1});
  CHECK(relative_positions(5) == std::vector<double>{0, 0.25, 0.5, 0.75, 1});
  CHECK_THROWS(relative_positions(1));
  for (std::size_t n = 2; n <= 40; ++n) {
    auto r = relative_positions(n);
    REQUIRE(r.size() == n);
    CHECK(r.front() == 0.0);
    CHECK(r.back() == 1.0);
    const double step = 1.0 / static_cast<double>(n - 1);
    for (std::size_t i = 1; i < n; ++i) CHECK(std::fabs(r[i] - r[i - 1] - step) <= 1e-12);
  }
}

TEST_CASE("minmax properties on random inputs") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0, 3);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> v(2 + rng() % 15);
    for (auto& x : v) x = g(rng);
    auto once = normalize_minmax(v);
    auto twice = normalize_minmax(once);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::fabs(once[i] - twice[i]) <= 1e-12);
    CHECK(argsort(v) == argsort(once));
    CHECK(*std::min_element(once.begin(), once.end()) == 0.0);
    CHECK(*std::max_element(once.begin(), once.end()) == 1.0);
  }
}

TEST_CASE("Ordering validates permutations") {
  CHECK_NOTHROW(Ordering({2, 0, 1}));
  CHECK_THROWS(Ordering({0, 0, 1}));
  CHECK_THROWS(Ordering({0, 3, 1}));
  CHECK(Ordering({2, 0, 1}).one_based() == std::vector<std::size_t>{3, 1, 2});
  CHECK(Ordering::identity(3) == Ordering({0, 1, 2}));
  CHECK(Ordering({0, 2, 1}) < Ordering({1, 0, 2}));
}

TEST_CASE("TrackFeatures rejects malformed stats") {
  CHECK_THROWS(TrackFeatures("t", std::vector<double>(kFeatureSize - 1, 0.0)));
  std::vector<double> v(kFeatureSize, 0.0);
  v[7] = INFINITY;
  CHECK_THROWS(TrackFeatures("t", v));
  v[7] = 2.5;
  TrackFeatures t("t", v);
  CHECK(t.at(1, 0) == 2.5);
}

TEST_CASE("Split names round-trip") {
  for (auto s : {Split::train, Split::validation, Split::test}) CHECK(parse_split(to_string(s)) == s);
  CHECK_THROWS(parse_split("dev"));
}
