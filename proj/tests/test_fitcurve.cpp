#include <doctest.h>

#include <chrono>
#include <random>

#include "narrative/fitcurve.hpp"
#include "narrative/matching.hpp"
#include "oracles.hpp"

using namespace nd;

namespace {

EssenceSeries series(std::vector<double> v) { return to_minmax(EssenceSeries{"a", std::move(v), Normalization::raw}); }

std::vector<double> rand_unit(std::mt19937_64& rng, std::size_t n, int levels = 0) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> v(n);
  for (auto& x : v) x = levels ? std::floor(u(rng) * levels) / levels : u(rng);
  return v;
}

std::size_t brute_max_matching(const std::vector<std::vector<std::size_t>>& adj, std::size_t n_right) {
  // Exhaustive over assignments of left vertices (small graphs only).
  std::vector<bool> used(n_right, false);
  std::function<std::size_t(std::size_t)> go = [&](std::size_t l) -> std::size_t {
    if (l == adj.size()) return 0;
    std::size_t best = go(l + 1);
    for (auto r : adj[l])
      if (!used[r]) {
        used[r] = true;
        best = std::max(best, 1 + go(l + 1));
        used[r] = false;
      }
    return best;
  };
  return go(0);
}

}  // namespace

TEST_CASE("sample_template examples") {
  CHECK(sample_template(TemplateCurve({0, 1}, {0.5, 0.5}), 4) == std::vector<double>(4, 0.5));
  CHECK(sample_template(TemplateCurve({0, 1}, {0, 1}), 3) == std::vector<double>{0, 0.5, 1});
  const auto s = sample_template(TemplateCurve({0, 0.5, 1}, {0, 1, 0}), 5);
  const std::vector<double> want{0, 0.6875, 1, 0.6875, 0};
  for (std::size_t i = 0; i < 5; ++i) CHECK(std::fabs(s[i] - want[i]) <= 1e-12);
  // Overshooting samples are renormalized into [0, 1].
  const auto o = sample_template(TemplateCurve({0, 0.2, 0.4, 1}, {0, 1, 0, 1}), 21);
  CHECK(*std::min_element(o.begin(), o.end()) == 0.0);
  CHECK(*std::max_element(o.begin(), o.end()) == 1.0);
  CHECK_THROWS(sample_template(TemplateCurve({0, 1}, {0, 1}), 1));
}

TEST_CASE("candidate_thresholds examples") {
  CHECK(candidate_thresholds(std::vector<double>{0, 1}, std::vector<double>{0, 1}) == std::vector<double>{0, 1});
  const auto t = candidate_thresholds(std::vector<double>{0.2, 0.9, 0.4}, std::vector<double>{0, 0.5, 1});
  const std::vector<double> want{0.1, 0.2, 0.3, 0.4, 0.6, 0.8, 0.9};
  REQUIRE(t.size() == want.size());
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(std::fabs(t[i] - want[i]) <= 1e-12);
  CHECK(candidate_thresholds(std::vector<double>{0.3, 0.3}, std::vector<double>{0.7, 0.7}).size() == 1);
  CHECK_THROWS(candidate_thresholds(std::vector<double>{0.3}, std::vector<double>{0.7, 0.7}));
}

TEST_CASE("has_perfect_matching examples") {
  const std::vector<double> y{0.2, 0.9, 0.4}, z{0, 0.5, 1};
  CHECK(has_perfect_matching(y, z, 1.0));
  CHECK(has_perfect_matching(std::vector<double>{0, 1}, std::vector<double>{0, 1}, 0.0));
  CHECK_FALSE(has_perfect_matching(y, z, 0.1));
}

TEST_CASE("fit_ordering examples") {
  const TemplateCurve rising({0, 1}, {0, 1});
  const auto exact = fit_ordering(series({0, 0.5, 1}), rising);
  CHECK(exact.ordering == Ordering::identity(3));
  CHECK(exact.bottleneck == 0.0);
  CHECK(exact.total_deviation == 0.0);

  const auto r = fit_to_targets(std::vector<double>{0.2, 0.9, 0.4}, sample_template(rising, 3));
  CHECK(r.ordering.one_based() == std::vector<std::size_t>{1, 3, 2});
  CHECK(std::fabs(r.bottleneck - 0.2) <= 1e-12);
  CHECK(std::fabs(r.total_deviation - 0.4) <= 1e-12);

  const TemplateCurve flat({0, 1}, {0.5, 0.5});
  CHECK(fit_ordering(series({0.3, 0.1, 0.9, 0.4}), flat).ordering == Ordering::identity(4));

  const auto two = fit_ordering(series({0.8, 0.1}), rising);
  CHECK(two.ordering.one_based() == std::vector<std::size_t>{2, 1});
  CHECK_THROWS(fit_ordering(EssenceSeries{"raw", {0.1, 0.2}, Normalization::raw}, rising));
}

TEST_CASE("matches the brute-force oracle") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 600; ++trial) {
    const std::size_t n = 2 + rng() % 6;
    // Coarse levels produce many exact ties.
    const int levels = trial % 3 == 0 ? 4 : 0;
    const auto y = rand_unit(rng, n, levels), z = rand_unit(rng, n, levels);
    const auto fit = fit_to_targets(y, z);
    const auto ref = oracle::brute_force_fit(y, z);
    CHECK(fit.bottleneck == ref.bottleneck);
    CHECK(std::fabs(fit.total_deviation - ref.total) <= 1e-12);
    double mx = 0, sum = 0;
    for (double d : fit.per_position_deviation) mx = std::max(mx, d), sum += d;
    CHECK(mx == fit.bottleneck);
    CHECK(std::fabs(sum - fit.total_deviation) <= 1e-12);
    if (levels == 0) CHECK(fit.ordering.positions() == ref.ordering);
  }
}

TEST_CASE("lexicographic tie-break on exact ties") {
  // Values with repeated entries make many optimal orderings.
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng() % 6;
    std::vector<double> y(n), z(n);
    for (auto& v : y) v = static_cast<double>(rng() % 3) / 2.0;
    for (auto& v : z) v = static_cast<double>(rng() % 3) / 2.0;
    const auto fit = fit_to_targets(y, z);
    const auto ref = oracle::brute_force_fit(y, z);
    CHECK(fit.bottleneck == ref.bottleneck);
    CHECK(fit.total_deviation == doctest::Approx(ref.total).epsilon(1e-12));
    CHECK(fit.ordering.positions() == ref.ordering);
  }
}

// Sorting is optimal for both objectives but need not be the unique optimum.
TEST_CASE("monotone targets: sorted assignment attains the optimum") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 30;
    auto y = rand_unit(rng, n);
    const auto z = relative_positions(n);
    const auto fit = fit_to_targets(y, z);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return y[a] < y[b]; });
    double bottleneck = 0, total = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = std::abs(y[idx[j]] - z[j]);
      bottleneck = std::max(bottleneck, d);
      total += d;
    }
    CHECK(fit.bottleneck == doctest::Approx(bottleneck).epsilon(1e-12));
    CHECK(fit.total_deviation == doctest::Approx(total).epsilon(1e-9));
  }
}

TEST_CASE("ordering invariant under a shared affine map") {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 7;
    auto y = rand_unit(rng, n), z = rand_unit(rng, n);
    auto y2 = y, z2 = z;
    for (auto& v : y2) v = 2.0 * v + 0.5;
    for (auto& v : z2) v = 2.0 * v + 0.5;
    CHECK(fit_to_targets(y, z).ordering == fit_to_targets(y2, z2).ordering);
  }
}

TEST_CASE("hopcroft_karp against exhaustive search") {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t nl = 1 + rng() % 6, nr = 1 + rng() % 6;
    std::vector<std::vector<std::size_t>> adj(nl);
    for (auto& row : adj)
      for (std::size_t r = 0; r < nr; ++r)
        if (rng() % 3 == 0) row.push_back(r);
    std::vector<std::size_t> ml;
    const std::size_t size = hopcroft_karp(adj, nr, &ml);
    CHECK(size == brute_max_matching(adj, nr));
    std::vector<bool> used(nr, false);
    std::size_t count = 0;
    for (std::size_t l = 0; l < nl; ++l) {
      if (ml[l] == kUnmatched) continue;
      CHECK(std::find(adj[l].begin(), adj[l].end(), ml[l]) != adj[l].end());
      CHECK_FALSE(used[ml[l]]);
      used[ml[l]] = true;
      ++count;
    }
    CHECK(count == size);
  }
}

TEST_CASE("sparse LAP optimality and dual feasibility") {
  std::mt19937_64 rng(26);
  std::uniform_real_distribution<double> u(0, 10);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 6;
    // Dense costs, then drop some edges while keeping the identity feasible.
    std::vector<std::vector<double>> c(n, std::vector<double>(n));
    for (auto& row : c)
      for (auto& v : row) v = u(rng);
    SparseCostMatrix m;
    std::vector<std::vector<bool>> has(n, std::vector<bool>(n));
    for (std::size_t r = 0; r < n; ++r) {
      std::vector<std::size_t> cols;
      std::vector<double> costs;
      for (std::size_t k = 0; k < n; ++k)
        if (k == r || rng() % 2) {
          cols.push_back(k);
          costs.push_back(c[r][k]);
          has[r][k] = true;
        }
      m.add_row(cols, costs);
    }
    const auto sol = solve_sparse_lap(m);
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    double best = INFINITY;
    do {
      double t = 0;
      bool ok = true;
      for (std::size_t r = 0; r < n && ok; ++r) ok = has[r][p[r]], t += c[r][p[r]];
      if (ok) best = std::min(best, t);
    } while (std::next_permutation(p.begin(), p.end()));
    CHECK(sol.total_cost == doctest::Approx(best).epsilon(1e-12));
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t k = 0; k < n; ++k)
        if (has[r][k]) CHECK(c[r][k] - sol.row_price[r] - sol.col_price[k] >= -1e-9);
  }
  SparseCostMatrix bad;
  bad.add_row({0}, {1.0});
  bad.add_row({0}, {1.0});
  CHECK_THROWS(solve_sparse_lap(bad));
}

TEST_CASE("deterministic on repeated calls") {
  std::mt19937_64 rng(27);
  const auto y = rand_unit(rng, 50), z = rand_unit(rng, 50);
  const auto a = fit_to_targets(y, z), b = fit_to_targets(y, z);
  CHECK(a.ordering == b.ordering);
  CHECK(a.total_deviation == b.total_deviation);
}

TEST_CASE("moderate size stays fast") {
  std::mt19937_64 rng(28);
  const auto y = rand_unit(rng, 300), z = rand_unit(rng, 300);
  const auto t0 = std::chrono::steady_clock::now();
  const auto fit = fit_to_targets(y, z);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(secs < 10.0);
  CHECK(fit.ordering.size() == 300);
}
