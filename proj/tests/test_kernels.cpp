#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "narrative/kernels.hpp"

using namespace nd::kernels;

namespace {

std::vector<Isa> vector_isas() {
  std::vector<Isa> out;
  for (Isa i : {Isa::avx2, Isa::neon})
    if (isa_supported(i)) out.push_back(i);
  return out;
}

std::vector<double> randv(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g(0, 1);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// Naive long-double references.
long double ref_dot(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return s;
}

}  // namespace

TEST_CASE("scalar kernels agree with direct formulas") {
  const Table& t = table(Isa::scalar);
  std::mt19937_64 rng(1);
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 16u, 33u, 525u}) {
    auto a = randv(rng, n), b = randv(rng, n);
    long double mag = 0;
    for (std::size_t i = 0; i < n; ++i) mag += std::fabs(a[i] * b[i]);
    CHECK(std::fabs(static_cast<long double>(t.dot(a.data(), b.data(), n)) - ref_dot(a, b)) <= 1e-14L * (1 + mag));
    double sq = 0;
    for (std::size_t i = 0; i < n; ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
    CHECK(t.sq_dist(a.data(), b.data(), n) == doctest::Approx(sq).epsilon(1e-13));
    std::vector<double> out(n);
    t.abs_diff(0.3, a.data(), out.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(out[i] == std::fabs(0.3 - a[i]));
    auto y = b;
    t.axpy(-1.5, a.data(), y.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(y[i] == doctest::Approx(b[i] - 1.5 * a[i]).epsilon(1e-14));
  }
}

TEST_CASE("vector kernels match the scalar reference") {
  const auto isas = vector_isas();
  if (isas.empty()) MESSAGE("no vector ISA available; only the scalar path is exercised");
  std::mt19937_64 rng(2);
  const Table& s = table(Isa::scalar);
  for (Isa isa : isas) {
    const Table& v = table(isa);
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t n = rng() % 70;
      auto a = randv(rng, n), b = randv(rng, n);
      long double mag = 0;
      for (std::size_t i = 0; i < n; ++i) mag += std::fabs(a[i] * b[i]);
      CHECK(std::fabs(v.dot(a.data(), b.data(), n) - s.dot(a.data(), b.data(), n)) <= 1e-13 * (1 + static_cast<double>(mag)));
      const double sq = s.sq_dist(a.data(), b.data(), n);
      CHECK(std::fabs(v.sq_dist(a.data(), b.data(), n) - sq) <= 1e-13 * (1 + sq));

      std::vector<double> o1(n), o2(n);
      s.abs_diff(0.25, a.data(), o1.data(), n);
      v.abs_diff(0.25, a.data(), o2.data(), n);
      CHECK(same_bits(o1, o2));

      auto y1 = b, y2 = b;
      s.axpy(0.7, a.data(), y1.data(), n);
      v.axpy(0.7, a.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(std::fabs(y1[i] - y2[i]) <= 1e-15 * (1 + std::fabs(y1[i])));

      auto p1 = a, p2 = a, m1 = randv(rng, n), m2 = m1, v1 = randv(rng, n);
      for (auto& x : v1) x = x * x;
      auto v2 = v1;
      const AdamStep st{1e-3, 0.9, 0.999, 1e-8, 1.0 / (1 - 0.9 * 0.9), 1.0 / std::sqrt(1 - 0.999 * 0.999)};
      s.adam_update(p1.data(), b.data(), m1.data(), v1.data(), n, st);
      v.adam_update(p2.data(), b.data(), m2.data(), v2.data(), n, st);
      CHECK(same_bits(p1, p2));
      CHECK(same_bits(m1, m2));
      CHECK(same_bits(v1, v2));
    }
  }
}

TEST_CASE("adam update follows the textbook step") {
  std::vector<double> p{1.0, -2.0}, g{0.5, -0.25}, m{0, 0}, v{0, 0};
  const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  adam_update(p, g, m, v, {lr, b1, b2, eps, 1 / (1 - b1), 1 / std::sqrt(1 - b2)});
  for (std::size_t i = 0; i < 2; ++i) {
    const double mi = (1 - b1) * g[i], vi = (1 - b2) * g[i] * g[i];
    CHECK(m[i] == doctest::Approx(mi));
    CHECK(v[i] == doctest::Approx(vi));
  }
  // First step moves each parameter by about lr against the gradient sign.
  CHECK(p[0] == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(p[1] == doctest::Approx(-1.9).epsilon(1e-6));
}

TEST_CASE("ISA selection") {
  const Isa before = active_isa();
  CHECK(isa_supported(Isa::scalar));
  set_isa(Isa::scalar);
  CHECK(active_isa() == Isa::scalar);
  std::vector<double> a{1, 2, 3}, b{4, 5, 6};
  CHECK(dot(a, b) == 32.0);
  if (!isa_supported(Isa::neon)) CHECK_THROWS(set_isa(Isa::neon));
  set_isa(before);
  CHECK_THROWS(dot(a, std::vector<double>{1.0}));
}
