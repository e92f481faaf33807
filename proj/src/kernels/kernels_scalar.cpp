#include "narrative/kernels.hpp"

#include <cmath>

namespace nd::kernels {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void abs_diff(double a, const double* z, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::fabs(a - z[i]);
}

double sq_dist(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void adam_update(double* p, const double* g, double* m, double* v, std::size_t n,
                 const AdamStep& s) {
  const double c1 = 1.0 - s.beta1, c2 = 1.0 - s.beta2, step = s.lr * s.bias1;
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = s.beta1 * m[i] + c1 * g[i];
    v[i] = s.beta2 * v[i] + c2 * (g[i] * g[i]);
    p[i] -= step * m[i] / (std::sqrt(v[i]) * s.bias2 + s.eps);
  }
}

constexpr Table kTable{&dot, &axpy, &abs_diff, &sq_dist, &adam_update};

}  // namespace

namespace detail {
const Table& scalar_table() { return kTable; }
}  // namespace detail

}  // namespace nd::kernels
