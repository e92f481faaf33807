// AArch64 NEON variants. Advanced SIMD is mandatory on AArch64, so no
// runtime check is needed beyond the build-time architecture.

#include "narrative/kernels.hpp"

#include <arm_neon.h>

#include <cmath>

namespace nd::kernels {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0), acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void abs_diff(double a, const double* z, double* out, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vabdq_f64(va, vld1q_f64(z + i)));
  for (; i < n; ++i) out[i] = std::fabs(a - z[i]);
}

double sq_dist(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    acc = vfmaq_f64(acc, d, d);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void adam_update(double* p, const double* g, double* m, double* v, std::size_t n,
                 const AdamStep& s) {
  const double c1 = 1.0 - s.beta1, c2 = 1.0 - s.beta2, step = s.lr * s.bias1;
  const float64x2_t b1 = vdupq_n_f64(s.beta1), b2 = vdupq_n_f64(s.beta2);
  const float64x2_t vc1 = vdupq_n_f64(c1), vc2 = vdupq_n_f64(c2);
  const float64x2_t vstep = vdupq_n_f64(step), vbias2 = vdupq_n_f64(s.bias2);
  const float64x2_t veps = vdupq_n_f64(s.eps);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t gi = vld1q_f64(g + i);
    const float64x2_t mi = vaddq_f64(vmulq_f64(b1, vld1q_f64(m + i)), vmulq_f64(vc1, gi));
    const float64x2_t vi =
        vaddq_f64(vmulq_f64(b2, vld1q_f64(v + i)), vmulq_f64(vc2, vmulq_f64(gi, gi)));
    const float64x2_t denom = vaddq_f64(vmulq_f64(vsqrtq_f64(vi), vbias2), veps);
    vst1q_f64(m + i, mi);
    vst1q_f64(v + i, vi);
    vst1q_f64(p + i, vsubq_f64(vld1q_f64(p + i), vdivq_f64(vmulq_f64(vstep, mi), denom)));
  }
  for (; i < n; ++i) {
    m[i] = s.beta1 * m[i] + c1 * g[i];
    v[i] = s.beta2 * v[i] + c2 * (g[i] * g[i]);
    p[i] -= step * m[i] / (std::sqrt(v[i]) * s.bias2 + s.eps);
  }
}

constexpr Table kTable{&dot, &axpy, &abs_diff, &sq_dist, &adam_update};

}  // namespace

namespace detail {
const Table* neon_table() { return &kTable; }
}  // namespace detail

}  // namespace nd::kernels
