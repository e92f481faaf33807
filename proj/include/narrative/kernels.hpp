#pragma once

// Data-parallel inner loops with a scalar reference implementation and
// vectorized variants (AVX2+FMA on x86-64, NEON on AArch64) picked at runtime.
//
// The active variant is chosen once from CPU support, and can be forced with
// the ND_SIMD environment variable (scalar | avx2 | neon) or set_isa().
// Vector variants reassociate sums, so dot/sq_dist/axpy agree with the scalar
// path to rounding only; abs_diff and adam_update are bit-identical.

#include <cstddef>
#include <span>

namespace nd::kernels {

enum class Isa { scalar, avx2, neon };

const char* to_string(Isa isa);
bool isa_supported(Isa isa);
Isa active_isa();
/// Throws std::invalid_argument if the ISA is not available on this CPU/build.
void set_isa(Isa isa);

struct AdamStep {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias1;  // 1 / (1 - beta1^t)
  double bias2;  // 1 / sqrt(1 - beta2^t)
};

struct Table {
  double (*dot)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  void (*abs_diff)(double a, const double* z, double* out, std::size_t n);
  double (*sq_dist)(const double* a, const double* b, std::size_t n);
  void (*adam_update)(double* p, const double* g, double* m, double* v, std::size_t n,
                      const AdamStep& s);
};

const Table& table(Isa isa);
const Table& active();

// Span front-ends over the active table. Lengths must match.

double dot(std::span<const double> a, std::span<const double> b);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
/// out[j] = |a - z[j]|
void abs_diff(double a, std::span<const double> z, std::span<double> out);
/// sum_j (a[j] - b[j])^2
double sq_dist(std::span<const double> a, std::span<const double> b);
void adam_update(std::span<double> params, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, const AdamStep& step);

namespace detail {
const Table& scalar_table();
const Table* avx2_table();  // nullptr when not compiled in
const Table* neon_table();
}  // namespace detail

}  // namespace nd::kernels
