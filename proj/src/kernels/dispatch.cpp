#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "narrative/kernels.hpp"

namespace nd::kernels {

namespace detail {
#ifndef ND_HAVE_AVX2_TU
const Table* avx2_table() { return nullptr; }
#endif
#ifndef ND_HAVE_NEON_TU
const Table* neon_table() { return nullptr; }
#endif
}  // namespace detail

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa detect() {
  if (const char* env = std::getenv("ND_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return Isa::scalar;
    if (want == "avx2" && isa_supported(Isa::avx2)) return Isa::avx2;
    if (want == "neon" && isa_supported(Isa::neon)) return Isa::neon;
  }
  if (isa_supported(Isa::avx2)) return Isa::avx2;
  if (isa_supported(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

void check_len(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument("kernel operand length mismatch");
}

}  // namespace

const char* to_string(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "scalar";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2: return detail::avx2_table() != nullptr && cpu_has_avx2();
    case Isa::neon: return detail::neon_table() != nullptr;
  }
  return false;
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void set_isa(Isa isa) {
  if (!isa_supported(isa))
    throw std::invalid_argument(std::string("SIMD variant not available: ") + to_string(isa));
  current().store(isa, std::memory_order_relaxed);
}

const Table& table(Isa isa) {
  switch (isa) {
    case Isa::avx2:
      if (auto* t = detail::avx2_table()) return *t;
      break;
    case Isa::neon:
      if (auto* t = detail::neon_table()) return *t;
      break;
    case Isa::scalar: break;
  }
  return detail::scalar_table();
}

const Table& active() { return table(active_isa()); }

double dot(std::span<const double> a, std::span<const double> b) {
  check_len(a.size(), b.size());
  return active().dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check_len(x.size(), y.size());
  active().axpy(alpha, x.data(), y.data(), x.size());
}

void abs_diff(double a, std::span<const double> z, std::span<double> out) {
  check_len(z.size(), out.size());
  active().abs_diff(a, z.data(), out.data(), z.size());
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
  check_len(a.size(), b.size());
  return active().sq_dist(a.data(), b.data(), a.size());
}

void adam_update(std::span<double> params, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, const AdamStep& step) {
  check_len(params.size(), grad.size());
  check_len(params.size(), m.size());
  check_len(params.size(), v.size());
  active().adam_update(params.data(), grad.data(), m.data(), v.data(), params.size(), step);
}

}  // namespace nd::kernels
