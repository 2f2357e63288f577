#include "settler/nn/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "settler/core/error.hpp"

namespace settler::nn::kernels {

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace scalar

namespace {

using DotFn = double (*)(const double*, const double*, std::size_t);
using AxpyFn = void (*)(double, const double*, double*, std::size_t);

struct Table {
  Isa isa;
  DotFn dot;
  AxpyFn axpy;
};

constexpr Table kScalar{Isa::scalar, &scalar::dot, &scalar::axpy};
constexpr Table kAvx2{Isa::avx2, &avx2::dot, &avx2::axpy};

const Table* initial_table() {
  const char* env = std::getenv("SETTLER_KERNELS");
  const std::string choice = env ? env : "auto";
  if (choice == "scalar") return &kScalar;
  if (choice == "avx2") {
    if (!avx2_supported()) fail(ErrorCategory::config, "SETTLER_KERNELS=avx2 but the CPU lacks AVX2/FMA");
    return &kAvx2;
  }
  if (choice != "auto") fail(ErrorCategory::config, "SETTLER_KERNELS must be scalar, avx2 or auto");
  return avx2_supported() ? &kAvx2 : &kScalar;
}

std::atomic<const Table*>& active() {
  static std::atomic<const Table*> table{initial_table()};
  return table;
}

}  // namespace

std::string_view to_string(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool avx2_supported() {
#if defined(SETTLER_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok;
#else
  return false;
#endif
}

Isa active_isa() { return active().load()->isa; }

void set_isa(Isa isa) {
  if (isa == Isa::avx2 && !avx2_supported()) fail(ErrorCategory::config, "AVX2 kernels not available on this CPU");
  active().store(isa == Isa::avx2 ? &kAvx2 : &kScalar);
}

double dot(const double* a, const double* b, std::size_t n) { return active().load(std::memory_order_relaxed)->dot(a, b, n); }

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().load(std::memory_order_relaxed)->axpy(alpha, x, y, n);
}

void gemv(const double* w, const double* x, const double* b, double* y, std::size_t m, std::size_t n) {
  const auto f = active().load(std::memory_order_relaxed)->dot;
  for (std::size_t i = 0; i < m; ++i) y[i] = (b ? b[i] : 0.0) + f(w + i * n, x, n);
}

void gemv_t_acc(const double* w, const double* v, double* y, std::size_t m, std::size_t n) {
  const auto f = active().load(std::memory_order_relaxed)->axpy;
  for (std::size_t i = 0; i < m; ++i) f(v[i], w + i * n, y, n);
}

void ger(double alpha, const double* u, const double* v, double* g, std::size_t m, std::size_t n) {
  const auto f = active().load(std::memory_order_relaxed)->axpy;
  for (std::size_t i = 0; i < m; ++i) f(alpha * u[i], v, g + i * n, n);
}

}  // namespace settler::nn::kernels
