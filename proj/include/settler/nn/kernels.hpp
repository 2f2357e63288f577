#pragma once

#include <cstddef>
#include <string_view>

namespace settler::nn::kernels {

/// Dense-layer inner loops. A scalar reference and an AVX2/FMA variant are
/// compiled; the active set is chosen on first use from SETTLER_KERNELS
/// (scalar | avx2 | auto, default auto) and CPU support.
enum class Isa { scalar, avx2 };

std::string_view to_string(Isa isa);
bool avx2_supported();
Isa active_isa();
/// Throws a config error when avx2 is requested on a CPU without it.
void set_isa(Isa isa);

double dot(const double* a, const double* b, std::size_t n);
/// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);
/// y = W x + b, W row-major m x n; b may be null.
void gemv(const double* w, const double* x, const double* b, double* y, std::size_t m, std::size_t n);
/// y += W^T v, W row-major m x n.
void gemv_t_acc(const double* w, const double* v, double* y, std::size_t m, std::size_t n);
/// G += alpha * u v^T, G row-major m x n.
void ger(double alpha, const double* u, const double* v, double* g, std::size_t m, std::size_t n);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace scalar

namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace avx2

}  // namespace settler::nn::kernels
