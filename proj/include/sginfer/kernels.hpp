#pragma once

#include <cstddef>
#include <string_view>

// Data-parallel primitives underneath every gradient/update loop.
// Scalar reference kernels always exist; an AVX2 variant is selected at
// runtime when the CPU supports it. The two backends are equivalence-tested
// (they differ only in summation order / FMA rounding).
namespace sginfer::kernels {

enum class Backend { Scalar, Avx2 };

Backend active_backend();
bool backend_supported(Backend b);
// Returns false (and leaves the active backend unchanged) if unsupported.
bool set_backend(Backend b);
std::string_view backend_name(Backend b);
// Parses "scalar" / "avx2" / "auto"; auto picks the best supported.
bool set_backend_by_name(std::string_view name);

double dot(const double* x, const double* y, std::size_t n);
double sum_sq(const double* x, std::size_t n);
// y += a * x
void axpy(double a, const double* x, double* y, std::size_t n);
// x *= a
void scal(double a, double* x, std::size_t n);
// out[i] = sign(x[i]) * max(|x[i]| - omega, 0)
void soft_threshold(const double* x, double omega, double* out, std::size_t n);

namespace ref {
// Scalar reference kernels; the oracle side of the backend equivalence tests.
double dot(const double* x, const double* y, std::size_t n);
double sum_sq(const double* x, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void scal(double a, double* x, std::size_t n);
void soft_threshold(const double* x, double omega, double* out, std::size_t n);
}  // namespace ref

}  // namespace sginfer::kernels
