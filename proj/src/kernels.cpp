#include "sginfer/kernels.hpp"

#include <atomic>
#include <cmath>

namespace sginfer::kernels {

namespace ref {

double dot(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

double sum_sq(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
    return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scal(double a, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void soft_threshold(const double* x, double omega, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        double v = x[i];
        double m = std::fabs(v) - omega;
        out[i] = m > 0.0 ? std::copysign(m, v) : 0.0;
    }
}

}  // namespace ref

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double dot(const double* x, const double* y, std::size_t n);
double sum_sq(const double* x, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void scal(double a, double* x, std::size_t n);
void soft_threshold(const double* x, double omega, double* out, std::size_t n);
}  // namespace avx2

static bool cpu_has_avx2() { return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"); }
#else
static bool cpu_has_avx2() { return false; }
#endif

namespace {

struct Table {
    double (*dot)(const double*, const double*, std::size_t);
    double (*sum_sq)(const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*scal)(double, double*, std::size_t);
    void (*soft_threshold)(const double*, double, double*, std::size_t);
};

constexpr Table kScalarTable{ref::dot, ref::sum_sq, ref::axpy, ref::scal, ref::soft_threshold};

#if defined(__x86_64__) || defined(_M_X64)
constexpr Table kAvx2Table{avx2::dot, avx2::sum_sq, avx2::axpy, avx2::scal, avx2::soft_threshold};
#endif

struct State {
    Table table;
    Backend backend;
    State() {
#if defined(__x86_64__) || defined(_M_X64)
        if (cpu_has_avx2()) {
            table = kAvx2Table;
            backend = Backend::Avx2;
            return;
        }
#endif
        table = kScalarTable;
        backend = Backend::Scalar;
    }
};

State& state() {
    static State s;
    return s;
}

}  // namespace

Backend active_backend() { return state().backend; }

bool backend_supported(Backend b) {
    if (b == Backend::Scalar) return true;
    return cpu_has_avx2();
}

bool set_backend(Backend b) {
    if (!backend_supported(b)) return false;
    State& s = state();
    s.backend = b;
#if defined(__x86_64__) || defined(_M_X64)
    s.table = (b == Backend::Avx2) ? kAvx2Table : kScalarTable;
#else
    s.table = kScalarTable;
#endif
    return true;
}

std::string_view backend_name(Backend b) {
    return b == Backend::Avx2 ? "avx2" : "scalar";
}

bool set_backend_by_name(std::string_view name) {
    if (name == "scalar") return set_backend(Backend::Scalar);
    if (name == "avx2") return set_backend(Backend::Avx2);
    if (name == "auto") {
        return set_backend(backend_supported(Backend::Avx2) ? Backend::Avx2 : Backend::Scalar);
    }
    return false;
}

double dot(const double* x, const double* y, std::size_t n) { return state().table.dot(x, y, n); }
double sum_sq(const double* x, std::size_t n) { return state().table.sum_sq(x, n); }
void axpy(double a, const double* x, double* y, std::size_t n) { state().table.axpy(a, x, y, n); }
void scal(double a, double* x, std::size_t n) { state().table.scal(a, x, n); }
void soft_threshold(const double* x, double omega, double* out, std::size_t n) {
    state().table.soft_threshold(x, omega, out, n);
}

}  // namespace sginfer::kernels
