#include <doctest.h>

#include <cmath>
#include <vector>

#include "sginfer/kernels.hpp"
#include "sginfer/rng.hpp"

using namespace sginfer;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double scale = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = scale * rng.gaussian();
    return v;
}

struct BackendGuard {
    kernels::Backend saved = kernels::active_backend();
    ~BackendGuard() { kernels::set_backend(saved); }
};

}  // namespace

TEST_CASE("backend selection") {
    BackendGuard guard;
    CHECK(kernels::backend_supported(kernels::Backend::Scalar));
    CHECK(kernels::set_backend(kernels::Backend::Scalar));
    CHECK(kernels::active_backend() == kernels::Backend::Scalar);
    CHECK(kernels::set_backend_by_name("auto"));
    CHECK_FALSE(kernels::set_backend_by_name("sse9"));
    if (kernels::backend_supported(kernels::Backend::Avx2)) {
        CHECK(kernels::set_backend_by_name("avx2"));
        CHECK(kernels::active_backend() == kernels::Backend::Avx2);
    }
}

TEST_CASE("scalar and simd backends agree") {
    if (!kernels::backend_supported(kernels::Backend::Avx2)) return;
    BackendGuard guard;
    Rng rng(42);
    // lengths straddling every remainder case of the 4/8-wide loops
    for (std::size_t n : {0, 1, 2, 3, 4, 5, 7, 8, 9, 11, 12, 15, 16, 17, 100, 1001}) {
        std::vector<double> x = random_vec(rng, n, 3.0);
        std::vector<double> y = random_vec(rng, n, 2.0);

        kernels::set_backend(kernels::Backend::Scalar);
        const double dot_s = kernels::dot(x.data(), y.data(), n);
        const double ss_s = kernels::sum_sq(x.data(), n);
        std::vector<double> axpy_s = y;
        kernels::axpy(0.37, x.data(), axpy_s.data(), n);
        std::vector<double> scal_s = x;
        kernels::scal(-1.25, scal_s.data(), n);
        std::vector<double> st_s(n);
        kernels::soft_threshold(x.data(), 1.0, st_s.data(), n);

        kernels::set_backend(kernels::Backend::Avx2);
        const double dot_v = kernels::dot(x.data(), y.data(), n);
        const double ss_v = kernels::sum_sq(x.data(), n);
        std::vector<double> axpy_v = y;
        kernels::axpy(0.37, x.data(), axpy_v.data(), n);
        std::vector<double> scal_v = x;
        kernels::scal(-1.25, scal_v.data(), n);
        std::vector<double> st_v(n);
        kernels::soft_threshold(x.data(), 1.0, st_v.data(), n);

        const double scale = 1.0 + std::fabs(dot_s) + ss_s;
        CHECK(std::fabs(dot_v - dot_s) <= 1e-13 * scale);
        CHECK(std::fabs(ss_v - ss_s) <= 1e-13 * scale);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(std::fabs(axpy_v[i] - axpy_s[i]) <= 1e-14 * (1.0 + std::fabs(axpy_s[i])));
            CHECK(scal_v[i] == scal_s[i]);
            CHECK(st_v[i] == st_s[i]);  // bitwise, including killed entries
        }
    }
}

TEST_CASE("soft threshold reference values") {
    double in[3] = {0.5, -0.1, -0.7};
    double out[3];
    kernels::ref::soft_threshold(in, 0.2, out, 3);
    CHECK(out[0] == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(out[1] == 0.0);
    CHECK(out[2] == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("dot matches a long-double oracle") {
    Rng rng(7);
    std::vector<double> x = random_vec(rng, 33);
    std::vector<double> y = random_vec(rng, 33);
    long double acc = 0.0L;
    for (std::size_t i = 0; i < x.size(); ++i) acc += static_cast<long double>(x[i]) * y[i];
    CHECK(kernels::dot(x.data(), y.data(), x.size()) ==
          doctest::Approx(static_cast<double>(acc)).epsilon(1e-13));
}
