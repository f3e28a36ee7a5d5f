#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "sginfer/dataset.hpp"
#include "sginfer/mat.hpp"

namespace sginfer {

enum class LossKind { SquaredLinear, Logistic };

// Per-sample loss family. Both kinds have gradients of the form c_i(theta) * x_i,
// which is what keeps every engine loop on dot/axpy kernels.
struct LossModel {
    LossKind kind = LossKind::SquaredLinear;
};

double sigmoid(double t);

double sample_loss(LossModel loss, const Dataset& data, std::size_t i, const double* theta);

// Residual factor c_i with grad_i = c_i * x_i.
double gradient_factor(LossModel loss, const Dataset& data, std::size_t i, const double* theta);

std::vector<double> per_sample_gradient(LossModel loss, const Dataset& data, std::size_t i,
                                        std::span<const double> theta);

// Arithmetic mean of per-sample gradients over `indices` (duplicates allowed).
void minibatch_gradient(LossModel loss, const Dataset& data, std::span<const std::size_t> indices,
                        const double* theta, double* out);
std::vector<double> minibatch_gradient(LossModel loss, const Dataset& data,
                                       std::span<const std::size_t> indices,
                                       std::span<const double> theta);

// Forward finite difference (ghat(theta + delta*g) - ghat(theta)) / delta over the
// minibatch; exact for SquaredLinear at any delta. `theta_pert` is scratch of length p.
void hvp_finite_difference(LossModel loss, const Dataset& data,
                           std::span<const std::size_t> indices, const double* theta,
                           const double* g, double delta, double* theta_pert, double* out);
std::vector<double> hvp_finite_difference(LossModel loss, const Dataset& data,
                                          std::span<const std::size_t> indices,
                                          std::span<const double> theta, std::span<const double> g,
                                          double delta);

// Analytic per-sample Hessian contribution weight h with hess_i = h * x_i x_i^T
// (1 for squared loss, s(1-s) for logistic). Dense oracles build on this.
double hessian_factor(LossModel loss, const Dataset& data, std::size_t i, const double* theta);

// (1/n) sum_i hess_i(theta); dense, for oracles and small-p defaults.
Mat dense_hessian(LossModel loss, const Dataset& data, const double* theta);

// --- synthetic data -------------------------------------------------------

struct CovarianceSpec {
    enum class Kind { Identity, ToeplitzDecay };
    Kind kind = Kind::Identity;
    double rate = 0.0;  // ToeplitzDecay: Sigma_jk = rate^|j-k|, rate in (0,1)
    std::size_t p = 0;

    static CovarianceSpec identity(std::size_t p) { return {Kind::Identity, 0.0, p}; }
    static CovarianceSpec toeplitz(std::size_t p, double rate) {
        return {Kind::ToeplitzDecay, rate, p};
    }

    Mat dense() const;
};

struct SyntheticTruth {
    std::vector<double> theta_star;
    double sigma = 0.0;
    std::size_t sparsity = 0;  // 0 = dense
};

Dataset generate_linear(std::size_t n, const CovarianceSpec& cov, const SyntheticTruth& truth,
                        std::uint64_t seed);

// y ~ Bernoulli(1/2); x | y ~ N((2y-1) * mean_shift, Sigma). The negative class
// mirrors the positive-class mean.
Dataset generate_logistic(std::size_t n, const CovarianceSpec& cov,
                          std::span<const double> mean_shift, std::uint64_t seed);

// x_i iid N(1/sqrt(p) * 1, I); eps_i = a*z_i + b*z_{i-1}, z iid N(0, z_sigma^2).
Dataset generate_ma_timeseries(std::size_t n, std::size_t p, std::span<const double> theta_star,
                               double ma_a, double ma_b, double z_sigma, std::uint64_t seed);

// theta* has its first s entries equal to `amplitude`; x ~ N(0, I).
std::pair<Dataset, SyntheticTruth> generate_sparse_highdim(std::size_t n, std::size_t p,
                                                           std::size_t s, double amplitude,
                                                           double sigma, std::uint64_t seed);

}  // namespace sginfer
