#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "sginfer/dataset.hpp"
#include "sginfer/mat.hpp"
#include "sginfer/newton.hpp"

namespace sginfer {

// Elementwise soft threshold sign(v) * (|v| - omega)_+.
double shrink(double value, double omega);
std::vector<double> shrink(std::span<const double> values, double omega);
Mat shrink(const Mat& values, double omega);

struct HighDimConfig {
    double lambda = 0.0;
    double omega = 0.0;
    std::size_t T = 50;           // outer inference iterations
    std::size_t S_o = 10;         // outer sample batch (with replacement)
    std::size_t L_i = 0;          // inner steps per SVRG epoch; 0 = p
    std::size_t S_i = 10;         // feature batch (without replacement)
    double tau = 0.0;             // statistical-inference track step; 0 = tau_c / p
    double eta = 0.0;             // optimization track step;          0 = eta_c / p
    double tau_c = 1.0;
    double eta_c = 1.0;
    double L_o_scale = 1.0;       // L_o^t = ceil(L_o_scale * log(p) * log(t+2))
    std::vector<std::size_t> L_o_schedule;  // explicit per-t epoch counts (overrides)
    std::size_t point_epochs = 80;   // prox-SVRG epochs for the point estimate
    std::size_t solve_epochs = 40;   // SVRG epochs per linear solve
    std::uint64_t seed = 0;
    std::size_t dense_limit = 64;

    std::size_t inner_steps(std::size_t p) const { return L_i ? L_i : p; }
    double tau_at(std::size_t p) const { return tau > 0.0 ? tau : tau_c / static_cast<double>(p); }
    double eta_at(std::size_t p) const { return eta > 0.0 ? eta : eta_c / static_cast<double>(p); }
    std::size_t epochs_at(std::size_t t, std::size_t p) const;
};

// Soft-thresholded sample covariance S_hat = Shrink_omega((1/n) X^T X) with
// column access that never forms the p x p matrix. Three storage modes:
//   Dense    - materialized, p <= dense_limit (also the oracle for the others)
//   Sparse   - surviving entries in CSR; O(p) space when thresholding bites
//   Implicit - recompute entries from the data on every access, O(p) space
// Auto picks Dense below dense_limit, then Sparse, falling back to Implicit
// if more than `sparse_budget` entries per column survive on average.
class SoftThresholdCov {
  public:
    enum class Mode { Auto, Dense, Sparse, Implicit };

    SoftThresholdCov(const Dataset& data, double omega, std::size_t dense_limit = 64,
                     Mode mode = Mode::Auto, std::size_t sparse_budget = 64);

    std::size_t dim() const { return p_; }
    double omega() const { return omega_; }
    Mode storage() const { return mode_; }

    void column(std::size_t k, double* out) const;
    std::vector<double> column(std::size_t k) const;
    // out[e] = value of S_hat[rows[e], k] for sparse/dense; generic scatter
    // used by the feature-sampled inner loops.
    void add_scaled_column(std::size_t k, double scale, double* acc) const;

    void matvec(const double* v, double* out) const;
    std::vector<double> matvec(std::span<const double> v) const;

    const Mat& dense() const;  // throws unless Dense mode
    Mat materialize() const;   // dense copy regardless of mode (oracles only)

    // Bytes owned by this object (data copy + storage); the memory harness
    // asserts this stays far below p*p*8 in non-dense modes.
    std::size_t owned_bytes() const;

  private:
    double entry(std::size_t j, std::size_t k) const;

    std::size_t n_ = 0;
    std::size_t p_ = 0;
    double omega_ = 0.0;
    Mode mode_ = Mode::Implicit;
    Mat xt_;  // p x n feature-major copy of the design matrix
    Mat dense_;
    std::vector<std::size_t> col_ptr_;
    std::vector<std::size_t> row_idx_;
    std::vector<double> vals_;
};

std::vector<double> s_hat_column(const SoftThresholdCov& cov, std::size_t k);
std::vector<double> s_hat_matvec(const SoftThresholdCov& cov, std::span<const double> v);

// 1/2 theta' (S_hat - C) theta + (1/2n) sum (x_i'theta - y_i)^2 + lambda |theta|_1,
// evaluated without forming C.
double modified_lasso_objective(const Dataset& data, std::span<const double> theta,
                                const SoftThresholdCov& cov, double lambda);

struct HyperParams {
    double lambda = 0.0;
    double omega = 0.0;
};

// lambda = (sigma_hat + l1_hat) * sqrt(log p / n); omega = c_w * sqrt(log p / n)
// with c_w minimizing the dense condition number when p <= dense_limit, else 1.
HyperParams default_hyperparams(const Dataset& data, double sigma_hat, double l1_hat,
                                std::size_t dense_limit = 64);

// 5-fold cross-validated plain LASSO pre-pass; returns (sigma_hat, l1_hat).
std::pair<double, double> cv_lasso_scale_estimates(const Dataset& data, std::uint64_t seed);

// Proximal-SVRG minimization of the modified LASSO objective (feature-sampled
// inner loops). Throws numeric_error if the objective increases beyond 1e-8
// over three consecutive epochs.
std::vector<double> prox_svrg_point_estimate(const Dataset& data, const SoftThresholdCov& cov,
                                             double lambda, const HighDimConfig& cfg,
                                             std::span<const double> theta0);

// Approximate proximal Newton inference: per outer step solves S_hat g = g_t^0
// by feature-sampled SVRG for the replicate track and runs proximal SVRG
// epochs for the point track. Replicates carry sqrt(S_o) * g_bar (rho = 1).
std::pair<InferenceRun, std::vector<double>> highdim_inference(const Dataset& data,
                                                               const SoftThresholdCov& cov,
                                                               double lambda,
                                                               const HighDimConfig& cfg,
                                                               std::span<const double> theta0);

enum class DebiasMode { ExactDense, Svrg };

struct DebiasedEstimate {
    std::vector<double> theta_hat;
    std::vector<double> theta_d;
    // Diagonal of the plug-in sandwich divided by n; entries are computed for
    // the requested coordinates (all by default) and NaN elsewhere.
    std::vector<double> variance;
};

// theta_d = theta_hat + S_hat^{-1} [(1/n) sum (y_i - x_i'theta_hat) x_i].
DebiasedEstimate debiased_estimator(const Dataset& data, std::span<const double> theta_hat,
                                    const SoftThresholdCov& cov, DebiasMode mode,
                                    const HighDimConfig& cfg,
                                    std::span<const std::size_t> coords = {});

// S^{-1} [ (1/n) sum r_i^2 x_i x_i^T ] S^{-1}; dense form requires p <= dense_limit.
Mat plugin_sandwich_highdim(const Dataset& data, std::span<const double> theta_hat,
                            const SoftThresholdCov& cov);
// Diagonal entries for selected coordinates via per-coordinate solves.
std::vector<double> plugin_sandwich_highdim_diag(const Dataset& data,
                                                 std::span<const double> theta_hat,
                                                 const SoftThresholdCov& cov, DebiasMode mode,
                                                 const HighDimConfig& cfg,
                                                 std::span<const std::size_t> coords);

// Per-coordinate KKT violation of S_hat theta - (1/n) sum y_i x_i in lambda d|theta_j|.
std::vector<double> kkt_residual(const Dataset& data, std::span<const double> theta,
                                 const SoftThresholdCov& cov, double lambda);

// Solve S_hat u = b by feature-sampled SVRG (exposed for tests).
std::vector<double> svrg_linear_solve(const SoftThresholdCov& cov, std::span<const double> b,
                                      const HighDimConfig& cfg, std::uint64_t seed);

}  // namespace sginfer
