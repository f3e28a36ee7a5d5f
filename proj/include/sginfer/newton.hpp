#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sginfer/dataset.hpp"
#include "sginfer/model.hpp"
#include "sginfer/rng.hpp"

namespace sginfer {

// Hyperparameters of the nested inference loops.
struct NewtonInferConfig {
    std::size_t T = 100;    // outer iterations
    std::size_t L = 100;    // inner iterations (base)
    std::size_t S_o = 10;   // outer batch (with replacement)
    std::size_t S_i = 10;   // inner batch (without replacement)
    double rho0 = 0.1;      // outer step scale
    double d_o = 2.0 / 3.0; // outer decay, in (1/2, 1)
    double tau0 = 1.0;      // inner step scale
    double d_i = 2.0 / 3.0; // inner decay, in (1/2, 1)
    double delta0 = 0.01;   // HVP finite-difference scale multiplier
    double d_L = 0.0;       // inner-loop growth exponent; 0 = constant L
    std::uint64_t seed = 0;

    // Strict ranges (what the CLI enforces). Engines accept a weaker contract
    // so tests can override e.g. d_o = 0 for constant outer steps.
    void validate() const;
    void check_runnable(std::size_t n) const;
};

// One outer iteration's inner-loop average, scaled for inference.
struct Replicate {
    std::vector<double> g_bar;
    double rho_t = 0.0;
    double scale = 1.0;           // sqrt(S_o), or sqrt(l) for block sampling
    std::vector<double> scaled;   // scale * g_bar / rho_t
};

struct InferenceRun {
    std::vector<std::vector<double>> theta_trace;  // length T+1, includes theta_0
    std::vector<Replicate> replicates;             // length T
    std::vector<double> theta_avg;                 // (1/T) sum_{t=1..T} theta_t
    std::vector<std::size_t> block_starts;         // time-series runs only
    NewtonInferConfig config;
};

// rho_t = rho0 * (t+1)^{-d_o}
double outer_step(double rho0, double d_o, std::size_t t);
// tau_j = tau0 * (j+1)^{-d_i}
double inner_step(double tau0, double d_i, std::size_t j);
// delta = delta0 * rho_t^4 * tau_j^4, clamped below at 1e-10
double hvp_delta(double delta0, double rho_t, double tau_j);
// L_t = ceil(L * (t+1)^{d_L})
std::size_t inner_iterations(std::size_t L, double d_L, std::size_t t);

struct NewtonStepResult {
    std::vector<double> g_bar;
    std::vector<double> g_last;
};

// Inner SGD solve of one approximate Newton step. g0 must already carry the
// -rho_t scaling. Consumes rng for the inner batches only.
NewtonStepResult solve_newton_step_sgd(LossModel loss, const Dataset& data,
                                       std::span<const double> theta_t, std::span<const double> g0,
                                       std::size_t t, const NewtonInferConfig& cfg, Rng& rng);

// SGD-inner-loop inference (replicates + point track in one pass).
InferenceRun run_inference(LossModel loss, const Dataset& data, std::span<const double> theta0,
                           const NewtonInferConfig& cfg);

// SVRG variant: same replicate stream layout, but the point-estimate track
// takes variance-reduced steps anchored at a full gradient per outer loop.
// eta <= 0 selects the default 1/(10 max_i beta_i).
InferenceRun run_inference_svrg(LossModel loss, const Dataset& data, std::span<const double> theta0,
                                const NewtonInferConfig& cfg, double eta);

std::vector<double> averaged_estimate(const InferenceRun& run);

struct SvrgDefaults {
    double eta;
    std::size_t L;
    double beta_max;
    double alpha;
};

// eta = 1/(10 max beta_i), L = ceil(20 max beta_i / alpha); beta_i = ||x_i||^2,
// alpha = smallest eigenvalue of the dense Hessian at theta (p <= 64 required).
SvrgDefaults svrg_defaults(LossModel loss, const Dataset& data, std::span<const double> theta);

// Default initialization policy: SVRG point track only, run for `epochs`
// outer loops from the zero vector; replicates are discarded.
std::vector<double> warm_start(LossModel loss, const Dataset& data, const NewtonInferConfig& cfg,
                               std::size_t epochs = 5);

}  // namespace sginfer
