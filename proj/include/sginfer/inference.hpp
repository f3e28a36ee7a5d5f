#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sginfer/mat.hpp"
#include "sginfer/newton.hpp"

namespace sginfer {

enum class CovSource { Replicates, PluginSandwich, NeweyWest };

struct CovarianceEstimate {
    Mat matrix;
    CovSource source = CovSource::Replicates;
    std::size_t meta_T = 0;
    std::size_t meta_L = 0;
    std::size_t meta_batch = 0;  // S_o or lag
};

// (S_o/T) sum_t g_bar_t g_bar_t^T / rho_t^2
CovarianceEstimate covariance_from_replicates(const std::vector<Replicate>& replicates,
                                              std::size_t S_o);
// Same, with the scale factor taken from the replicates themselves.
CovarianceEstimate covariance_from_replicates(const std::vector<Replicate>& replicates);

// H^{-1} G H^{-1} with analytic per-sample Hessians; p <= 512.
CovarianceEstimate plugin_sandwich_lowdim(LossModel loss, const Dataset& data,
                                          std::span<const double> theta_hat);

// Dense Newton oracle for theta_hat (one normal-equations solve for OLS).
std::vector<double> exact_solver(LossModel loss, const Dataset& data,
                                 std::span<const double> theta0);

// Phi and its inverse; quantile is a rational approximation refined by one
// Newton step (absolute accuracy well below 1e-9).
double normal_cdf(double x);
double normal_pdf(double x);
double normal_quantile(double prob);

struct ConfidenceIntervals {
    std::vector<double> center;
    std::vector<double> lower;
    std::vector<double> upper;
    double level = 0.0;
    std::size_t clamped = 0;  // negative diagonal entries clamped to zero
};

// center_j +- z_{(1+level)/2} * sqrt(cov_jj / n)
ConfidenceIntervals confidence_intervals(std::span<const double> center,
                                         const CovarianceEstimate& cov, std::size_t n,
                                         double level);

// Two-sided Z-test: p_j = 2 (1 - Phi(|sqrt(n) (center_j - null_j) / sqrt(cov_jj)|)).
std::vector<double> z_test_pvalues(std::span<const double> center, std::span<const double> null,
                                   const CovarianceEstimate& cov, std::size_t n);

std::vector<bool> bonferroni_threshold(std::span<const double> pvalues, double fwer);

struct ExperimentPreset;  // presets.hpp

enum class InferMethod { ApproxNewton, Svrg, Timeseries, Oracle };

std::string method_name(InferMethod m);
InferMethod method_from_name(const std::string& name);

struct CoverageReport {
    std::string preset;
    std::string method;
    std::size_t n_sims = 0;  // attempted
    double coverage = 0.0;   // over successful sims
    double avg_length = 0.0;
    std::size_t failures = 0;
    std::uint64_t seed = 0;
};

// Runs n_sims independent generate -> estimate -> infer cycles; each sim gets
// its own RNG stream derived from (master_seed, sim index), so the result is
// independent of `threads`. Single-sim failures are excluded and counted;
// more than 10% failures aborts with partial_failure_error.
CoverageReport coverage_simulation(const ExperimentPreset& preset, std::size_t n_sims,
                                   std::uint64_t master_seed, InferMethod method,
                                   std::size_t threads = 1);

// Result of one full inference pipeline run (CLI and coverage share this).
struct PipelineResult {
    std::vector<double> center;
    CovarianceEstimate cov;
    InferenceRun run;  // empty for the oracle method
    bool has_run = false;
};

PipelineResult run_pipeline(const ExperimentPreset& preset, const Dataset& data,
                            InferMethod method, std::uint64_t seed);

}  // namespace sginfer
