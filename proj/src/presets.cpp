#include "sginfer/presets.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>

#include "sginfer/errors.hpp"
#include "sginfer/rng.hpp"

namespace sginfer {

Dataset make_mean_est_dataset(std::size_t n, double mu, double sigma, std::uint64_t seed) {
    Rng rng(seed);
    Dataset d;
    d.n = n;
    d.p = 1;
    d.x.assign(n, 1.0);
    d.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) d.y[i] = mu + sigma * rng.gaussian();
    return d;
}

Dataset ExperimentPreset::generate(std::uint64_t seed) const {
    switch (generator) {
        case Generator::Linear:
            return generate_linear(n, cov, truth, seed);
        case Generator::Logistic:
            return generate_logistic(n, cov, mean_shift, seed);
        case Generator::MaTimeseries:
            return generate_ma_timeseries(n, cov.p, truth.theta_star, ma_a, ma_b, z_sigma, seed);
        case Generator::SparseHighDim:
            return generate_sparse_highdim(n, cov.p, sparsity, amplitude, truth.sigma, seed).first;
        case Generator::MeanEst:
            return make_mean_est_dataset(n, mean_value, truth.sigma, seed);
    }
    throw config_error("unknown generator");
}

std::size_t ExperimentPreset::dim() const { return generator == Generator::MeanEst ? 1 : cov.p; }

namespace {

std::vector<double> constant_vec(std::size_t p, double v) { return std::vector<double>(p, v); }

// Population logistic minimizer for mirrored class-conditional Gaussians:
// theta* = 2 Sigma^{-1} mu.
std::vector<double> logistic_truth(const CovarianceSpec& cov, const std::vector<double>& shift) {
    const std::size_t p = cov.p;
    Mat sigma = cov.dense();
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> sm(
        sigma.a.data(), static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    Eigen::VectorXd mu(static_cast<Eigen::Index>(p));
    for (std::size_t j = 0; j < p; ++j) mu(static_cast<Eigen::Index>(j)) = shift[j];
    Eigen::VectorXd t = 2.0 * sm.llt().solve(mu);
    return {t.data(), t.data() + t.size()};
}

ExperimentPreset lin_preset(const std::string& name, CovarianceSpec cov, double rho0,
                            std::size_t L, double tau0) {
    ExperimentPreset pr;
    pr.name = name;
    pr.loss = LossModel{LossKind::SquaredLinear};
    pr.generator = ExperimentPreset::Generator::Linear;
    pr.n = 100;
    pr.cov = cov;
    pr.truth.theta_star = constant_vec(cov.p, 1.0 / std::sqrt(static_cast<double>(cov.p)));
    pr.truth.sigma = 0.7;
    pr.method = InferMethod::ApproxNewton;
    pr.newton.T = 100;
    pr.newton.L = L;
    pr.newton.S_o = 10;
    pr.newton.S_i = 10;
    pr.newton.rho0 = rho0;
    pr.newton.d_o = 2.0 / 3.0;
    pr.newton.tau0 = tau0;
    pr.newton.d_i = 2.0 / 3.0;
    pr.newton.delta0 = 0.01;
    pr.n_sims = 200;
    return pr;
}

ExperimentPreset log_preset(const std::string& name, CovarianceSpec cov, double tau0) {
    ExperimentPreset pr;
    pr.name = name;
    pr.loss = LossModel{LossKind::Logistic};
    pr.generator = ExperimentPreset::Generator::Logistic;
    pr.n = 100;
    pr.cov = cov;
    pr.mean_shift = constant_vec(cov.p, 0.1 / std::sqrt(static_cast<double>(cov.p)));
    pr.truth.theta_star = logistic_truth(cov, pr.mean_shift);
    pr.truth.sigma = 0.0;
    pr.method = InferMethod::ApproxNewton;
    pr.newton.T = 50;
    pr.newton.L = 100;
    pr.newton.S_o = 10;
    pr.newton.S_i = 10;
    pr.newton.rho0 = 0.1;
    pr.newton.d_o = 2.0 / 3.0;
    pr.newton.tau0 = tau0;
    pr.newton.d_i = 2.0 / 3.0;
    pr.newton.delta0 = 0.01;
    pr.n_sims = 200;
    return pr;
}

ExperimentPreset ts_ma_preset() {
    ExperimentPreset pr;
    pr.name = "ts_ma";
    pr.loss = LossModel{LossKind::SquaredLinear};
    pr.generator = ExperimentPreset::Generator::MaTimeseries;
    pr.n = 200;
    pr.cov = CovarianceSpec::identity(20);
    pr.truth.theta_star = constant_vec(20, 1.0 / std::sqrt(20.0));
    pr.truth.sigma = 0.0;
    pr.ma_a = 0.6;
    pr.ma_b = 0.8;
    pr.z_sigma = 0.7;
    pr.method = InferMethod::Timeseries;
    pr.newton.T = 400;
    pr.newton.L = 100;
    pr.newton.S_o = 10;  // unused by block sampling, kept for the config echo
    pr.newton.S_i = 10;
    pr.newton.rho0 = 0.1;
    pr.newton.d_o = 2.0 / 3.0;
    pr.newton.tau0 = 0.3;
    pr.newton.d_i = 2.0 / 3.0;
    pr.newton.delta0 = 0.01;
    pr.lag = 8;
    pr.n_sims = 100;
    return pr;
}

ExperimentPreset mean_est_preset() {
    ExperimentPreset pr;
    pr.name = "mean_est";
    pr.loss = LossModel{LossKind::SquaredLinear};
    pr.generator = ExperimentPreset::Generator::MeanEst;
    pr.n = 100;
    pr.cov = CovarianceSpec::identity(1);
    pr.mean_value = 0.5;
    pr.truth.theta_star = {0.5};
    pr.truth.sigma = 1.0;
    pr.method = InferMethod::ApproxNewton;
    pr.newton.T = 10000;
    pr.newton.L = 20;
    pr.newton.S_o = 1;
    pr.newton.S_i = 1;
    pr.newton.rho0 = 0.1;
    pr.newton.d_o = 2.0 / 3.0;
    pr.newton.tau0 = 1.0;
    pr.newton.d_i = 2.0 / 3.0;
    pr.newton.delta0 = 0.01;
    pr.n_sims = 100;
    return pr;
}

ExperimentPreset highdim_preset(const std::string& name, bool null_test) {
    ExperimentPreset pr;
    pr.name = name;
    pr.loss = LossModel{LossKind::SquaredLinear};
    pr.generator = ExperimentPreset::Generator::SparseHighDim;
    pr.n = 600;
    pr.cov = CovarianceSpec::identity(1000);
    pr.sparsity = 8;
    pr.amplitude = 1.0 / std::sqrt(8.0);
    pr.truth.theta_star = constant_vec(1000, 0.0);
    for (std::size_t j = 0; j < 8; ++j) pr.truth.theta_star[j] = pr.amplitude;
    pr.truth.sigma = 0.7;
    pr.truth.sparsity = 8;
    pr.highdim.T = 40;
    pr.highdim.S_o = 10;
    pr.highdim.S_i = 10;
    pr.highdim.dense_limit = 64;
    if (null_test) pr.test_coords = {100, 300, 500, 700, 900};
    pr.n_sims = 200;
    return pr;
}

}  // namespace

ExperimentPreset preset_by_name(const std::string& name) {
    if (name == "lin1") return lin_preset("lin1", CovarianceSpec::identity(10), 0.1, 200, 0.5);
    if (name == "lin2") return lin_preset("lin2", CovarianceSpec::toeplitz(10, 0.4), 0.7, 100, 1.0);
    if (name == "log1") return log_preset("log1", CovarianceSpec::identity(10), 2.0);
    if (name == "log2") return log_preset("log2", CovarianceSpec::toeplitz(10, 0.4), 5.0);
    if (name == "ts_ma") return ts_ma_preset();
    if (name == "mean_est") return mean_est_preset();
    if (name == "highdim_null") return highdim_preset("highdim_null", true);
    if (name == "highdim_sparse") return highdim_preset("highdim_sparse", false);
    throw config_error("unknown preset: " + name);
}

std::vector<std::string> preset_names() {
    return {"lin1", "lin2", "log1", "log2", "ts_ma", "mean_est", "highdim_null", "highdim_sparse"};
}

}  // namespace sginfer
