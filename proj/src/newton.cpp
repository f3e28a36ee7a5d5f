#include "sginfer/newton.hpp"

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

#include "newton_engine.hpp"
#include "sginfer/errors.hpp"
#include "sginfer/kernels.hpp"

namespace sginfer {

void NewtonInferConfig::validate() const {
    if (T < 1) throw config_error("T must be >= 1");
    if (L < 1) throw config_error("L must be >= 1");
    if (S_o < 1) throw config_error("S_o must be >= 1");
    if (S_i < 1) throw config_error("S_i must be >= 1");
    if (!(d_o > 0.5 && d_o < 1.0)) throw config_error("d_o must lie in (1/2, 1)");
    if (!(d_i > 0.5 && d_i < 1.0)) throw config_error("d_i must lie in (1/2, 1)");
    if (!(rho0 > 0.0)) throw config_error("rho0 must be > 0");
    if (!(tau0 > 0.0)) throw config_error("tau0 must be > 0");
    if (!(delta0 > 0.0)) throw config_error("delta0 must be > 0");
    if (!(d_L >= 0.0)) throw config_error("d_L must be >= 0");
}

void NewtonInferConfig::check_runnable(std::size_t n) const {
    if (T < 1 || L < 1 || S_o < 1 || S_i < 1) throw usage_error("T, L, S_o, S_i must be >= 1");
    if (S_i > n) throw usage_error("S_i exceeds n (inner sampling is without replacement)");
    if (!(rho0 > 0.0 && tau0 > 0.0 && delta0 > 0.0)) throw usage_error("step scales must be > 0");
    if (!(d_o >= 0.0 && d_o < 1.0 && d_i >= 0.0 && d_i < 1.0)) {
        throw usage_error("decay rates must lie in [0, 1)");
    }
}

double outer_step(double rho0, double d_o, std::size_t t) {
    return rho0 * std::pow(static_cast<double>(t + 1), -d_o);
}

double inner_step(double tau0, double d_i, std::size_t j) {
    return tau0 * std::pow(static_cast<double>(j + 1), -d_i);
}

double hvp_delta(double delta0, double rho_t, double tau_j) {
    const double d = delta0 * rho_t * rho_t * rho_t * rho_t * tau_j * tau_j * tau_j * tau_j;
    return d < 1e-10 ? 1e-10 : d;
}

std::size_t inner_iterations(std::size_t L, double d_L, std::size_t t) {
    if (d_L == 0.0) return L;
    const double v = static_cast<double>(L) * std::pow(static_cast<double>(t + 1), d_L);
    return static_cast<std::size_t>(std::ceil(v));
}

namespace detail {

namespace {

void ensure_finite(const double* v, std::size_t p, std::size_t t, std::size_t j) {
    for (std::size_t k = 0; k < p; ++k) {
        if (!std::isfinite(v[k])) {
            throw numeric_error("non-finite inner iterate at outer t=" + std::to_string(t) +
                                ", inner j=" + std::to_string(j));
        }
    }
}

// One inner solve; g0 carries the -rho_t factor already. Accumulates the
// iterate average including g^0 and leaves g^{L_t} in `g`.
void inner_solve(LossModel loss, const Dataset& data, const double* theta,
                 const std::vector<double>& g0, std::size_t t, const NewtonInferConfig& cfg,
                 Rng& rng, IndexPool& pool, double rho_t, bool g_track,
                 std::vector<double>& g, std::vector<double>& g_sum,
                 // SVRG point track (optional)
                 bool svrg, double eta, const std::vector<double>& d0, std::vector<double>& d,
                 std::vector<double>& d_sum,
                 // scratch
                 std::vector<std::size_t>& batch, std::vector<double>& pert,
                 std::vector<double>& hvp, std::vector<double>& diff) {
    const std::size_t p = data.p;
    g = g0;
    g_sum = g0;
    if (svrg) {
        d = d0;
        d_sum = d0;
    }
    const std::size_t L_t = inner_iterations(cfg.L, cfg.d_L, t);
    for (std::size_t j = 0; j < L_t; ++j) {
        pool.draw(rng, cfg.S_i, batch);
        if (g_track) {
            const double tau = inner_step(cfg.tau0, cfg.d_i, j);
            const double delta = hvp_delta(cfg.delta0, rho_t, tau);
            hvp_finite_difference(loss, data, batch, theta, g.data(), delta, pert.data(),
                                  hvp.data());
            kernels::axpy(-tau, hvp.data(), g.data(), p);
            kernels::axpy(tau, g0.data(), g.data(), p);
            ensure_finite(g.data(), p, t, j);
            for (std::size_t k = 0; k < p; ++k) g_sum[k] += g[k];
        }
        if (svrg) {
            // d^{j+1} = d^j - eta * (1/S_i) sum_k [grad_k(theta + d^j) - grad_k(theta)] + d^0
            for (std::size_t k = 0; k < p; ++k) pert[k] = theta[k] + d[k];
            const double inv = 1.0 / static_cast<double>(batch.size());
            for (std::size_t k = 0; k < p; ++k) diff[k] = 0.0;
            for (std::size_t idx : batch) {
                const double c1 = gradient_factor(loss, data, idx, pert.data());
                const double c0 = gradient_factor(loss, data, idx, theta);
                kernels::axpy((c1 - c0) * inv, data.row(idx), diff.data(), p);
            }
            kernels::axpy(-eta, diff.data(), d.data(), p);
            for (std::size_t k = 0; k < p; ++k) d[k] += d0[k];
            ensure_finite(d.data(), p, t, j);
            for (std::size_t k = 0; k < p; ++k) d_sum[k] += d[k];
        }
    }
    const double inv_cnt = 1.0 / static_cast<double>(L_t + 1);
    if (g_track) kernels::scal(inv_cnt, g_sum.data(), p);
    if (svrg) kernels::scal(inv_cnt, d_sum.data(), p);
}

}  // namespace

InferenceRun run_newton_engine(LossModel loss, const Dataset& data, std::span<const double> theta0,
                               const NewtonInferConfig& cfg, const EngineOptions& opt) {
    data.validate();
    cfg.check_runnable(data.n);
    const std::size_t n = data.n;
    const std::size_t p = data.p;
    if (theta0.size() != p) throw usage_error("theta0 length != p");
    if (opt.block_sampling) {
        if (opt.block_len < 1 || opt.block_len > n) {
            throw usage_error("block length must satisfy 1 <= l <= n");
        }
    }
    if (opt.svrg_point_track && !(opt.eta > 0.0)) throw usage_error("svrg eta must be > 0");

    const double theta0_norm = std::sqrt(kernels::sum_sq(theta0.data(), p));
    const double diverge_limit = 1e6 * (1.0 + theta0_norm);
    const std::size_t outer_count = opt.block_sampling ? opt.block_len : cfg.S_o;
    const double replicate_scale = std::sqrt(static_cast<double>(outer_count));

    IndexPool pool(n);
    InferenceRun run;
    run.config = cfg;
    run.theta_trace.reserve(cfg.T + 1);
    run.replicates.reserve(cfg.T);

    std::vector<double> theta(theta0.begin(), theta0.end());
    run.theta_trace.push_back(theta);

    std::vector<double> g0(p), g(p), g_sum(p), d0, d, d_sum, pert(p), hvp(p), diff;
    std::vector<std::size_t> outer_idx(outer_count), batch;
    std::vector<std::size_t> all_idx;
    if (opt.svrg_point_track) {
        d0.resize(p);
        d.resize(p);
        d_sum.resize(p);
        diff.resize(p);
        all_idx.resize(n);
        for (std::size_t i = 0; i < n; ++i) all_idx[i] = i;
    }

    for (std::size_t t = 0; t < cfg.T; ++t) {
        const double rho_t = outer_step(cfg.rho0, cfg.d_o, t);
        if (opt.svrg_point_track) {
            minibatch_gradient(loss, data, all_idx, theta.data(), d0.data());
            kernels::scal(-opt.eta, d0.data(), p);
        }
        // separate derived streams per iteration: the outer draws at step t do
        // not depend on how many inner draws earlier steps consumed
        Rng outer_rng = Rng::derive(cfg.seed, 2 * t);
        Rng inner_rng = Rng::derive(cfg.seed, 2 * t + 1);
        if (opt.block_sampling) {
            const std::size_t i_o = outer_rng.uniform_index(n);
            run.block_starts.push_back(i_o);
            for (std::size_t k = 0; k < opt.block_len; ++k) outer_idx[k] = (i_o + k) % n;
        } else {
            for (std::size_t k = 0; k < cfg.S_o; ++k) outer_idx[k] = outer_rng.uniform_index(n);
        }
        minibatch_gradient(loss, data, outer_idx, theta.data(), g0.data());
        kernels::scal(-rho_t, g0.data(), p);

        inner_solve(loss, data, theta.data(), g0, t, cfg, inner_rng, pool, rho_t, opt.g_track, g,
                    g_sum, opt.svrg_point_track, opt.eta, d0, d, d_sum, batch, pert, hvp, diff);

        Replicate rep;
        rep.g_bar = g_sum;
        rep.rho_t = rho_t;
        rep.scale = replicate_scale;
        rep.scaled.resize(p);
        const double f = replicate_scale / rho_t;
        for (std::size_t k = 0; k < p; ++k) rep.scaled[k] = f * rep.g_bar[k];
        run.replicates.push_back(std::move(rep));

        const std::vector<double>& step = opt.svrg_point_track ? d_sum : g;
        for (std::size_t k = 0; k < p; ++k) theta[k] += step[k];
        run.theta_trace.push_back(theta);

        double dist2 = 0.0;
        for (std::size_t k = 0; k < p; ++k) {
            const double dk = theta[k] - theta0[k];
            dist2 += dk * dk;
        }
        if (!std::isfinite(dist2) || std::sqrt(dist2) > diverge_limit) {
            throw numeric_error("divergence guard tripped at outer t=" + std::to_string(t) +
                                " (|theta - theta0| > 1e6 * (1 + |theta0|))");
        }
    }

    run.theta_avg.assign(p, 0.0);
    for (std::size_t t = 1; t <= cfg.T; ++t) {
        for (std::size_t k = 0; k < p; ++k) run.theta_avg[k] += run.theta_trace[t][k];
    }
    kernels::scal(1.0 / static_cast<double>(cfg.T), run.theta_avg.data(), p);
    return run;
}

}  // namespace detail

NewtonStepResult solve_newton_step_sgd(LossModel loss, const Dataset& data,
                                       std::span<const double> theta_t, std::span<const double> g0,
                                       std::size_t t, const NewtonInferConfig& cfg, Rng& rng) {
    data.validate();
    cfg.check_runnable(data.n);
    if (theta_t.size() != data.p || g0.size() != data.p) {
        throw usage_error("solve_newton_step_sgd: vector length != p");
    }
    const double rho_t = outer_step(cfg.rho0, cfg.d_o, t);
    detail::IndexPool pool(data.n);
    std::vector<double> g0v(g0.begin(), g0.end());
    std::vector<double> g(data.p), g_sum(data.p), d0, d, d_sum, pert(data.p), hvp(data.p), diff;
    std::vector<std::size_t> batch;
    detail::inner_solve(loss, data, theta_t.data(), g0v, t, cfg, rng, pool, rho_t, true, g, g_sum,
                        false, 0.0, d0, d, d_sum, batch, pert, hvp, diff);
    return NewtonStepResult{std::move(g_sum), std::move(g)};
}

InferenceRun run_inference(LossModel loss, const Dataset& data, std::span<const double> theta0,
                           const NewtonInferConfig& cfg) {
    detail::EngineOptions opt;
    return detail::run_newton_engine(loss, data, theta0, cfg, opt);
}

InferenceRun run_inference_svrg(LossModel loss, const Dataset& data, std::span<const double> theta0,
                                const NewtonInferConfig& cfg, double eta) {
    detail::EngineOptions opt;
    opt.svrg_point_track = true;
    opt.eta = eta > 0.0 ? eta : svrg_defaults(loss, data, theta0).eta;
    return detail::run_newton_engine(loss, data, theta0, cfg, opt);
}

std::vector<double> averaged_estimate(const InferenceRun& run) {
    if (run.theta_trace.size() < 2) throw usage_error("averaged_estimate: run has no iterations");
    const std::size_t p = run.theta_trace[0].size();
    const std::size_t T = run.theta_trace.size() - 1;
    std::vector<double> avg(p, 0.0);
    for (std::size_t t = 1; t <= T; ++t) {
        for (std::size_t k = 0; k < p; ++k) avg[k] += run.theta_trace[t][k];
    }
    kernels::scal(1.0 / static_cast<double>(T), avg.data(), p);
    return avg;
}

SvrgDefaults svrg_defaults(LossModel loss, const Dataset& data, std::span<const double> theta) {
    double beta_max = 0.0;
    for (std::size_t i = 0; i < data.n; ++i) {
        beta_max = std::max(beta_max, kernels::sum_sq(data.row(i), data.p));
    }
    if (!(beta_max > 0.0)) throw usage_error("svrg_defaults: all-zero design matrix");
    if (data.p > 64) {
        throw config_error("svrg_defaults: alpha estimation requires p <= 64; pass eta and L");
    }
    Mat h = dense_hessian(loss, data, theta.data());
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> hm(
        h.a.data(), static_cast<Eigen::Index>(data.p), static_cast<Eigen::Index>(data.p));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hm);
    const double alpha = es.eigenvalues().minCoeff();
    if (!(alpha > 0.0)) {
        throw linalg_error("svrg_defaults: Hessian not positive definite (alpha = " +
                           std::to_string(alpha) + ")");
    }
    SvrgDefaults out;
    out.beta_max = beta_max;
    out.alpha = alpha;
    out.eta = 1.0 / (10.0 * beta_max);
    out.L = static_cast<std::size_t>(std::ceil(20.0 * beta_max / alpha));
    return out;
}

std::vector<double> warm_start(LossModel loss, const Dataset& data, const NewtonInferConfig& cfg,
                               std::size_t epochs) {
    std::vector<double> zero(data.p, 0.0);
    SvrgDefaults defs = svrg_defaults(loss, data, zero);
    NewtonInferConfig wcfg = cfg;
    wcfg.T = epochs;
    wcfg.L = defs.L;
    wcfg.seed = SplitMix64(cfg.seed ^ 0x77a5f3u).next();  // separate stream from the main run
    detail::EngineOptions opt;
    opt.svrg_point_track = true;
    opt.eta = defs.eta;
    opt.g_track = false;
    InferenceRun run = detail::run_newton_engine(loss, data, zero, wcfg, opt);
    return run.theta_trace.back();
}

}  // namespace sginfer
