#include "sginfer/inference.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <string>
#include <thread>

#include "sginfer/errors.hpp"
#include "sginfer/kernels.hpp"
#include "sginfer/presets.hpp"
#include "sginfer/rng.hpp"
#include "sginfer/timeseries.hpp"

namespace sginfer {

namespace {

using EigenRowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const EigenRowMat> emap(const Mat& m) {
    return {m.a.data(), static_cast<Eigen::Index>(m.rows), static_cast<Eigen::Index>(m.cols)};
}

}  // namespace

CovarianceEstimate covariance_from_replicates(const std::vector<Replicate>& replicates,
                                              std::size_t S_o) {
    if (replicates.empty()) throw usage_error("covariance_from_replicates: empty replicate list");
    const std::size_t p = replicates[0].g_bar.size();
    const std::size_t T = replicates.size();
    CovarianceEstimate est;
    est.source = CovSource::Replicates;
    est.meta_T = T;
    est.meta_batch = S_o;
    est.matrix = Mat(p, p);
    std::vector<double> v(p);
    const double w = static_cast<double>(S_o) / static_cast<double>(T);
    for (const Replicate& rep : replicates) {
        if (rep.g_bar.size() != p) throw usage_error("covariance_from_replicates: ragged replicates");
        const double inv_rho = 1.0 / rep.rho_t;
        for (std::size_t j = 0; j < p; ++j) v[j] = rep.g_bar[j] * inv_rho;
        for (std::size_t r = 0; r < p; ++r) {
            kernels::axpy(w * v[r], v.data(), est.matrix.row(r), p);
        }
    }
    return est;
}

CovarianceEstimate covariance_from_replicates(const std::vector<Replicate>& replicates) {
    if (replicates.empty()) throw usage_error("covariance_from_replicates: empty replicate list");
    const double s = replicates[0].scale;
    const auto S_o = static_cast<std::size_t>(std::llround(s * s));
    return covariance_from_replicates(replicates, S_o);
}

CovarianceEstimate plugin_sandwich_lowdim(LossModel loss, const Dataset& data,
                                          std::span<const double> theta_hat) {
    const std::size_t p = data.p;
    if (p > 512) throw usage_error("plugin_sandwich_lowdim: p must be <= 512");
    if (theta_hat.size() != p) throw usage_error("plugin_sandwich_lowdim: theta length != p");
    Mat h = dense_hessian(loss, data, theta_hat.data());
    Mat g(p, p);
    const double inv_n = 1.0 / static_cast<double>(data.n);
    for (std::size_t i = 0; i < data.n; ++i) {
        const double c = gradient_factor(loss, data, i, theta_hat.data());
        const double w = c * c * inv_n;
        const double* xi = data.row(i);
        for (std::size_t r = 0; r < p; ++r) kernels::axpy(w * xi[r], xi, g.row(r), p);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(emap(h));
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || lo <= 1e-12 * hi) {
        throw linalg_error("plugin_sandwich_lowdim: singular Hessian (smallest eigenvalue " +
                           std::to_string(lo) + ")");
    }
    Eigen::MatrixXd hinv =
        es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    Eigen::MatrixXd out = hinv * emap(g) * hinv;
    CovarianceEstimate est;
    est.source = CovSource::PluginSandwich;
    est.matrix = Mat(p, p);
    for (std::size_t r = 0; r < p; ++r) {
        for (std::size_t c = 0; c < p; ++c) {
            est.matrix(r, c) = out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        }
    }
    // exact symmetry
    for (std::size_t r = 0; r < p; ++r) {
        for (std::size_t c = r + 1; c < p; ++c) {
            const double v = 0.5 * (est.matrix(r, c) + est.matrix(c, r));
            est.matrix(r, c) = v;
            est.matrix(c, r) = v;
        }
    }
    return est;
}

std::vector<double> exact_solver(LossModel loss, const Dataset& data,
                                 std::span<const double> theta0) {
    const std::size_t p = data.p;
    if (p > 512) throw usage_error("exact_solver: p must be <= 512");
    if (theta0.size() != p) throw usage_error("exact_solver: theta0 length != p");
    const std::size_t n = data.n;

    if (loss.kind == LossKind::SquaredLinear) {
        // one normal-equations solve
        Mat xtx(p, p);
        Eigen::VectorXd xty = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double* xi = data.row(i);
            for (std::size_t r = 0; r < p; ++r) kernels::axpy(inv_n * xi[r], xi, xtx.row(r), p);
            for (std::size_t r = 0; r < p; ++r) xty(static_cast<Eigen::Index>(r)) +=
                inv_n * xi[r] * data.y[i];
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(emap(xtx));
        if (ldlt.info() != Eigen::Success) {
            throw linalg_error("exact_solver: normal equations are singular");
        }
        Eigen::VectorXd sol = ldlt.solve(xty);
        return {sol.data(), sol.data() + sol.size()};
    }

    // damped Newton for logistic
    std::vector<double> theta(theta0.begin(), theta0.end());
    std::vector<double> grad(p);
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    const double runoff = 20.0 * (1.0 + std::sqrt(kernels::sum_sq(theta0.data(), p)));
    for (int iter = 0; iter < 100; ++iter) {
        minibatch_gradient(loss, data, all, theta.data(), grad.data());
        const double gnorm = std::sqrt(kernels::sum_sq(grad.data(), p));
        if (gnorm <= 1e-10) {
            // separable data: the gradient vanishes while coefficients run off
            if (std::sqrt(kernels::sum_sq(theta.data(), p)) > runoff) {
                throw numeric_error("exact_solver: iterates diverged (separable data?)");
            }
            return theta;
        }
        Mat h = dense_hessian(loss, data, theta.data());
        Eigen::LDLT<Eigen::MatrixXd> ldlt(emap(h));
        Eigen::VectorXd g(static_cast<Eigen::Index>(p));
        for (std::size_t j = 0; j < p; ++j) g(static_cast<Eigen::Index>(j)) = grad[j];
        Eigen::VectorXd step = ldlt.solve(g);
        if (ldlt.info() != Eigen::Success || !step.allFinite()) {
            throw numeric_error("exact_solver: Newton step failed (singular Hessian)");
        }
        for (std::size_t j = 0; j < p; ++j) theta[j] -= step(static_cast<Eigen::Index>(j));
        double tnorm = std::sqrt(kernels::sum_sq(theta.data(), p));
        if (!std::isfinite(tnorm) || tnorm > 50.0 * runoff) {
            throw numeric_error("exact_solver: iterates diverged (separable data?)");
        }
    }
    throw numeric_error("exact_solver: no convergence in 100 Newton iterations");
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) * 0.3989422804014326779; }

double normal_quantile(double prob) {
    if (!(prob > 0.0 && prob < 1.0)) throw usage_error("normal_quantile: prob must be in (0,1)");
    // rational approximation (Acklam), then one Newton refinement on the CDF
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;
    double x;
    if (prob < p_low) {
        const double q = std::sqrt(-2.0 * std::log(prob));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (prob <= 1.0 - p_low) {
        const double q = prob - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - prob));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double err = normal_cdf(x) - prob;
    x -= err / normal_pdf(x);
    return x;
}

ConfidenceIntervals confidence_intervals(std::span<const double> center,
                                         const CovarianceEstimate& cov, std::size_t n,
                                         double level) {
    if (!(level > 0.0 && level < 1.0)) throw usage_error("confidence_intervals: level in (0,1)");
    const std::size_t p = center.size();
    if (cov.matrix.rows != p || cov.matrix.cols != p) {
        throw usage_error("confidence_intervals: covariance size mismatch");
    }
    const double z = normal_quantile(0.5 * (1.0 + level));
    ConfidenceIntervals ci;
    ci.level = level;
    ci.center.assign(center.begin(), center.end());
    ci.lower.resize(p);
    ci.upper.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
        double var = cov.matrix(j, j);
        if (var < 0.0) {
            var = 0.0;
            ++ci.clamped;
        }
        const double half = z * std::sqrt(var / static_cast<double>(n));
        ci.lower[j] = center[j] - half;
        ci.upper[j] = center[j] + half;
    }
    if (ci.clamped > 0) {
        std::fprintf(stderr,
                     "warning: clamped %zu negative covariance diagonal entries to zero\n",
                     ci.clamped);
    }
    return ci;
}

std::vector<double> z_test_pvalues(std::span<const double> center, std::span<const double> null,
                                   const CovarianceEstimate& cov, std::size_t n) {
    const std::size_t p = center.size();
    if (null.size() != p) throw usage_error("z_test_pvalues: null length mismatch");
    if (cov.matrix.rows != p) throw usage_error("z_test_pvalues: covariance size mismatch");
    std::vector<double> pv(p);
    const double sqrt_n = std::sqrt(static_cast<double>(n));
    for (std::size_t j = 0; j < p; ++j) {
        const double var = cov.matrix(j, j);
        const double diff = center[j] - null[j];
        if (var <= 0.0) {
            pv[j] = diff == 0.0 ? 1.0 : 0.0;  // degenerate convention
            continue;
        }
        const double zj = std::fabs(sqrt_n * diff / std::sqrt(var));
        pv[j] = 2.0 * (1.0 - normal_cdf(zj));
    }
    return pv;
}

std::vector<bool> bonferroni_threshold(std::span<const double> pvalues, double fwer) {
    if (!(fwer > 0.0 && fwer < 1.0)) throw usage_error("bonferroni_threshold: fwer in (0,1)");
    const double cut = fwer / static_cast<double>(pvalues.size());
    std::vector<bool> out(pvalues.size());
    for (std::size_t j = 0; j < pvalues.size(); ++j) out[j] = pvalues[j] <= cut;
    return out;
}

std::string method_name(InferMethod m) {
    switch (m) {
        case InferMethod::ApproxNewton: return "sgd";
        case InferMethod::Svrg: return "svrg";
        case InferMethod::Timeseries: return "timeseries";
        case InferMethod::Oracle: return "oracle";
    }
    return "?";
}

InferMethod method_from_name(const std::string& name) {
    if (name == "sgd") return InferMethod::ApproxNewton;
    if (name == "svrg") return InferMethod::Svrg;
    if (name == "timeseries") return InferMethod::Timeseries;
    if (name == "oracle") return InferMethod::Oracle;
    throw config_error("unknown method: " + name + " (expected sgd|svrg|timeseries|oracle)");
}

PipelineResult run_pipeline(const ExperimentPreset& preset, const Dataset& data,
                            InferMethod method, std::uint64_t seed) {
    PipelineResult out;
    if (method == InferMethod::Oracle) {
        std::vector<double> zero(data.p, 0.0);
        out.center = exact_solver(preset.loss, data, zero);
        out.cov = plugin_sandwich_lowdim(preset.loss, data, out.center);
        return out;
    }
    NewtonInferConfig cfg = preset.newton;
    cfg.seed = seed;
    std::vector<double> theta0 = warm_start(preset.loss, data, cfg);
    if (method == InferMethod::ApproxNewton) {
        out.run = run_inference(preset.loss, data, theta0, cfg);
    } else if (method == InferMethod::Svrg) {
        out.run = run_inference_svrg(preset.loss, data, theta0, cfg, 0.0);
    } else {
        const std::size_t l = preset.lag ? preset.lag : default_lag(data.n);
        out.run = run_inference_timeseries(preset.loss, data, theta0, cfg, l);
    }
    out.has_run = true;
    out.center = out.run.theta_avg;
    out.cov = covariance_from_replicates(out.run.replicates);
    out.cov.meta_L = cfg.L;
    return out;
}

CoverageReport coverage_simulation(const ExperimentPreset& preset, std::size_t n_sims,
                                   std::uint64_t master_seed, InferMethod method,
                                   std::size_t threads) {
    if (n_sims < 1) throw usage_error("coverage_simulation: n_sims must be >= 1");
    const std::size_t p = preset.dim();

    struct SimResult {
        bool ok = false;
        std::size_t covered = 0;
        double length_sum = 0.0;
    };
    std::vector<SimResult> results(n_sims);

    auto run_one = [&](std::size_t s) {
        SimResult r;
        const std::uint64_t child = Rng::derive_seed(master_seed, s);
        Dataset data = preset.generate(child);
        PipelineResult pipe = run_pipeline(preset, data, method, Rng::derive_seed(child, 1));
        ConfidenceIntervals ci =
            confidence_intervals(pipe.center, pipe.cov, data.n, preset.level);
        for (std::size_t j = 0; j < p; ++j) {
            const double truth = preset.truth.theta_star[j];
            if (ci.lower[j] <= truth && truth <= ci.upper[j]) ++r.covered;
            r.length_sum += ci.upper[j] - ci.lower[j];
        }
        r.ok = true;
        return r;
    };

    if (threads <= 1) {
        for (std::size_t s = 0; s < n_sims; ++s) {
            try {
                results[s] = run_one(s);
            } catch (const numeric_error&) {
            } catch (const linalg_error&) {
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            for (;;) {
                const std::size_t s = next.fetch_add(1);
                if (s >= n_sims) return;
                try {
                    results[s] = run_one(s);
                } catch (const numeric_error&) {
                } catch (const linalg_error&) {
                }
            }
        };
        std::vector<std::thread> pool;
        const std::size_t nw = std::min(threads, n_sims);
        pool.reserve(nw);
        for (std::size_t w = 0; w < nw; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // fixed-order reduction
    std::size_t ok = 0, covered = 0;
    double length = 0.0;
    for (const SimResult& r : results) {
        if (!r.ok) continue;
        ++ok;
        covered += r.covered;
        length += r.length_sum;
    }
    const std::size_t failures = n_sims - ok;
    if (failures * 10 > n_sims) {
        throw partial_failure_error("coverage_simulation: " + std::to_string(failures) + " of " +
                                    std::to_string(n_sims) + " simulations failed (> 10%)");
    }
    CoverageReport rep;
    rep.preset = preset.name;
    rep.method = method_name(method);
    rep.n_sims = n_sims;
    rep.failures = failures;
    rep.seed = master_seed;
    if (ok > 0) {
        rep.coverage = static_cast<double>(covered) / (static_cast<double>(p) * ok);
        rep.avg_length = length / (static_cast<double>(p) * ok);
    }
    return rep;
}

}  // namespace sginfer
