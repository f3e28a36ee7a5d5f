#include <doctest.h>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <vector>

#include "sginfer/errors.hpp"
#include "sginfer/highdim.hpp"
#include "sginfer/inference.hpp"
#include "sginfer/kernels.hpp"
#include "sginfer/model.hpp"
#include "sginfer/rng.hpp"

using namespace sginfer;

namespace {

Dataset random_design(std::size_t n, std::size_t p, double sigma, std::uint64_t seed,
                      std::size_t sparsity = 0, double amplitude = 0.0) {
    SyntheticTruth truth;
    truth.theta_star.assign(p, 0.0);
    for (std::size_t j = 0; j < sparsity; ++j) truth.theta_star[j] = amplitude;
    truth.sigma = sigma;
    return generate_linear(n, CovarianceSpec::identity(p), truth, seed);
}

Mat raw_covariance(const Dataset& d) {
    Mat c(d.p, d.p);
    for (std::size_t i = 0; i < d.n; ++i) {
        const double* xi = d.row(i);
        for (std::size_t r = 0; r < d.p; ++r) {
            kernels::axpy(xi[r] / d.n, xi, c.row(r), d.p);
        }
    }
    return c;
}

double max_abs_diff(const Mat& a, const Mat& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.a.size(); ++i) m = std::max(m, std::fabs(a.a[i] - b.a[i]));
    return m;
}

std::vector<double> dense_solve(const Mat& s, const std::vector<double>& b) {
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> sm(
        s.a.data(), s.rows, s.cols);
    Eigen::VectorXd rhs(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) rhs(i) = b[i];
    Eigen::VectorXd u = Eigen::MatrixXd(sm).ldlt().solve(rhs);
    return {u.data(), u.data() + u.size()};
}

}  // namespace

TEST_CASE("soft threshold scalars") {
    CHECK(shrink(0.5, 0.2) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(shrink(-0.1, 0.2) == 0.0);
    CHECK(shrink(-0.7, 0.2) == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(shrink(1.25, 0.0) == 1.25);  // lambda = 0 leaves the prox as the identity
}

TEST_CASE("soft-thresholded covariance storage modes") {
    SUBCASE("orthogonal design gives thresholded unit columns") {
        Dataset d;
        d.n = 8;
        d.p = 8;
        d.x.assign(64, 0.0);
        for (std::size_t i = 0; i < 8; ++i) d.x[i * 8 + i] = std::sqrt(8.0);
        d.y.assign(8, 0.0);
        const double omega = 0.25;
        SoftThresholdCov cov(d, omega, 64);
        for (std::size_t k = 0; k < 8; ++k) {
            auto col = s_hat_column(cov, k);
            for (std::size_t j = 0; j < 8; ++j) {
                CHECK(col[j] == (j == k ? doctest::Approx(0.75).epsilon(1e-14)
                                        : doctest::Approx(0.0)));
            }
        }
    }
    SUBCASE("dense, sparse and implicit agree column by column") {
        Dataset d = random_design(40, 50, 0.5, 1);
        const double omega = 0.08;
        SoftThresholdCov dense(d, omega, 64, SoftThresholdCov::Mode::Dense);
        SoftThresholdCov sparse(d, omega, 64, SoftThresholdCov::Mode::Sparse);
        SoftThresholdCov implicit(d, omega, 64, SoftThresholdCov::Mode::Implicit);
        CHECK(dense.storage() == SoftThresholdCov::Mode::Dense);
        CHECK(sparse.storage() == SoftThresholdCov::Mode::Sparse);
        CHECK(implicit.storage() == SoftThresholdCov::Mode::Implicit);
        for (std::size_t k = 0; k < 50; ++k) {
            auto cd = dense.column(k);
            auto cs = sparse.column(k);
            auto ci = implicit.column(k);
            for (std::size_t j = 0; j < 50; ++j) {
                CHECK(std::fabs(cd[j] - cs[j]) <= 1e-12);
                CHECK(std::fabs(cd[j] - ci[j]) <= 1e-12);
            }
        }
        Rng rng(2);
        std::vector<double> v(50);
        for (auto& x : v) x = rng.gaussian();
        auto mvd = dense.matvec(v);
        auto mvs = sparse.matvec(v);
        auto mvi = implicit.matvec(v);
        for (std::size_t j = 0; j < 50; ++j) {
            CHECK(std::fabs(mvd[j] - mvs[j]) <= 1e-12);
            CHECK(std::fabs(mvd[j] - mvi[j]) <= 1e-12);
        }
    }
    SUBCASE("entries never exceed the raw covariance, symmetry exact") {
        Dataset d = random_design(30, 20, 0.5, 3);
        SoftThresholdCov cov(d, 0.1, 64);
        Mat s = cov.materialize();
        Mat c = raw_covariance(d);
        for (std::size_t r = 0; r < 20; ++r) {
            for (std::size_t col = 0; col < 20; ++col) {
                CHECK(std::fabs(s(r, col)) <= std::fabs(c(r, col)) + 1e-15);
                CHECK(s(r, col) == s(col, r));
            }
        }
    }
    SUBCASE("a threshold above max|C| kills everything") {
        Dataset d = random_design(30, 10, 0.5, 4);
        Mat c = raw_covariance(d);
        double cmax = 0.0;
        for (double v : c.a) cmax = std::max(cmax, std::fabs(v));
        SoftThresholdCov cov(d, cmax + 0.1, 64);
        Mat s = cov.materialize();
        for (double v : s.a) CHECK(v == 0.0);
    }
    SUBCASE("matvec is linear and maps basis vectors to columns") {
        Dataset d = random_design(25, 30, 0.5, 5);
        SoftThresholdCov cov(d, 0.05, 16);  // above dense_limit: sparse path
        Rng rng(6);
        std::vector<double> u(30), w(30), combo(30);
        for (std::size_t j = 0; j < 30; ++j) {
            u[j] = rng.gaussian();
            w[j] = rng.gaussian();
            combo[j] = 2.0 * u[j] - 0.5 * w[j];
        }
        auto mu = cov.matvec(u);
        auto mw = cov.matvec(w);
        auto mc = cov.matvec(combo);
        for (std::size_t j = 0; j < 30; ++j) {
            CHECK(std::fabs(mc[j] - (2.0 * mu[j] - 0.5 * mw[j])) <= 1e-10);
        }
        std::vector<double> e(30, 0.0);
        e[7] = 1.0;
        auto col = cov.column(7);
        auto mv = cov.matvec(e);
        for (std::size_t j = 0; j < 30; ++j) CHECK(mv[j] == doctest::Approx(col[j]).epsilon(1e-14));
    }
    SUBCASE("no p x p structure at p = 2000") {
        Dataset d = random_design(50, 2000, 0.5, 7);
        const std::size_t pxp_bytes = 2000ul * 2000ul * 8ul;
        SoftThresholdCov implicit(d, 0.4, 64, SoftThresholdCov::Mode::Implicit);
        CHECK(implicit.owned_bytes() < pxp_bytes / 16);
        std::vector<double> v(2000, 0.0);
        v[3] = 1.0;
        auto mv = implicit.matvec(v);
        CHECK(implicit.owned_bytes() < pxp_bytes / 16);  // matvec allocated nothing lasting
        SoftThresholdCov sparse(d, 0.4, 64, SoftThresholdCov::Mode::Sparse);
        CHECK(sparse.owned_bytes() < pxp_bytes / 16);
        auto mv2 = sparse.matvec(v);
        for (std::size_t j = 0; j < 2000; ++j) CHECK(std::fabs(mv[j] - mv2[j]) <= 1e-12);
    }
}

TEST_CASE("modified lasso objective") {
    Dataset d = random_design(40, 12, 0.5, 8);
    SoftThresholdCov cov(d, 0.07, 64);
    SUBCASE("zero vector leaves only the response energy") {
        std::vector<double> zero(12, 0.0);
        double ysq = 0.0;
        for (double y : d.y) ysq += y * y;
        CHECK(modified_lasso_objective(d, zero, cov, 0.3) ==
              doctest::Approx(ysq / (2.0 * d.n)).epsilon(1e-13));
    }
    SUBCASE("omega = 0 reduces to the plain lasso objective") {
        SoftThresholdCov plain(d, 0.0, 64);
        Rng rng(9);
        std::vector<double> theta(12);
        for (auto& t : theta) t = 0.3 * rng.gaussian();
        double fit = 0.0;
        for (std::size_t i = 0; i < d.n; ++i) {
            const double r = kernels::dot(d.row(i), theta.data(), 12) - d.y[i];
            fit += r * r;
        }
        double l1 = 0.0;
        for (double t : theta) l1 += std::fabs(t);
        const double lambda = 0.15;
        CHECK(modified_lasso_objective(d, theta, plain, lambda) ==
              doctest::Approx(fit / (2.0 * d.n) + lambda * l1).epsilon(1e-10));
    }
    SUBCASE("matches the dense evaluation") {
        Rng rng(10);
        std::vector<double> theta(12);
        for (auto& t : theta) t = 0.4 * rng.gaussian();
        Mat s = cov.materialize();
        Mat c = raw_covariance(d);
        double quad = 0.0;
        for (std::size_t r = 0; r < 12; ++r) {
            for (std::size_t k = 0; k < 12; ++k) {
                quad += theta[r] * (s(r, k) - c(r, k)) * theta[k];
            }
        }
        double fit = 0.0;
        for (std::size_t i = 0; i < d.n; ++i) {
            const double r = kernels::dot(d.row(i), theta.data(), 12) - d.y[i];
            fit += r * r;
        }
        double l1 = 0.0;
        for (double t : theta) l1 += std::fabs(t);
        CHECK(modified_lasso_objective(d, theta, cov, 0.2) ==
              doctest::Approx(0.5 * quad + fit / (2.0 * d.n) + 0.2 * l1).epsilon(1e-10));
    }
}

TEST_CASE("default hyperparameters") {
    SUBCASE("closed form above the dense limit") {
        Dataset d = random_design(50, 100, 0.5, 11);
        HyperParams hp = default_hyperparams(d, 1.0, 0.0, 64);
        const double base = std::sqrt(std::log(100.0) / 50.0);
        CHECK(hp.omega == doctest::Approx(base).epsilon(1e-14));
        CHECK(hp.lambda == doctest::Approx(0.20 * base).epsilon(1e-14));
    }
    SUBCASE("8-sparse preset scale") {
        Dataset d = random_design(600, 1000, 0.7, 12, 8, 1.0 / std::sqrt(8.0));
        HyperParams hp = default_hyperparams(d, 0.7, 8.0 / std::sqrt(8.0), 65);
        CHECK(hp.omega == doctest::Approx(0.10730).epsilon(1e-3));
    }
    SUBCASE("rates vanish as n grows") {
        Dataset small = random_design(20, 10, 0.5, 13);
        Dataset big = random_design(20000, 10, 0.5, 14);
        HyperParams a = default_hyperparams(small, 1.0, 1.0, 0);  // dense search off
        HyperParams b = default_hyperparams(big, 1.0, 1.0, 0);
        CHECK(b.lambda < a.lambda);
        CHECK(b.omega < a.omega);
        CHECK(b.omega <= 0.05);
    }
    SUBCASE("condition-number search below the dense limit") {
        Dataset d = random_design(200, 16, 0.5, 15);
        HyperParams hp = default_hyperparams(d, 1.0, 0.0, 64);
        CHECK(hp.omega > 0.0);
        // the chosen threshold must not beat the plain base choice's condition number
        auto cond_of = [&](double omega) {
            SoftThresholdCov cov(d, omega, 64, SoftThresholdCov::Mode::Dense);
            Mat s = cov.materialize();
            Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                           Eigen::RowMajor>>
                sm(s.a.data(), 16, 16);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(sm),
                                                              Eigen::EigenvaluesOnly);
            return es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
        };
        const double base = std::sqrt(std::log(16.0) / 200.0);
        CHECK(cond_of(hp.omega) <= cond_of(base) + 1e-9);
    }
}

TEST_CASE("svrg linear solve matches a dense solve") {
    Dataset d = random_design(80, 50, 0.5, 16);
    SoftThresholdCov cov(d, 0.06, 64);
    Mat s = cov.materialize();
    Rng rng(17);
    std::vector<double> b(50);
    for (auto& v : b) v = rng.gaussian();
    HighDimConfig cfg;
    cfg.solve_epochs = 200;
    std::vector<double> u = svrg_linear_solve(cov, b, cfg, 18);
    std::vector<double> ref = dense_solve(s, b);
    for (std::size_t j = 0; j < 50; ++j) CHECK(std::fabs(u[j] - ref[j]) <= 1e-6);
}

TEST_CASE("proximal SVRG point estimate") {
    SUBCASE("huge lambda collapses to zero") {
        Dataset d = random_design(60, 20, 0.5, 19, 4, 1.0);
        SoftThresholdCov cov(d, 0.05, 64);
        HighDimConfig cfg;
        cfg.point_epochs = 30;
        std::vector<double> theta0(20, 0.3);
        auto theta = prox_svrg_point_estimate(d, cov, 1e9, cfg, theta0);
        // the epoch average keeps a geometrically vanishing sliver of the anchor
        for (double t : theta) CHECK(std::fabs(t) <= 1e-12);
    }
    SUBCASE("omega = lambda = 0 recovers OLS") {
        Dataset d = random_design(80, 20, 0.5, 20, 4, 1.0);
        SoftThresholdCov cov(d, 0.0, 64);
        HighDimConfig cfg;
        cfg.point_epochs = 800;
        cfg.eta = 0.075;  // the unthresholded covariance tolerates a larger step
        std::vector<double> zero(20, 0.0);
        auto theta = prox_svrg_point_estimate(d, cov, 0.0, cfg, zero);
        auto ols = exact_solver({LossKind::SquaredLinear}, d, zero);
        for (std::size_t j = 0; j < 20; ++j) CHECK(std::fabs(theta[j] - ols[j]) <= 1e-6);
    }
    SUBCASE("KKT residual at the solution") {
        Dataset d = random_design(200, 50, 0.7, 21, 8, 1.0 / std::sqrt(8.0));
        HyperParams hp = default_hyperparams(d, 0.7, std::sqrt(8.0), 64);
        SoftThresholdCov cov(d, hp.omega, 64);
        HighDimConfig cfg;
        cfg.point_epochs = 400;
        std::vector<double> zero(50, 0.0);
        auto theta = prox_svrg_point_estimate(d, cov, hp.lambda, cfg, zero);
        auto res = kkt_residual(d, theta, cov, hp.lambda);
        for (double r : res) CHECK(r <= 1e-4);
    }
}

TEST_CASE("high-dimensional inference loop") {
    SUBCASE("interpolating start with plain objective stays put") {
        SyntheticTruth truth;
        truth.theta_star = {0.5, -0.5, 0.25, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
        truth.sigma = 0.0;
        Dataset d = generate_linear(40, CovarianceSpec::identity(10), truth, 22);
        SoftThresholdCov cov(d, 0.0, 64);
        HighDimConfig cfg;
        cfg.T = 5;
        cfg.seed = 23;
        auto [run, theta] = highdim_inference(d, cov, 0.0, cfg, truth.theta_star);
        // the optimization track jitters at summation-rounding scale only
        for (const Replicate& rep : run.replicates) {
            for (double v : rep.scaled) CHECK(std::fabs(v) <= 1e-12);
        }
        for (std::size_t j = 0; j < 10; ++j) {
            CHECK(std::fabs(theta[j] - truth.theta_star[j]) <= 1e-12);
        }
    }
    SUBCASE("inner solves approach S^{-1} g0 (dense oracle)") {
        Dataset d = random_design(60, 30, 0.5, 24, 4, 0.8);
        SoftThresholdCov cov(d, 0.06, 64);
        HighDimConfig cfg;
        cfg.T = 1;
        cfg.S_o = 10;
        cfg.L_o_schedule = {400};
        cfg.seed = 25;
        std::vector<double> zero(30, 0.0);
        HighDimConfig pcfg = cfg;
        pcfg.point_epochs = 200;
        auto theta_hat = prox_svrg_point_estimate(d, cov, 0.05, pcfg, zero);
        auto [run, theta] = highdim_inference(d, cov, 0.05, cfg, theta_hat);

        // the engine draws the S_o outer indices first from Rng(seed)
        Rng rng(cfg.seed);
        std::vector<std::size_t> outer(cfg.S_o);
        for (auto& i : outer) i = rng.uniform_index(d.n);
        auto g0 = minibatch_gradient({LossKind::SquaredLinear}, d, outer, theta_hat);
        for (auto& v : g0) v = -v;
        std::vector<double> target = dense_solve(cov.materialize(), g0);
        double err = 0.0, ref = 0.0;
        for (std::size_t j = 0; j < 30; ++j) {
            err += (run.replicates[0].g_bar[j] - target[j]) * (run.replicates[0].g_bar[j] - target[j]);
            ref += target[j] * target[j];
        }
        CHECK(std::sqrt(err) <= 0.02 * std::sqrt(ref));
    }
    SUBCASE("replicate covariance approaches the plug-in sandwich as T grows") {
        // theorem regime: O(1) outer batches (the lasso gradient mean inflates
        // the second moment for larger S_o) and enough epochs per solve
        Dataset d = random_design(150, 30, 0.7, 26, 4, 0.7);
        HyperParams hp = default_hyperparams(d, 0.7, 4 * 0.7, 64);
        SoftThresholdCov cov(d, hp.omega, 64);
        HighDimConfig cfg;
        cfg.seed = 27;
        cfg.point_epochs = 300;
        cfg.S_o = 1;
        cfg.L_o_schedule = {60};
        std::vector<double> zero(30, 0.0);
        auto theta_hat = prox_svrg_point_estimate(d, cov, hp.lambda, cfg, zero);
        Mat plug = plugin_sandwich_highdim(d, theta_hat, cov);
        auto run_err = [&](std::size_t T, std::uint64_t seed) {
            HighDimConfig c2 = cfg;
            c2.T = T;
            c2.seed = seed;
            auto [run, theta] = highdim_inference(d, cov, hp.lambda, c2, theta_hat);
            auto est = covariance_from_replicates(run.replicates);
            return max_abs_diff(est.matrix, plug);
        };
        double small_sum = 0.0, big_sum = 0.0;
        for (std::uint64_t s = 0; s < 3; ++s) {
            small_sum += run_err(150, 100 + s);
            big_sum += run_err(2400, 200 + s);
        }
        // two quadruplings of T: expect roughly a quartering, allow slack
        CHECK(big_sum <= 0.5 * small_sum);
    }
}

TEST_CASE("de-biased estimator") {
    SUBCASE("identity when the correction vanishes at OLS") {
        Dataset d = random_design(80, 20, 0.5, 28, 4, 1.0);
        SoftThresholdCov cov(d, 0.0, 64);
        HighDimConfig cfg;
        cfg.point_epochs = 400;
        std::vector<double> zero(20, 0.0);
        auto ols = exact_solver({LossKind::SquaredLinear}, d, zero);
        DebiasedEstimate est = debiased_estimator(d, ols, cov, DebiasMode::ExactDense, cfg);
        for (std::size_t j = 0; j < 20; ++j) {
            CHECK(std::fabs(est.theta_d[j] - ols[j]) <= 1e-10);
        }
    }
    SUBCASE("svrg mode agrees with the dense mode") {
        Dataset d = random_design(150, 50, 0.7, 29, 8, 1.0 / std::sqrt(8.0));
        HyperParams hp = default_hyperparams(d, 0.7, std::sqrt(8.0), 64);
        SoftThresholdCov cov(d, hp.omega, 64);
        HighDimConfig cfg;
        cfg.point_epochs = 300;
        cfg.solve_epochs = 200;
        cfg.seed = 30;
        std::vector<double> zero(50, 0.0);
        auto theta_hat = prox_svrg_point_estimate(d, cov, hp.lambda, cfg, zero);
        DebiasedEstimate a = debiased_estimator(d, theta_hat, cov, DebiasMode::ExactDense, cfg);
        DebiasedEstimate b = debiased_estimator(d, theta_hat, cov, DebiasMode::Svrg, cfg);
        for (std::size_t j = 0; j < 50; ++j) {
            CHECK(std::fabs(a.theta_d[j] - b.theta_d[j]) <= 1e-6);
            CHECK(std::fabs(a.variance[j] - b.variance[j]) <= 1e-6);
        }
    }
    SUBCASE("decomposition identity") {
        const std::size_t p = 50, n = 150, s = 8;
        SyntheticTruth truth;
        truth.theta_star.assign(p, 0.0);
        for (std::size_t j = 0; j < s; ++j) truth.theta_star[j] = 1.0 / std::sqrt(double(s));
        truth.sigma = 0.7;
        Dataset d = generate_linear(n, CovarianceSpec::identity(p), truth, 31);
        HyperParams hp = default_hyperparams(d, 0.7, std::sqrt(double(s)), 64);
        SoftThresholdCov cov(d, hp.omega, 64);
        HighDimConfig cfg;
        cfg.point_epochs = 300;
        std::vector<double> zero(p, 0.0);
        auto theta_hat = prox_svrg_point_estimate(d, cov, hp.lambda, cfg, zero);
        DebiasedEstimate est = debiased_estimator(d, theta_hat, cov, DebiasMode::ExactDense, cfg);

        // theta_d - theta* = S^{-1} (1/n) sum eps_i x_i + (I - S^{-1} C)(theta_hat - theta*)
        std::vector<double> eps_moment(p, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double eps = d.y[i] - kernels::dot(d.row(i), truth.theta_star.data(), p);
            kernels::axpy(eps / n, d.row(i), eps_moment.data(), p);
        }
        Mat c = raw_covariance(d);
        Mat smat = cov.materialize();
        std::vector<double> dh(p);
        for (std::size_t j = 0; j < p; ++j) dh[j] = theta_hat[j] - truth.theta_star[j];
        std::vector<double> cdh(p, 0.0);
        for (std::size_t r = 0; r < p; ++r) cdh[r] = kernels::dot(c.row(r), dh.data(), p);
        std::vector<double> t1 = dense_solve(smat, eps_moment);
        std::vector<double> t2 = dense_solve(smat, cdh);
        for (std::size_t j = 0; j < p; ++j) {
            const double rhs = t1[j] + dh[j] - t2[j];
            const double lhs = est.theta_d[j] - truth.theta_star[j];
            CHECK(std::fabs(lhs - rhs) <= 1e-8);
        }
    }
}

TEST_CASE("high-dimensional plug-in sandwich") {
    SUBCASE("zero residuals give zero") {
        SyntheticTruth truth;
        truth.theta_star = {0.5, -0.25};
        truth.sigma = 0.0;
        Dataset d = generate_linear(20, CovarianceSpec::identity(2), truth, 32);
        SoftThresholdCov cov(d, 0.01, 64);
        Mat m = plugin_sandwich_highdim(d, truth.theta_star, cov);
        for (double v : m.a) CHECK(std::fabs(v) <= 1e-25);
    }
    SUBCASE("scalar case closed form") {
        Dataset d;
        d.n = 3;
        d.p = 1;
        d.x = {1.0, 2.0, -1.0};
        d.y = {0.5, 1.0, 0.25};
        std::vector<double> theta{0.3};
        SoftThresholdCov cov(d, 0.2, 64);
        const double s = cov.column(0)[0];
        double m = 0.0;
        for (std::size_t i = 0; i < 3; ++i) {
            const double r = d.x[i] * theta[0] - d.y[i];
            m += r * r * d.x[i] * d.x[i] / 3.0;
        }
        Mat out = plugin_sandwich_highdim(d, theta, cov);
        CHECK(out(0, 0) == doctest::Approx(m / (s * s)).epsilon(1e-12));
    }
    SUBCASE("diagonal mode matches the full matrix") {
        Dataset d = random_design(60, 20, 0.6, 33, 4, 0.8);
        SoftThresholdCov cov(d, 0.05, 64);
        HighDimConfig cfg;
        cfg.solve_epochs = 200;
        cfg.seed = 34;
        std::vector<double> theta(20, 0.1);
        Mat full = plugin_sandwich_highdim(d, theta, cov);
        std::vector<std::size_t> coords{0, 7, 19};
        auto diag_exact =
            plugin_sandwich_highdim_diag(d, theta, cov, DebiasMode::ExactDense, cfg, coords);
        auto diag_svrg = plugin_sandwich_highdim_diag(d, theta, cov, DebiasMode::Svrg, cfg, coords);
        for (std::size_t j : coords) {
            CHECK(std::fabs(diag_exact[j] - full(j, j)) <= 1e-10);
            CHECK(std::fabs(diag_svrg[j] - full(j, j)) <= 1e-6);
        }
    }
}

TEST_CASE("epoch schedule default") {
    HighDimConfig cfg;
    for (std::size_t t : {std::size_t(0), std::size_t(3), std::size_t(50)}) {
        const double expected = std::ceil(std::log(1000.0) * std::log(double(t + 2)));
        CHECK(cfg.epochs_at(t, 1000) == std::size_t(expected));
    }
    cfg.L_o_schedule = {5, 7};
    CHECK(cfg.epochs_at(0, 1000) == 5);
    CHECK(cfg.epochs_at(1, 1000) == 7);
    CHECK(cfg.epochs_at(9, 1000) == 7);  // clamps to the last entry
}
