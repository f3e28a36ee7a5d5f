#include <doctest.h>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <vector>

#include "sginfer/errors.hpp"
#include "sginfer/kernels.hpp"
#include "sginfer/model.hpp"
#include "sginfer/presets.hpp"
#include "sginfer/rng.hpp"
#include "sginfer/timeseries.hpp"

using namespace sginfer;

TEST_CASE("circular blocks") {
    CHECK(circular_block(3, 3, 4) == std::vector<std::size_t>{3, 0, 1});
    CHECK(circular_block(0, 1, 5) == std::vector<std::size_t>{0});
    CHECK_THROWS_AS(circular_block(0, 6, 5), usage_error);
    CHECK_THROWS_AS(circular_block(5, 2, 5), usage_error);
    SUBCASE("every index appears in exactly l blocks") {
        const std::size_t n = 11, l = 4;
        std::vector<std::size_t> counts(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t idx : circular_block(i, l, n)) ++counts[idx];
        }
        for (std::size_t c : counts) CHECK(c == l);
    }
}

TEST_CASE("hac weights") {
    CHECK(hac_weight(HacWeighting::Bartlett, 1, 1) == doctest::Approx(0.5));
    CHECK(hac_weight(HacWeighting::AlgorithmImplied, 1, 1) == 0.0);
    for (std::size_t l : {std::size_t(1), std::size_t(5), std::size_t(9)}) {
        for (std::size_t j = 0; j <= l; ++j) {
            for (auto k : {HacWeighting::Bartlett, HacWeighting::AlgorithmImplied}) {
                const double w = hac_weight(k, j, l);
                CHECK(w >= 0.0);
                CHECK(w <= 1.0);
            }
        }
    }
}

TEST_CASE("newey-west estimator") {
    SUBCASE("lag terms vanish under the implied weight at l = 1") {
        std::vector<std::vector<double>> g{{1.0}, {-1.0}};
        Mat m = newey_west(g, 1, HacWeighting::AlgorithmImplied);
        CHECK(m(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("bartlett l = 1 on the same gradients") {
        std::vector<std::vector<double>> g{{1.0}, {-1.0}};
        Mat m = newey_west(g, 1, HacWeighting::Bartlett);
        // (1/2)[(1+1) + (1/2)*2*(-1)] = 0.5, by direct formula evaluation
        CHECK(m(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    }
    SUBCASE("iid gradients: close to the lag-0 variance") {
        Rng rng(3);
        std::vector<std::vector<double>> g(100000, std::vector<double>(1));
        double var = 0.0;
        for (auto& gi : g) {
            gi[0] = rng.gaussian();
            var += gi[0] * gi[0];
        }
        var /= static_cast<double>(g.size());
        Mat m = newey_west(g, 5, HacWeighting::Bartlett);
        CHECK(std::fabs(m(0, 0) - var) <= 0.05 * var);
    }
    SUBCASE("symmetric exactly and PSD under Bartlett weights") {
        Rng rng(4);
        std::vector<std::vector<double>> g(300, std::vector<double>(4));
        for (auto& gi : g) {
            for (auto& v : gi) v = rng.gaussian();
        }
        Mat m = newey_west(g, 7, HacWeighting::Bartlett);
        Eigen::MatrixXd em(4, 4);
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 4; ++c) {
                CHECK(m(r, c) == m(c, r));
                em(r, c) = m(r, c);
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(em, Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    }
    SUBCASE("requires n > l") {
        std::vector<std::vector<double>> g{{1.0}, {2.0}};
        CHECK_THROWS_AS(newey_west(g, 2, HacWeighting::Bartlett), usage_error);
    }
}

TEST_CASE("block sampling is unbiased for the full gradient") {
    SyntheticTruth truth;
    truth.theta_star = {0.4, -0.2, 0.9};
    truth.sigma = 0.5;
    Dataset d = generate_linear(37, CovarianceSpec::identity(3), truth, 5);
    std::vector<double> theta{0.1, 0.1, 0.1};
    const std::size_t l = 5;
    std::vector<double> block_avg(3, 0.0);
    for (std::size_t i = 0; i < d.n; ++i) {
        auto idx = circular_block(i, l, d.n);
        auto g = minibatch_gradient({LossKind::SquaredLinear}, d, idx, theta);
        for (std::size_t j = 0; j < 3; ++j) block_avg[j] += g[j] / static_cast<double>(d.n);
    }
    std::vector<std::size_t> all(d.n);
    for (std::size_t i = 0; i < d.n; ++i) all[i] = i;
    auto full = minibatch_gradient({LossKind::SquaredLinear}, d, all, theta);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(std::fabs(block_avg[j] - full[j]) <= 1e-12 * (1.0 + std::fabs(full[j])));
    }
}

TEST_CASE("time-series inference engine") {
    SUBCASE("rejects logistic loss") {
        Dataset d = make_mean_est_dataset(20, 0.0, 1.0, 6);
        std::vector<double> theta0{0.0};
        NewtonInferConfig cfg;
        CHECK_THROWS_AS(run_inference_timeseries({LossKind::Logistic}, d, theta0, cfg, 2),
                        usage_error);
    }
    SUBCASE("l = n makes the outer gradient the full gradient") {
        Dataset d = make_mean_est_dataset(30, 0.5, 1.0, 7);
        double ybar = 0.0;
        for (double y : d.y) ybar += y / d.n;
        NewtonInferConfig cfg;
        cfg.T = 5;
        cfg.L = 10;
        cfg.S_i = 5;
        cfg.rho0 = 0.2;
        cfg.delta0 = 1e6;
        cfg.seed = 8;
        std::vector<double> theta0{0.1};
        InferenceRun run =
            run_inference_timeseries({LossKind::SquaredLinear}, d, theta0, cfg, d.n);
        for (std::size_t t = 0; t < cfg.T; ++t) {
            const double theta_t = run.theta_trace[t][0];
            CHECK(run.replicates[t].g_bar[0] / run.replicates[t].rho_t ==
                  doctest::Approx(ybar - theta_t).epsilon(1e-12));
        }
    }
    SUBCASE("l = 1 reduces exactly to uniform single-sample outer sampling") {
        SyntheticTruth truth;
        truth.theta_star = {0.3, 0.3};
        truth.sigma = 0.6;
        Dataset d = generate_linear(40, CovarianceSpec::identity(2), truth, 9);
        NewtonInferConfig cfg;
        cfg.T = 25;
        cfg.L = 15;
        cfg.S_o = 1;
        cfg.S_i = 8;
        cfg.tau0 = 0.4;
        cfg.seed = 10;
        std::vector<double> theta0(2, 0.0);
        InferenceRun ts = run_inference_timeseries({LossKind::SquaredLinear}, d, theta0, cfg, 1);
        InferenceRun iid = run_inference({LossKind::SquaredLinear}, d, theta0, cfg);
        CHECK(ts.theta_trace == iid.theta_trace);  // same RNG stream contract, bitwise
        for (std::size_t t = 0; t < cfg.T; ++t) {
            CHECK(ts.replicates[t].scaled == iid.replicates[t].scaled);
        }
    }
    SUBCASE("mean estimation replicates are the block mean minus theta") {
        Dataset d = make_mean_est_dataset(50, 0.5, 1.0, 11);
        NewtonInferConfig cfg;
        cfg.T = 40;
        cfg.L = 10;
        cfg.S_i = 5;
        cfg.rho0 = 0.3;
        cfg.delta0 = 1e6;
        cfg.seed = 12;
        const std::size_t l = 7;
        std::vector<double> theta0{0.0};
        InferenceRun run = run_inference_timeseries({LossKind::SquaredLinear}, d, theta0, cfg, l);
        REQUIRE(run.block_starts.size() == cfg.T);
        for (std::size_t t = 0; t < cfg.T; ++t) {
            double bm = 0.0;
            for (std::size_t idx : circular_block(run.block_starts[t], l, d.n)) {
                bm += d.y[idx] / static_cast<double>(l);
            }
            const double theta_t = run.theta_trace[t][0];
            CHECK(run.replicates[t].g_bar[0] / run.replicates[t].rho_t ==
                  doctest::Approx(bm - theta_t).epsilon(1e-12));
            CHECK(run.replicates[t].scale == doctest::Approx(std::sqrt(double(l))));
        }
    }
}

TEST_CASE("default lag") {
    CHECK(default_lag(200) == 3);
    CHECK(default_lag(10000) == 10);
    CHECK(default_lag(1) == 1);
}
