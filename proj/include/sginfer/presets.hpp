#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sginfer/highdim.hpp"
#include "sginfer/inference.hpp"
#include "sginfer/model.hpp"
#include "sginfer/newton.hpp"

namespace sginfer {

// One named experiment: generator, ground truth, method configuration.
struct ExperimentPreset {
    enum class Generator { Linear, Logistic, MaTimeseries, SparseHighDim, MeanEst };

    std::string name;
    LossModel loss{LossKind::SquaredLinear};
    Generator generator = Generator::Linear;
    std::size_t n = 100;
    CovarianceSpec cov = CovarianceSpec::identity(1);
    SyntheticTruth truth;  // theta_star is the population minimizer (coverage target)
    std::vector<double> mean_shift;           // logistic
    double ma_a = 0.0, ma_b = 0.0, z_sigma = 0.0;  // MA(1) noise
    double mean_value = 0.0;                  // mean estimation

    InferMethod method = InferMethod::ApproxNewton;
    NewtonInferConfig newton;
    std::size_t lag = 0;  // 0 = floor(n^{1/4})
    double level = 0.95;
    std::size_t n_sims = 200;

    // high-dimensional presets
    std::size_t sparsity = 0;
    double amplitude = 0.0;
    HighDimConfig highdim;
    std::vector<std::size_t> test_coords;  // off-support coordinates under test

    Dataset generate(std::uint64_t seed) const;
    std::size_t dim() const;
};

ExperimentPreset preset_by_name(const std::string& name);
std::vector<std::string> preset_names();

// Mean-estimation data: x identically 1, y ~ N(mu, sigma^2).
Dataset make_mean_est_dataset(std::size_t n, double mu, double sigma, std::uint64_t seed);

}  // namespace sginfer
