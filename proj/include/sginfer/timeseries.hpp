#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sginfer/mat.hpp"
#include "sginfer/newton.hpp"

namespace sginfer {

enum class HacWeighting {
    Bartlett,          // w(j, l) = 1 - j/(l+1)
    AlgorithmImplied,  // w(j, l) = 1 - j/l (what circular block sampling induces)
};

double hac_weight(HacWeighting kind, std::size_t j, std::size_t l);

// Indices {i_o, i_o+1, ..., i_o+l-1} mod n; 0-based.
std::vector<std::size_t> circular_block(std::size_t i_o, std::size_t l, std::size_t n);

// OLS time-series inference: the outer minibatch is a circular contiguous
// block of length l and replicates are scaled by sqrt(l).
InferenceRun run_inference_timeseries(LossModel loss, const Dataset& data,
                                      std::span<const double> theta0,
                                      const NewtonInferConfig& cfg, std::size_t l);

// G_hat = (1/n) [ sum_i g_i g_i^T
//               + sum_{j=1..l} w(j,l) sum_{i=j+1..n} (g_i g_{i-j}^T + g_{i-j} g_i^T) ].
// The 1/n applies to every term. Output is exactly symmetric.
Mat newey_west(const std::vector<std::vector<double>>& gradients, std::size_t l,
               HacWeighting weighting);

// l = floor(n^{1/4}), at least 1.
std::size_t default_lag(std::size_t n);

}  // namespace sginfer
