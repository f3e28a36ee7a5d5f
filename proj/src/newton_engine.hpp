#pragma once

// Shared outer/inner loop driving run_inference, run_inference_svrg and the
// time-series block-sampling variant. Internal to the library.

#include <cstddef>
#include <span>
#include <vector>

#include "sginfer/model.hpp"
#include "sginfer/newton.hpp"
#include "sginfer/rng.hpp"

namespace sginfer::detail {

// Without-replacement sampler over [n]. Keeps a persistent permutation and
// performs k Fisher-Yates swaps per draw, so a draw costs O(k) not O(n).
class IndexPool {
  public:
    explicit IndexPool(std::size_t n) : idx_(n) {
        for (std::size_t i = 0; i < n; ++i) idx_[i] = i;
    }

    void draw(Rng& rng, std::size_t k, std::vector<std::size_t>& out) {
        const std::size_t n = idx_.size();
        out.resize(k);
        for (std::size_t m = 0; m < k; ++m) {
            const std::size_t j = m + rng.uniform_index(n - m);
            std::swap(idx_[m], idx_[j]);
            out[m] = idx_[m];
        }
    }

  private:
    std::vector<std::size_t> idx_;
};

struct EngineOptions {
    bool svrg_point_track = false;
    double eta = 0.0;            // SVRG point-track step
    bool block_sampling = false; // circular contiguous outer blocks
    std::size_t block_len = 0;   // lag l
    bool g_track = true;         // false: optimization only, replicates are g^0
};

InferenceRun run_newton_engine(LossModel loss, const Dataset& data, std::span<const double> theta0,
                               const NewtonInferConfig& cfg, const EngineOptions& opt);

}  // namespace sginfer::detail
