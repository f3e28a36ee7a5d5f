#include "sginfer/timeseries.hpp"

#include <cmath>
#include <string>

#include "newton_engine.hpp"
#include "sginfer/errors.hpp"
#include "sginfer/kernels.hpp"

namespace sginfer {

double hac_weight(HacWeighting kind, std::size_t j, std::size_t l) {
    const double jd = static_cast<double>(j);
    if (kind == HacWeighting::Bartlett) return 1.0 - jd / static_cast<double>(l + 1);
    return 1.0 - jd / static_cast<double>(l);
}

std::vector<std::size_t> circular_block(std::size_t i_o, std::size_t l, std::size_t n) {
    if (l < 1 || l > n) throw usage_error("circular_block: l must satisfy 1 <= l <= n");
    if (i_o >= n) throw usage_error("circular_block: i_o out of range");
    std::vector<std::size_t> out(l);
    for (std::size_t k = 0; k < l; ++k) out[k] = (i_o + k) % n;
    return out;
}

InferenceRun run_inference_timeseries(LossModel loss, const Dataset& data,
                                      std::span<const double> theta0,
                                      const NewtonInferConfig& cfg, std::size_t l) {
    if (loss.kind != LossKind::SquaredLinear) {
        throw usage_error("run_inference_timeseries: OLS (SquaredLinear) only");
    }
    detail::EngineOptions opt;
    opt.block_sampling = true;
    opt.block_len = l;
    return detail::run_newton_engine(loss, data, theta0, cfg, opt);
}

Mat newey_west(const std::vector<std::vector<double>>& gradients, std::size_t l,
               HacWeighting weighting) {
    const std::size_t n = gradients.size();
    if (n == 0) throw usage_error("newey_west: no gradients");
    if (n <= l) throw usage_error("newey_west: requires n >= l + 1");
    const std::size_t p = gradients[0].size();
    for (const auto& g : gradients) {
        if (g.size() != p) throw usage_error("newey_west: ragged gradient list");
    }

    Mat acc(p, p);
    // lag 0
    for (std::size_t i = 0; i < n; ++i) {
        const double* gi = gradients[i].data();
        for (std::size_t r = 0; r < p; ++r) kernels::axpy(gi[r], gi, acc.row(r), p);
    }
    // lagged cross terms, symmetrized
    for (std::size_t j = 1; j <= l; ++j) {
        const double w = hac_weight(weighting, j, l);
        if (w == 0.0) continue;
        for (std::size_t i = j; i < n; ++i) {
            const double* gi = gradients[i].data();
            const double* gj = gradients[i - j].data();
            for (std::size_t r = 0; r < p; ++r) {
                kernels::axpy(w * gi[r], gj, acc.row(r), p);
                kernels::axpy(w * gj[r], gi, acc.row(r), p);
            }
        }
    }
    const double inv = 1.0 / static_cast<double>(n);
    kernels::scal(inv, acc.a.data(), acc.a.size());
    // enforce exact symmetry against accumulation-order rounding
    for (std::size_t r = 0; r < p; ++r) {
        for (std::size_t c = r + 1; c < p; ++c) {
            const double v = 0.5 * (acc(r, c) + acc(c, r));
            acc(r, c) = v;
            acc(c, r) = v;
        }
    }
    return acc;
}

std::size_t default_lag(std::size_t n) {
    const auto l = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(n), 0.25)));
    return l < 1 ? 1 : l;
}

}  // namespace sginfer
