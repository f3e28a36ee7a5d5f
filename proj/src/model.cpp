#include "sginfer/model.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <string>

#include "sginfer/errors.hpp"
#include "sginfer/kernels.hpp"
#include "sginfer/rng.hpp"

namespace sginfer {

double sigmoid(double t) {
    if (t >= 0.0) {
        return 1.0 / (1.0 + std::exp(-t));
    }
    double e = std::exp(t);
    return e / (1.0 + e);
}

double sample_loss(LossModel loss, const Dataset& data, std::size_t i, const double* theta) {
    const double z = kernels::dot(data.row(i), theta, data.p);
    switch (loss.kind) {
        case LossKind::SquaredLinear: {
            const double r = z - data.y[i];
            return 0.5 * r * r;
        }
        case LossKind::Logistic: {
            // log(1 + exp(z)) - y*z, stable for large |z|
            const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
            return softplus - data.y[i] * z;
        }
    }
    return 0.0;
}

double gradient_factor(LossModel loss, const Dataset& data, std::size_t i, const double* theta) {
    const double z = kernels::dot(data.row(i), theta, data.p);
    if (loss.kind == LossKind::SquaredLinear) return z - data.y[i];
    return sigmoid(z) - data.y[i];
}

double hessian_factor(LossModel loss, const Dataset& data, std::size_t i, const double* theta) {
    if (loss.kind == LossKind::SquaredLinear) return 1.0;
    const double s = sigmoid(kernels::dot(data.row(i), theta, data.p));
    return s * (1.0 - s);
}

Mat dense_hessian(LossModel loss, const Dataset& data, const double* theta) {
    const std::size_t p = data.p;
    Mat h(p, p);
    const double inv = 1.0 / static_cast<double>(data.n);
    for (std::size_t i = 0; i < data.n; ++i) {
        const double w = hessian_factor(loss, data, i, theta) * inv;
        const double* xi = data.row(i);
        for (std::size_t j = 0; j < p; ++j) {
            kernels::axpy(w * xi[j], xi, h.row(j), p);
        }
    }
    return h;
}

std::vector<double> per_sample_gradient(LossModel loss, const Dataset& data, std::size_t i,
                                        std::span<const double> theta) {
    if (i >= data.n) throw usage_error("per_sample_gradient: index " + std::to_string(i) +
                                       " out of range (n=" + std::to_string(data.n) + ")");
    if (theta.size() != data.p) throw usage_error("per_sample_gradient: theta length != p");
    const double c = gradient_factor(loss, data, i, theta.data());
    if (!std::isfinite(c)) {
        throw numeric_error("per_sample_gradient: non-finite gradient at sample " +
                            std::to_string(i));
    }
    std::vector<double> out(data.p);
    const double* xi = data.row(i);
    for (std::size_t j = 0; j < data.p; ++j) out[j] = c * xi[j];
    return out;
}

void minibatch_gradient(LossModel loss, const Dataset& data, std::span<const std::size_t> indices,
                        const double* theta, double* out) {
    if (indices.empty()) throw usage_error("minibatch_gradient: empty index list");
    const double inv = 1.0 / static_cast<double>(indices.size());
    for (std::size_t j = 0; j < data.p; ++j) out[j] = 0.0;
    for (std::size_t i : indices) {
        if (i >= data.n) throw usage_error("minibatch_gradient: index out of range");
        const double c = gradient_factor(loss, data, i, theta);
        kernels::axpy(c * inv, data.row(i), out, data.p);
    }
}

std::vector<double> minibatch_gradient(LossModel loss, const Dataset& data,
                                       std::span<const std::size_t> indices,
                                       std::span<const double> theta) {
    if (theta.size() != data.p) throw usage_error("minibatch_gradient: theta length != p");
    std::vector<double> out(data.p);
    minibatch_gradient(loss, data, indices, theta.data(), out.data());
    return out;
}

void hvp_finite_difference(LossModel loss, const Dataset& data,
                           std::span<const std::size_t> indices, const double* theta,
                           const double* g, double delta, double* theta_pert, double* out) {
    if (delta <= 0.0) throw usage_error("hvp_finite_difference: delta must be > 0");
    if (indices.empty()) throw usage_error("hvp_finite_difference: empty index list");
    const std::size_t p = data.p;
    // the realized perturbation (theta + delta g) - theta is formed explicitly:
    // differencing it instead of the two gradients avoids cancelling the large
    // x'theta and y terms inside the quotient
    for (std::size_t j = 0; j < p; ++j) {
        const double pert = theta[j] + delta * g[j];
        if (!std::isfinite(pert)) {
            throw numeric_error("hvp_finite_difference: overflow in theta + delta*g");
        }
        theta_pert[j] = pert - theta[j];
    }
    const double inv = 1.0 / (delta * static_cast<double>(indices.size()));
    for (std::size_t j = 0; j < p; ++j) out[j] = 0.0;
    for (std::size_t i : indices) {
        if (i >= data.n) throw usage_error("hvp_finite_difference: index out of range");
        const double* xi = data.row(i);
        const double zd = kernels::dot(xi, theta_pert, p);
        double factor_diff;
        if (loss.kind == LossKind::SquaredLinear) {
            factor_diff = zd;  // gradient factor is linear in theta
        } else {
            const double z0 = kernels::dot(xi, theta, p);
            factor_diff = sigmoid(z0 + zd) - sigmoid(z0);
        }
        kernels::axpy(factor_diff * inv, xi, out, p);
    }
}

std::vector<double> hvp_finite_difference(LossModel loss, const Dataset& data,
                                          std::span<const std::size_t> indices,
                                          std::span<const double> theta, std::span<const double> g,
                                          double delta) {
    if (theta.size() != data.p || g.size() != data.p) {
        throw usage_error("hvp_finite_difference: vector length != p");
    }
    std::vector<double> pert(data.p), out(data.p);
    hvp_finite_difference(loss, data, indices, theta.data(), g.data(), delta, pert.data(),
                          out.data());
    return out;
}

Mat CovarianceSpec::dense() const {
    if (p < 1) throw config_error("CovarianceSpec: p must be >= 1");
    Mat m(p, p);
    if (kind == Kind::Identity) {
        for (std::size_t j = 0; j < p; ++j) m(j, j) = 1.0;
        return m;
    }
    if (!(rate > 0.0 && rate < 1.0)) {
        throw config_error("CovarianceSpec: ToeplitzDecay rate must lie in (0,1)");
    }
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t k = 0; k < p; ++k) {
            m(j, k) = std::pow(rate, static_cast<double>(j > k ? j - k : k - j));
        }
    }
    return m;
}

namespace {

// Lower Cholesky factor of Sigma, or empty for identity.
Mat cholesky_or_identity(const CovarianceSpec& cov) {
    if (cov.kind == CovarianceSpec::Kind::Identity) return Mat{};
    Mat sigma = cov.dense();
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> map(
        sigma.a.data(), static_cast<Eigen::Index>(cov.p), static_cast<Eigen::Index>(cov.p));
    Eigen::LLT<Eigen::MatrixXd> llt(map);
    if (llt.info() != Eigen::Success) {
        throw config_error("CovarianceSpec: matrix is not positive definite");
    }
    Eigen::MatrixXd l = llt.matrixL();
    Mat out(cov.p, cov.p);
    for (std::size_t i = 0; i < cov.p; ++i) {
        for (std::size_t j = 0; j <= i; ++j) out(i, j) = l(static_cast<Eigen::Index>(i),
                                                           static_cast<Eigen::Index>(j));
    }
    return out;
}

// row := L*z + mean (mean may be null), z drawn from rng.
void fill_gaussian_row(double* row, std::size_t p, const Mat& chol, const double* mean,
                       std::vector<double>& zbuf, Rng& rng) {
    for (std::size_t j = 0; j < p; ++j) zbuf[j] = rng.gaussian();
    if (chol.rows == 0) {
        for (std::size_t j = 0; j < p; ++j) row[j] = zbuf[j];
    } else {
        for (std::size_t j = 0; j < p; ++j) {
            row[j] = kernels::dot(chol.row(j), zbuf.data(), j + 1);
        }
    }
    if (mean != nullptr) {
        for (std::size_t j = 0; j < p; ++j) row[j] += mean[j];
    }
}

}  // namespace

Dataset generate_linear(std::size_t n, const CovarianceSpec& cov, const SyntheticTruth& truth,
                        std::uint64_t seed) {
    if (n < 1) throw usage_error("generate_linear: n must be >= 1");
    const std::size_t p = cov.p;
    if (truth.theta_star.size() != p) throw usage_error("generate_linear: theta_star length != p");
    Mat chol = cholesky_or_identity(cov);
    Rng rng(seed);
    Dataset d;
    d.n = n;
    d.p = p;
    d.x.resize(n * p);
    d.y.resize(n);
    std::vector<double> zbuf(p);
    for (std::size_t i = 0; i < n; ++i) {
        double* row = d.row(i);
        fill_gaussian_row(row, p, chol, nullptr, zbuf, rng);
        const double noise = truth.sigma > 0.0 ? truth.sigma * rng.gaussian() : 0.0;
        d.y[i] = kernels::dot(row, truth.theta_star.data(), p) + noise;
    }
    d.validate();
    return d;
}

Dataset generate_logistic(std::size_t n, const CovarianceSpec& cov,
                          std::span<const double> mean_shift, std::uint64_t seed) {
    if (n < 1) throw usage_error("generate_logistic: n must be >= 1");
    const std::size_t p = cov.p;
    if (mean_shift.size() != p) throw usage_error("generate_logistic: mean_shift length != p");
    Mat chol = cholesky_or_identity(cov);
    Rng rng(seed);
    Dataset d;
    d.n = n;
    d.p = p;
    d.x.resize(n * p);
    d.y.resize(n);
    std::vector<double> zbuf(p);
    std::vector<double> mean(p);
    for (std::size_t i = 0; i < n; ++i) {
        const bool positive = rng.bernoulli(0.5);
        const double sgn = positive ? 1.0 : -1.0;
        for (std::size_t j = 0; j < p; ++j) mean[j] = sgn * mean_shift[j];
        fill_gaussian_row(d.row(i), p, chol, mean.data(), zbuf, rng);
        d.y[i] = positive ? 1.0 : 0.0;
    }
    d.validate();
    return d;
}

Dataset generate_ma_timeseries(std::size_t n, std::size_t p, std::span<const double> theta_star,
                               double ma_a, double ma_b, double z_sigma, std::uint64_t seed) {
    if (n < 2) throw usage_error("generate_ma_timeseries: n must be >= 2");
    if (theta_star.size() != p) throw usage_error("generate_ma_timeseries: theta_star length != p");
    Rng rng(seed);
    Dataset d;
    d.n = n;
    d.p = p;
    d.x.resize(n * p);
    d.y.resize(n);
    const double mean = 1.0 / std::sqrt(static_cast<double>(p));
    double z_prev = z_sigma * rng.gaussian();
    for (std::size_t i = 0; i < n; ++i) {
        double* row = d.row(i);
        for (std::size_t j = 0; j < p; ++j) row[j] = mean + rng.gaussian();
        const double z = z_sigma * rng.gaussian();
        const double eps = ma_a * z + ma_b * z_prev;
        z_prev = z;
        d.y[i] = kernels::dot(row, theta_star.data(), p) + eps;
    }
    d.validate();
    return d;
}

std::pair<Dataset, SyntheticTruth> generate_sparse_highdim(std::size_t n, std::size_t p,
                                                           std::size_t s, double amplitude,
                                                           double sigma, std::uint64_t seed) {
    if (s > p) throw usage_error("generate_sparse_highdim: s must be <= p");
    SyntheticTruth truth;
    truth.theta_star.assign(p, 0.0);
    for (std::size_t j = 0; j < s; ++j) truth.theta_star[j] = amplitude;
    truth.sigma = sigma;
    truth.sparsity = s;
    Dataset d = generate_linear(n, CovarianceSpec::identity(p), truth, seed);
    return {std::move(d), std::move(truth)};
}

}  // namespace sginfer
