#include "roial/kernel.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "roial/errors.hpp"

namespace roial {

SquaredExponentialKernel::SquaredExponentialKernel(ActionSpace space, KernelConfig config)
    : space_(std::move(space)), config_(std::move(config)) {
    if (!(config_.signal_variance > 0.0) || !std::isfinite(config_.signal_variance)) {
        throw std::invalid_argument("kernel signal variance must be positive");
    }
    if (!(config_.jitter >= 0.0)) {
        throw std::invalid_argument("kernel jitter must be non-negative");
    }
    const std::size_t d = space_.num_dims();
    if (config_.lengthscales.size() != 1 && config_.lengthscales.size() != d) {
        throw std::invalid_argument("kernel needs 1 or " + std::to_string(d) + " lengthscales");
    }
    for (double l : config_.lengthscales) {
        if (!(l > 0.0)) {
            throw std::invalid_argument("kernel lengthscales must be positive");
        }
    }
    const auto n = static_cast<Eigen::Index>(space_.size());
    scaled_.resize(static_cast<Eigen::Index>(d), n);
    for (Eigen::Index k = 0; k < n; ++k) {
        for (std::size_t j = 0; j < d; ++j) {
            scaled_(static_cast<Eigen::Index>(j), k) =
                space_.normalized(static_cast<ActionIndex>(k), j) / lengthscale(j);
        }
    }
}

double SquaredExponentialKernel::lengthscale(std::size_t d) const {
    return config_.lengthscales.size() == 1 ? config_.lengthscales.front() : config_.lengthscales.at(d);
}

double SquaredExponentialKernel::prior_variance() const {
    return config_.signal_variance * (1.0 + config_.jitter);
}

double SquaredExponentialKernel::operator()(ActionIndex a, ActionIndex b) const {
    if (a == b) {
        return prior_variance();
    }
    const double sq = (scaled_.col(static_cast<Eigen::Index>(a)) - scaled_.col(static_cast<Eigen::Index>(b))).squaredNorm();
    return config_.signal_variance * std::exp(-0.5 * sq);
}

Eigen::MatrixXd SquaredExponentialKernel::covariance(std::span<const ActionIndex> rows,
                                                     std::span<const ActionIndex> cols) const {
    for (ActionIndex r : rows) {
        if (r >= space_.size()) {
            throw std::out_of_range("kernel row index out of range");
        }
    }
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        if (cols[j] >= space_.size()) {
            throw std::out_of_range("kernel column index out of range");
        }
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*this)(rows[i], cols[j]);
        }
    }
    return out;
}

Eigen::MatrixXd SquaredExponentialKernel::dimension_factor(std::size_t d) const {
    const auto& dim = space_.dim(d);
    const auto n = static_cast<Eigen::Index>(dim.bins);
    Eigen::MatrixXd out(n, n);
    const double denom = dim.bins > 1 ? static_cast<double>(dim.bins - 1) : 1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double delta = static_cast<double>(i - j) / denom / lengthscale(d);
            out(i, j) = std::exp(-0.5 * delta * delta);
        }
    }
    return out;
}

Eigen::MatrixXd prior_covariance(const ActionSpace& space, std::span<const ActionIndex> indices,
                                 const KernelConfig& kernel) {
    SquaredExponentialKernel k(space, kernel);
    Eigen::MatrixXd cov = k.covariance(indices);
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("prior covariance is not positive definite; increase jitter");
    }
    return cov;
}

}  // namespace roial
