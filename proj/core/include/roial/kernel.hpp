#ifndef ROIAL_KERNEL_HPP
#define ROIAL_KERNEL_HPP

#include <span>
#include <vector>

#include <Eigen/Core>

#include "roial/action_space.hpp"

namespace roial {

struct KernelConfig {
    double signal_variance = 1.0;
    /// Per-dimension lengthscales in normalized [0, 1] coordinates. A single
    /// entry applies to every dimension.
    std::vector<double> lengthscales{0.15};
    /// Diagonal jitter, relative to the signal variance.
    double jitter = 1e-6;

    bool operator==(const KernelConfig&) const = default;
};

/// Squared-exponential kernel over the normalized coordinates of a grid:
///   k(a, b) = v * exp(-1/2 * sum_d ((a_d - b_d) / l_d)^2),
/// plus v * jitter whenever a and b are the same action.
class SquaredExponentialKernel {
public:
    /// Throws std::invalid_argument for non-positive variance or lengthscales,
    /// negative jitter, or a lengthscale count that is neither 1 nor d.
    SquaredExponentialKernel(ActionSpace space, KernelConfig config);

    [[nodiscard]] double operator()(ActionIndex a, ActionIndex b) const;
    /// Prior variance of a single action, jitter included.
    [[nodiscard]] double prior_variance() const;

    [[nodiscard]] Eigen::MatrixXd covariance(std::span<const ActionIndex> rows, std::span<const ActionIndex> cols) const;
    [[nodiscard]] Eigen::MatrixXd covariance(std::span<const ActionIndex> indices) const {
        return covariance(indices, indices);
    }

    /// Kernel restricted to dimension d evaluated between bin positions, without
    /// signal variance or jitter. The full kernel is the product over d.
    [[nodiscard]] Eigen::MatrixXd dimension_factor(std::size_t d) const;

    [[nodiscard]] const ActionSpace& space() const { return space_; }
    [[nodiscard]] const KernelConfig& config() const { return config_; }
    [[nodiscard]] double lengthscale(std::size_t d) const;

private:
    ActionSpace space_;
    KernelConfig config_;
    Eigen::MatrixXd scaled_;  // d x A, normalized coordinate / lengthscale
};

/// Prior covariance over `indices`. Throws NumericalError if the jittered
/// matrix is not positive definite.
Eigen::MatrixXd prior_covariance(const ActionSpace& space, std::span<const ActionIndex> indices,
                                 const KernelConfig& kernel);

}  // namespace roial

#endif  // ROIAL_KERNEL_HPP
