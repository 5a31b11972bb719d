#ifndef ROIAL_POSTERIOR_HPP
#define ROIAL_POSTERIOR_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "roial/feedback.hpp"
#include "roial/kernel.hpp"
#include "roial/likelihoods.hpp"
#include "roial/rng.hpp"

namespace roial {

struct LaplaceOptions {
    double gradient_tolerance = 1e-6;  // infinity norm of the objective gradient
    int max_iterations = 100;
};

/// Laplace approximation N(f_hat, Sigma_hat) of the utility posterior over an
/// inference set.
///
/// The likelihood depends only on the actions touched by feedback, so the
/// mode is found over those actions alone and extended to the rest of the
/// inference set (and to any other action through predict()) by the GP
/// conditional. The result equals a joint Laplace fit over the whole set.
///
/// Immutable once returned by laplace_fit(); safe to share across threads.
class PosteriorState {
public:
    [[nodiscard]] const std::vector<ActionIndex>& indices() const { return indices_; }
    [[nodiscard]] std::size_t size() const { return indices_.size(); }
    [[nodiscard]] const Eigen::VectorXd& mean() const { return mean_; }
    [[nodiscard]] const Eigen::VectorXd& stddev() const { return stddev_; }
    [[nodiscard]] std::optional<std::size_t> position_of(ActionIndex a) const;

    /// Sigma_hat entry between positions p and q of the inference set.
    [[nodiscard]] double covariance(std::size_t p, std::size_t q) const;
    /// Materialized Sigma_hat over the whole inference set.
    [[nodiscard]] Eigen::MatrixXd covariance() const;

    [[nodiscard]] const SquaredExponentialKernel& kernel() const { return *kernel_; }
    [[nodiscard]] std::shared_ptr<const SquaredExponentialKernel> kernel_ptr() const { return kernel_; }

    /// Actions carrying feedback, ascending; the mode lives on these.
    [[nodiscard]] const std::vector<ActionIndex>& data_indices() const { return data_; }
    [[nodiscard]] int newton_iterations() const { return iterations_; }
    [[nodiscard]] double gradient_norm() const { return gradient_norm_; }
    /// True if negative likelihood curvature had to be clamped at the mode.
    [[nodiscard]] bool curvature_clamped() const { return clamped_; }

    /// K_DD^-1 f_hat over data_indices(); the predictive mean at a is k_D(a)^T alpha.
    [[nodiscard]] const Eigen::VectorXd& alpha() const { return alpha_; }
    /// L^-1 W^1/2 K_{D,cols}, with L the Cholesky factor of I + W^1/2 K_DD W^1/2.
    /// Posterior covariance between actions a and b is k(a, b) - v_a^T v_b.
    [[nodiscard]] Eigen::MatrixXd whitened_cross(std::span<const ActionIndex> cols) const;

private:
    friend PosteriorState laplace_fit(const FeedbackDataset&, std::span<const ActionIndex>,
                                      std::shared_ptr<const SquaredExponentialKernel>, const LikelihoodModel&,
                                      const LaplaceOptions&);
    std::shared_ptr<const SquaredExponentialKernel> kernel_;
    std::vector<ActionIndex> indices_;
    std::unordered_map<ActionIndex, std::size_t> position_;
    Eigen::VectorXd mean_;
    Eigen::VectorXd stddev_;

    std::vector<ActionIndex> data_;
    Eigen::VectorXd alpha_;    // K_DD^-1 f_hat_D
    Eigen::MatrixXd w_sqrt_;   // symmetric square root of the clamped NLL Hessian
    Eigen::MatrixXd chol_;     // lower Cholesky factor of I + W^1/2 K_DD W^1/2
    Eigen::MatrixXd cross_;    // whitened_cross(indices_)
    int iterations_ = 0;
    double gradient_norm_ = 0.0;
    bool clamped_ = false;
};

/// Finds f_hat = argmin 1/2 f^T K^-1 f + NLL(f) by Newton's method with
/// backtracking, starting from f = 0, and returns the Laplace posterior over
/// `indices` (duplicates removed, first occurrence kept).
///
/// Throws std::invalid_argument if feedback references an action outside
/// `indices`, and ConvergenceError if the gradient tolerance is not met.
PosteriorState laplace_fit(const FeedbackDataset& dataset, std::span<const ActionIndex> indices,
                           std::shared_ptr<const SquaredExponentialKernel> kernel, const LikelihoodModel& model,
                           const LaplaceOptions& options = {});

struct Prediction {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
};

/// Posterior marginals at arbitrary actions. Actions inside the inference set
/// return the stored values exactly.
Prediction predict(const PosteriorState& state, std::span<const ActionIndex> query);

/// Predictive means only; O(n) per query action.
Eigen::VectorXd predict_mean(const PosteriorState& state, std::span<const ActionIndex> query);

/// `count` joint draws from N(f_hat, Sigma_hat), one per column.
/// Throws NumericalError if Sigma_hat is materially indefinite.
Eigen::MatrixXd sample(const PosteriorState& state, std::size_t count, Rng& rng);
Eigen::MatrixXd sample(const PosteriorState& state, std::size_t count, std::uint64_t seed);

}  // namespace roial

#endif  // ROIAL_POSTERIOR_HPP
