#ifndef ROIAL_METRICS_HPP
#define ROIAL_METRICS_HPP

#include <span>

#include <Eigen/Core>

#include "roial/likelihoods.hpp"
#include "roial/synthetic.hpp"

namespace roial {

/// 2x2 counts of true ROI membership against predicted membership
/// (predicted label above 1).
struct RoiConfusion {
    std::size_t true_positive = 0;
    std::size_t false_positive = 0;
    std::size_t false_negative = 0;
    std::size_t true_negative = 0;
};

struct MetricsRecord {
    /// sum over evaluated ROI actions of |f - f_hat|.
    double roi_error = 0.0;
    /// mean |predicted label - true label|.
    double ordinal_error = 0.0;
    /// Fraction of consecutive pairs (a_i, a_{i+1}) whose predicted ordering
    /// disagrees with the true one; pairs with tied true utility are skipped
    /// and a predicted tie counts as a disagreement.
    double preference_error = 0.0;
    /// Fraction of actions predicted within one category of the truth.
    double within_one = 0.0;
    Eigen::MatrixXi confusion;  // rows = true label, columns = predicted
    RoiConfusion roi;
    std::size_t evaluated = 0;
};

/// Scores predicted utilities `mean` (mean[i] belongs to actions[i]) against
/// the truth. Throws std::invalid_argument on a length mismatch or an empty
/// action list.
MetricsRecord error_metrics(const Eigen::VectorXd& mean, std::span<const ActionIndex> actions,
                            const SyntheticTruth& truth, const OrdinalScale& scale, const Link& g = Link{});

}  // namespace roial

#endif  // ROIAL_METRICS_HPP
