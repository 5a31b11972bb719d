#include "roial/metrics.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace roial {

MetricsRecord error_metrics(const Eigen::VectorXd& mean, std::span<const ActionIndex> actions,
                            const SyntheticTruth& truth, const OrdinalScale& scale, const Link& g) {
    const std::size_t n = actions.size();
    if (static_cast<std::size_t>(mean.size()) != n) {
        throw std::invalid_argument("error_metrics: prediction count differs from action count");
    }
    if (n == 0) {
        throw std::invalid_argument("error_metrics: nothing to evaluate");
    }
    if (scale.num_categories() != truth.num_categories()) {
        throw std::invalid_argument("error_metrics: model and truth disagree on the number of categories");
    }
    const int r = scale.num_categories();
    MetricsRecord m;
    m.evaluated = n;
    m.confusion = Eigen::MatrixXi::Zero(r, r);

    std::size_t ordinal_sum = 0;
    std::size_t within = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const ActionIndex a = actions[i];
        if (a >= truth.size()) {
            throw std::out_of_range("error_metrics: action index out of range");
        }
        const double f = truth.utility[static_cast<Eigen::Index>(a)];
        const double fhat = mean[static_cast<Eigen::Index>(i)];
        const OrdinalLabel y_true = truth.categories[a];
        const OrdinalLabel y_pred = predicted_label(fhat, scale, g);
        const auto diff = static_cast<std::size_t>(std::abs(y_pred - y_true));
        ordinal_sum += diff;
        within += diff <= 1 ? 1 : 0;
        ++m.confusion(y_true - 1, y_pred - 1);
        if (truth.roi[a]) {
            m.roi_error += std::abs(f - fhat);
        }
        const bool pred_roi = y_pred != 1;
        if (truth.roi[a]) {
            ++(pred_roi ? m.roi.true_positive : m.roi.false_negative);
        } else {
            ++(pred_roi ? m.roi.false_positive : m.roi.true_negative);
        }
    }
    m.ordinal_error = static_cast<double>(ordinal_sum) / static_cast<double>(n);
    m.within_one = static_cast<double>(within) / static_cast<double>(n);

    std::size_t pairs = 0;
    std::size_t wrong = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double dt = truth.utility[static_cast<Eigen::Index>(actions[i])]
                          - truth.utility[static_cast<Eigen::Index>(actions[i + 1])];
        if (dt == 0.0) {
            continue;
        }
        const double dp = mean[static_cast<Eigen::Index>(i)] - mean[static_cast<Eigen::Index>(i + 1)];
        ++pairs;
        if (!(dp * dt > 0.0)) {
            ++wrong;
        }
    }
    m.preference_error = pairs == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(pairs);
    return m;
}

}  // namespace roial
