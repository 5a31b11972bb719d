#ifndef ROIAL_LIKELIHOODS_HPP
#define ROIAL_LIKELIHOODS_HPP

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "roial/feedback.hpp"

namespace roial {

enum class LinkKind { kSigmoid, kProbit };

/// Monotone link g: R -> (0, 1) shared by the preference and ordinal
/// likelihoods. Both supported links are symmetric, g(-x) = 1 - g(x).
class Link {
public:
    explicit Link(LinkKind kind = LinkKind::kSigmoid) : kind_(kind) {}

    [[nodiscard]] LinkKind kind() const { return kind_; }

    /// g(x); g(-inf) = 0 and g(+inf) = 1.
    [[nodiscard]] double operator()(double x) const;
    [[nodiscard]] double log_cdf(double x) const;
    /// log g'(x).
    [[nodiscard]] double log_pdf(double x) const;
    /// g''(x) / g'(x).
    [[nodiscard]] double pdf_slope(double x) const;
    /// log(g(upper) - g(lower)) for upper >= lower, evaluated without
    /// cancellation in either tail.
    [[nodiscard]] double log_interval(double upper, double lower) const;

private:
    LinkKind kind_;
};

/// Logistic sigmoid (1 + e^-x)^-1.
double link(double x);

struct PreferenceModel {
    double noise = 0.1;  // c_p > 0
};

/// r ordered categories separated by thresholds b_1 < ... < b_{r-1}.
class OrdinalScale {
public:
    OrdinalScale() = default;
    /// Throws std::invalid_argument unless thresholds are finite and strictly
    /// increasing and noise > 0.
    OrdinalScale(std::vector<double> thresholds, double noise);

    [[nodiscard]] int num_categories() const { return static_cast<int>(thresholds_.size()) + 1; }
    [[nodiscard]] const std::vector<double>& thresholds() const { return thresholds_; }
    [[nodiscard]] double noise() const { return noise_; }
    /// b_y with b_0 = -inf and b_r = +inf.
    [[nodiscard]] double threshold(int y) const;

private:
    std::vector<double> thresholds_;
    double noise_ = 0.1;
};

struct LikelihoodModel {
    PreferenceModel preference;
    OrdinalScale ordinal;
    Link link;
};

double preference_prob(double f_winner, double f_loser, const PreferenceModel& model, const Link& g = Link{});
double log_preference_prob(double f_winner, double f_loser, const PreferenceModel& model, const Link& g = Link{});

/// Throws std::out_of_range for labels outside 1..r.
double ordinal_prob(double f, OrdinalLabel y, const OrdinalScale& scale, const Link& g = Link{});
double log_ordinal_prob(double f, OrdinalLabel y, const OrdinalScale& scale, const Link& g = Link{});

/// Fills `out` (size r) with P(y | f) for y = 1..r.
void ordinal_probs(double f, const OrdinalScale& scale, const Link& g, std::span<double> out);

/// MAP category: argmax_y P(y | f), lowest label on ties.
OrdinalLabel predicted_label(double f, const OrdinalScale& scale, const Link& g = Link{});

/// Dataset re-expressed against positions of a utility vector.
struct LocalFeedback {
    std::vector<std::pair<std::size_t, std::size_t>> preferences;  // (winner, loser)
    std::vector<std::pair<std::size_t, OrdinalLabel>> ordinals;
    std::size_t dimension = 0;
};

/// Maps each action in `dataset` to its position in `indices`. Throws
/// std::invalid_argument if an action is absent.
LocalFeedback localize(const FeedbackDataset& dataset, std::span<const ActionIndex> indices);

struct LikelihoodTerms {
    double value = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;
};

/// Negative log-likelihood -sum log P(pref) - sum log P(ordinal). Throws
/// NumericalError if any term is non-finite.
double neg_log_likelihood(const LocalFeedback& data, const Eigen::VectorXd& f, const LikelihoodModel& model);
Eigen::VectorXd neg_log_likelihood_gradient(const LocalFeedback& data, const Eigen::VectorXd& f,
                                            const LikelihoodModel& model);
/// Nonzero only on rows/columns of positions referenced by `data`.
Eigen::MatrixXd neg_log_likelihood_hessian(const LocalFeedback& data, const Eigen::VectorXd& f,
                                           const LikelihoodModel& model);
LikelihoodTerms neg_log_likelihood_terms(const LocalFeedback& data, const Eigen::VectorXd& f,
                                         const LikelihoodModel& model);

}  // namespace roial

#endif  // ROIAL_LIKELIHOODS_HPP
