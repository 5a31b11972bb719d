#ifndef ROIAL_ACQUISITION_HPP
#define ROIAL_ACQUISITION_HPP

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "roial/likelihoods.hpp"
#include "roial/posterior.hpp"
#include "roial/rng.hpp"

namespace roial {

/// M actions uniformly without replacement, ascending. Returns every action
/// when M >= A.
std::vector<ActionIndex> draw_subset(std::size_t num_actions, std::size_t subset_size, Rng& rng);

struct RoiConfig {
    /// +inf disables the ROI restriction.
    double lambda = std::numeric_limits<double>::infinity();
    double lowest_threshold = 0.0;  // b_1
};

/// mask[k] = means[k] + lambda * sigmas[k] > b_1 (strict).
std::vector<bool> roi_mask(std::span<const double> means, std::span<const double> sigmas, const RoiConfig& cfg);
std::vector<bool> roi_mask(const Eigen::VectorXd& means, const Eigen::VectorXd& sigmas, const RoiConfig& cfg);

/// Distribution over the joint next-trial outcome (s, y). Column 0 is
/// "candidate preferred", column 1 "previous preferred"; a table without a
/// previous action has a single column over y alone.
class OutcomeTable {
public:
    OutcomeTable(int num_categories, bool with_preference);

    [[nodiscard]] int num_categories() const { return static_cast<int>(probs_.rows()); }
    [[nodiscard]] bool with_preference() const { return probs_.cols() == 2; }
    /// y in 1..r; s = 0 (candidate preferred) or 1 (previous preferred).
    [[nodiscard]] double operator()(OrdinalLabel y, int s = 0) const { return probs_(y - 1, s); }
    double& at(OrdinalLabel y, int s = 0) { return probs_(y - 1, s); }
    [[nodiscard]] double sum() const { return probs_.sum(); }
    /// Shannon entropy in nats, 0 log 0 = 0.
    [[nodiscard]] double entropy() const;
    [[nodiscard]] const Eigen::MatrixXd& matrix() const { return probs_; }

private:
    Eigen::MatrixXd probs_;
};

/// Posterior-sample utilities of the candidate and (optionally) the previous
/// action; element l of each span comes from the same draw f_l.
struct PairSamples {
    std::span<const double> candidate;
    std::span<const double> previous;  // empty on the first trial
};

/// (1/L) sum_l P(s | f_l) P(y | f_l).
OutcomeTable outcome_probs(const PairSamples& samples, const LikelihoodModel& model);
/// Same, reading both actions from joint sample vectors (rows = positions of
/// `sample_indices`, columns = draws).
OutcomeTable outcome_probs(ActionIndex candidate, std::optional<ActionIndex> previous, const Eigen::MatrixXd& samples,
                           std::span<const ActionIndex> sample_indices, const LikelihoodModel& model);

/// Mutual information I(f; s, y) in nats, estimated as
/// H(outcome_probs) - (1/L) sum_l H(s, y | f_l), clipped below at zero.
double info_gain(const PairSamples& samples, const LikelihoodModel& model);
double info_gain(ActionIndex candidate, std::optional<ActionIndex> previous, const Eigen::MatrixXd& samples,
                 std::span<const ActionIndex> sample_indices, const LikelihoodModel& model);

struct SelectionOptions {
    RoiConfig roi;
    std::size_t num_samples = 1000;  // L
};

struct Selection {
    ActionIndex action = 0;
    double info_gain = 0.0;
    std::size_t roi_size = 0;       // candidates passing the ROI test
    bool roi_fallback = false;      // ROI was empty, full subset used
    std::size_t num_tied = 1;
};

/// argmax of info_gain over the ROI-filtered subset. Utilities of each
/// candidate and the previous action are drawn from their exact bivariate
/// posterior marginal, with one shared set of L standard-normal pairs for
/// all candidates (common random numbers). Ties (within 1e-12 relative) are
/// broken uniformly with `tie_rng`.
///
/// Throws std::invalid_argument on an empty subset or when a subset action or
/// the previous action is missing from the posterior's inference set.
Selection select_action(std::span<const ActionIndex> subset, std::optional<ActionIndex> previous,
                        const PosteriorState& state, const SelectionOptions& options, const LikelihoodModel& model,
                        Rng& sample_rng, Rng& tie_rng);

}  // namespace roial

#endif  // ROIAL_ACQUISITION_HPP
