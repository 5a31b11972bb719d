#ifndef ROIAL_SESSION_HPP
#define ROIAL_SESSION_HPP

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "roial/acquisition.hpp"
#include "roial/config.hpp"
#include "roial/feedback.hpp"
#include "roial/posterior.hpp"

namespace roial {

enum class Phase { kTraining, kValidation, kFinished };

std::string to_string(Phase phase);
std::string to_string(PreferenceAnswer answer);
/// Accepts "current", "previous", "skip"; throws FeedbackError otherwise.
PreferenceAnswer parse_preference(const std::string& text);

/// Next action to execute. A preference against the previous action is
/// requested from trial 2 on.
struct Query {
    std::size_t trial = 1;
    ActionIndex action = 0;
    std::optional<ActionIndex> previous;
    Phase phase = Phase::kTraining;

    [[nodiscard]] bool preference_requested() const { return previous.has_value(); }
    bool operator==(const Query&) const = default;
};

/// One completed trial of the transcript.
struct TrialRecord {
    std::size_t trial = 0;
    ActionIndex action = 0;
    OrdinalLabel label = 1;
    PreferenceAnswer preference = PreferenceAnswer::kSkip;
    bool operator==(const TrialRecord&) const = default;
};

/// Predictive posterior over every action of the grid.
struct GridPosterior {
    std::size_t trial = 0;  // completed trials the posterior conditions on
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev;
    std::vector<OrdinalLabel> predicted;  // MAP category per action
    std::vector<bool> roi;                // mean + lambda * stddev > b_1
};

/// Derives predicted labels and the ROI mask from grid moments.
GridPosterior make_grid_posterior(const ExperimentConfig& config, std::size_t trial, Eigen::VectorXd mean,
                                  Eigen::VectorXd stddev);

/// Conditions on `dataset` and predicts the whole grid of `config`.
GridPosterior compute_grid_posterior(const ExperimentConfig& config,
                                     std::shared_ptr<const SquaredExponentialKernel> kernel,
                                     const FeedbackDataset& dataset, std::size_t trial);

struct ValidationPlan {
    std::vector<ActionIndex> actions;
    /// shortfall[y - 2] = targeted actions missing for category y = 2..r.
    std::vector<std::size_t> shortfall;
    /// Actions missing from the requested total after backfilling.
    std::size_t total_shortfall = 0;
};

/// Picks `per_category` unqueried actions predicted in each category 2..r,
/// fills up to `total` with random unqueried actions not predicted in
/// category 1, and shuffles the result. Never returns a queried action or
/// one predicted in category 1.
ValidationPlan select_validation_actions(std::span<const OrdinalLabel> predicted, std::span<const ActionIndex> queried,
                                         int num_categories, std::size_t per_category, std::size_t total, Rng& rng);

/// r x r counts; rows = reported label, columns = predicted label.
Eigen::MatrixXi confusion_matrix(std::span<const OrdinalLabel> reported, std::span<const OrdinalLabel> predicted,
                                 int num_categories);

/// Diagnostics of the latest acquisition step.
struct StepInfo {
    Selection selection;
    std::size_t inference_set_size = 0;
    int newton_iterations = 0;
};

/// One elicitation session: the training loop with information-gain
/// acquisition followed by a validation phase on unqueried actions.
///
/// Fully determined by the config (seed included) and the feedback given, so
/// replaying a transcript reproduces the same queries. Not thread-safe.
class Session {
public:
    /// Validates the config (throws ConfigError) and draws the first action.
    explicit Session(ExperimentConfig config);

    /// Rebuilds a session from its transcript. Throws SnapshotError if the
    /// recorded actions differ from the ones the engine would choose.
    static Session replay(ExperimentConfig config, std::span<const TrialRecord> transcript);

    [[nodiscard]] const ExperimentConfig& config() const { return config_; }
    [[nodiscard]] const ActionSpace& space() const { return kernel_->space(); }
    [[nodiscard]] const LikelihoodModel& model() const { return model_; }
    [[nodiscard]] std::shared_ptr<const SquaredExponentialKernel> kernel() const { return kernel_; }

    [[nodiscard]] Phase phase() const { return query_.phase; }
    [[nodiscard]] bool finished() const { return query_.phase == Phase::kFinished; }
    /// Pending query; after the last trial it carries phase kFinished.
    [[nodiscard]] const Query& query() const { return query_; }
    [[nodiscard]] std::size_t completed_trials() const { return transcript_.size(); }
    [[nodiscard]] const FeedbackDataset& dataset() const { return dataset_; }
    [[nodiscard]] const std::vector<TrialRecord>& transcript() const { return transcript_; }

    /// Records feedback for the pending query and advances. Throws
    /// FeedbackError for a label outside 1..r, a preference on trial 1, or a
    /// finished session.
    const Query& submit(OrdinalLabel label, PreferenceAnswer preference = PreferenceAnswer::kSkip);

    /// Latest training-phase posterior, conditioned on all training feedback
    /// so far, over the last inference set (touched actions only once the
    /// training phase is over).
    [[nodiscard]] const std::shared_ptr<const PosteriorState>& posterior() const { return posterior_; }
    [[nodiscard]] const std::optional<StepInfo>& last_step() const { return last_step_; }

    [[nodiscard]] const std::optional<GridPosterior>& grid() const { return grid_; }
    /// True when a throttled full-grid refresh is due for the current trial.
    [[nodiscard]] bool grid_refresh_due() const;
    [[nodiscard]] GridPosterior compute_grid() const;
    /// Keeps `grid` unless an equally recent one is already published.
    void publish_grid(GridPosterior grid);
    void refresh_grid() { publish_grid(compute_grid()); }

    [[nodiscard]] const ValidationPlan& validation_plan() const { return plan_; }
    /// Predicted labels of the validation actions, as used at the transition.
    [[nodiscard]] const std::vector<OrdinalLabel>& validation_predictions() const { return plan_predicted_; }
    /// Available once the session is finished and had validation trials.
    [[nodiscard]] std::optional<Eigen::MatrixXi> validation_confusion() const;

private:
    void fit_and_select();
    void begin_validation();
    void finish();

    ExperimentConfig config_;
    std::shared_ptr<const SquaredExponentialKernel> kernel_;
    LikelihoodModel model_;
    FeedbackDataset dataset_;
    std::vector<TrialRecord> transcript_;
    Query query_;
    std::shared_ptr<const PosteriorState> posterior_;
    std::optional<StepInfo> last_step_;
    std::optional<GridPosterior> grid_;
    ValidationPlan plan_;
    std::vector<OrdinalLabel> plan_predicted_;
    std::vector<ActionIndex> training_actions_;
};

}  // namespace roial

#endif  // ROIAL_SESSION_HPP
