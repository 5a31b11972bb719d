#include "roial/session.hpp"

#include <algorithm>
#include <unordered_set>

#include "roial/errors.hpp"

namespace roial {

std::string to_string(Phase phase) {
    switch (phase) {
        case Phase::kTraining:
            return "training";
        case Phase::kValidation:
            return "validation";
        case Phase::kFinished:
            return "finished";
    }
    return "unknown";
}

std::string to_string(PreferenceAnswer answer) {
    switch (answer) {
        case PreferenceAnswer::kCurrent:
            return "current";
        case PreferenceAnswer::kPrevious:
            return "previous";
        case PreferenceAnswer::kSkip:
            return "skip";
    }
    return "skip";
}

PreferenceAnswer parse_preference(const std::string& text) {
    if (text == "current") {
        return PreferenceAnswer::kCurrent;
    }
    if (text == "previous") {
        return PreferenceAnswer::kPrevious;
    }
    if (text == "skip") {
        return PreferenceAnswer::kSkip;
    }
    throw FeedbackError("preference must be \"current\", \"previous\" or \"skip\", got \"" + text + "\"");
}

GridPosterior compute_grid_posterior(const ExperimentConfig& config,
                                     std::shared_ptr<const SquaredExponentialKernel> kernel,
                                     const FeedbackDataset& dataset, std::size_t trial) {
    const std::vector<ActionIndex> touched = dataset.touched_actions();
    const PosteriorState state = laplace_fit(dataset, touched, kernel, config.likelihood_model());

    const std::size_t n = kernel->space().size();
    std::vector<ActionIndex> all(n);
    for (std::size_t k = 0; k < n; ++k) {
        all[k] = k;
    }
    const Prediction pred = predict(state, all);

    return make_grid_posterior(config, trial, pred.mean, pred.variance.cwiseSqrt());
}

GridPosterior make_grid_posterior(const ExperimentConfig& config, std::size_t trial, Eigen::VectorXd mean,
                                  Eigen::VectorXd stddev) {
    if (mean.size() != stddev.size()) {
        throw std::invalid_argument("grid mean and stddev differ in length");
    }
    const LikelihoodModel model = config.likelihood_model();
    GridPosterior grid;
    grid.trial = trial;
    grid.mean = std::move(mean);
    grid.stddev = std::move(stddev);
    grid.predicted.resize(static_cast<std::size_t>(grid.mean.size()));
    for (Eigen::Index k = 0; k < grid.mean.size(); ++k) {
        grid.predicted[static_cast<std::size_t>(k)] = predicted_label(grid.mean[k], model.ordinal, model.link);
    }
    grid.roi = roi_mask(grid.mean, grid.stddev, RoiConfig{config.lambda, config.thresholds.front()});
    return grid;
}

ValidationPlan select_validation_actions(std::span<const OrdinalLabel> predicted, std::span<const ActionIndex> queried,
                                         int num_categories, std::size_t per_category, std::size_t total, Rng& rng) {
    const std::unordered_set<ActionIndex> excluded(queried.begin(), queried.end());
    std::vector<std::vector<ActionIndex>> pools(static_cast<std::size_t>(std::max(num_categories, 1)) + 1);
    for (std::size_t k = 0; k < predicted.size(); ++k) {
        const OrdinalLabel y = predicted[k];
        if (y >= 2 && y <= num_categories && !excluded.contains(k)) {
            pools[static_cast<std::size_t>(y)].push_back(k);
        }
    }

    ValidationPlan plan;
    std::unordered_set<ActionIndex> chosen;
    for (int y = 2; y <= num_categories; ++y) {
        const auto& pool = pools[static_cast<std::size_t>(y)];
        const std::size_t want = std::min(per_category, total - std::min(total, plan.actions.size()));
        std::vector<ActionIndex> picked;
        std::sample(pool.begin(), pool.end(), std::back_inserter(picked), want, rng);
        for (ActionIndex a : picked) {
            plan.actions.push_back(a);
            chosen.insert(a);
        }
        plan.shortfall.push_back(per_category - std::min(per_category, picked.size()));
    }

    if (plan.actions.size() < total) {
        std::vector<ActionIndex> rest;
        for (int y = 2; y <= num_categories; ++y) {
            for (ActionIndex a : pools[static_cast<std::size_t>(y)]) {
                if (!chosen.contains(a)) {
                    rest.push_back(a);
                }
            }
        }
        std::sort(rest.begin(), rest.end());
        std::vector<ActionIndex> picked;
        std::sample(rest.begin(), rest.end(), std::back_inserter(picked), total - plan.actions.size(), rng);
        plan.actions.insert(plan.actions.end(), picked.begin(), picked.end());
    }
    plan.total_shortfall = total - plan.actions.size();
    std::shuffle(plan.actions.begin(), plan.actions.end(), rng);
    return plan;
}

Eigen::MatrixXi confusion_matrix(std::span<const OrdinalLabel> reported, std::span<const OrdinalLabel> predicted,
                                 int num_categories) {
    if (reported.size() != predicted.size()) {
        throw std::invalid_argument("confusion_matrix: label lists differ in length");
    }
    Eigen::MatrixXi m = Eigen::MatrixXi::Zero(num_categories, num_categories);
    for (std::size_t i = 0; i < reported.size(); ++i) {
        const OrdinalLabel a = reported[i];
        const OrdinalLabel b = predicted[i];
        if (a < 1 || a > num_categories || b < 1 || b > num_categories) {
            throw std::out_of_range("confusion_matrix: label outside 1..r");
        }
        ++m(a - 1, b - 1);
    }
    return m;
}

Session::Session(ExperimentConfig config) : config_(std::move(config)) {
    auto violations = validate(config_);
    if (!violations.empty()) {
        throw ConfigError(std::move(violations));
    }
    kernel_ = std::make_shared<const SquaredExponentialKernel>(config_.action_space(), config_.kernel);
    model_ = config_.likelihood_model();
    Rng rng = make_stream(config_.seed, Stream::kFirstAction);
    std::uniform_int_distribution<ActionIndex> uniform(0, space().size() - 1);
    query_ = Query{1, uniform(rng), std::nullopt, Phase::kTraining};
}

Session Session::replay(ExperimentConfig config, std::span<const TrialRecord> transcript) {
    Session s(std::move(config));
    for (const TrialRecord& rec : transcript) {
        if (s.finished() || rec.trial != s.query_.trial || rec.action != s.query_.action) {
            throw SnapshotError("transcript diverges from the engine at trial " + std::to_string(rec.trial));
        }
        s.submit(rec.label, rec.preference);
    }
    return s;
}

const Query& Session::submit(OrdinalLabel label, PreferenceAnswer preference) {
    if (finished()) {
        throw FeedbackError("session is finished");
    }
    const int r = config_.num_categories();
    if (label < 1 || label > r) {
        throw FeedbackError("label " + std::to_string(label) + " outside 1.." + std::to_string(r));
    }
    if (!query_.previous && preference != PreferenceAnswer::kSkip) {
        throw FeedbackError("trial 1 has no previous action to compare against");
    }

    const ActionIndex current = query_.action;
    dataset_.ordinals.push_back({current, label});
    if (preference == PreferenceAnswer::kCurrent) {
        dataset_.preferences.push_back({current, *query_.previous});
    } else if (preference == PreferenceAnswer::kPrevious) {
        dataset_.preferences.push_back({*query_.previous, current});
    }
    transcript_.push_back({query_.trial, current, label, preference});

    const std::size_t done = transcript_.size();
    if (query_.phase == Phase::kTraining) {
        training_actions_.push_back(current);
        if (done < config_.training_trials) {
            query_ = Query{done + 1, current, current, Phase::kTraining};
            fit_and_select();
        } else {
            const auto touched = dataset_.touched_actions();
            posterior_ = std::make_shared<const PosteriorState>(laplace_fit(dataset_, touched, kernel_, model_));
            begin_validation();
        }
    } else {
        const std::size_t next = done - config_.training_trials;
        if (next < plan_.actions.size()) {
            query_ = Query{done + 1, plan_.actions[next], current, Phase::kValidation};
        } else {
            finish();
        }
    }
    return query_;
}

void Session::fit_and_select() {
    const std::size_t trial = query_.trial;
    const std::size_t m = config_.subset_size == 0 ? space().size() : config_.subset_size;
    Rng subset_rng = make_stream(config_.seed, Stream::kSubset, trial);
    const std::vector<ActionIndex> subset = draw_subset(space().size(), m, subset_rng);

    std::vector<ActionIndex> inference = dataset_.touched_actions();
    inference.insert(inference.end(), subset.begin(), subset.end());
    posterior_ = std::make_shared<const PosteriorState>(laplace_fit(dataset_, inference, kernel_, model_));

    SelectionOptions options;
    options.roi = RoiConfig{config_.lambda, config_.thresholds.front()};
    options.num_samples = config_.posterior_samples;
    Rng sample_rng = make_stream(config_.seed, Stream::kPosteriorSamples, trial);
    Rng tie_rng = make_stream(config_.seed, Stream::kTieBreak, trial);
    const Selection sel = select_action(subset, query_.previous, *posterior_, options, model_, sample_rng, tie_rng);
    query_.action = sel.action;
    last_step_ = StepInfo{sel, posterior_->size(), posterior_->newton_iterations()};
}

void Session::begin_validation() {
    const std::size_t done = transcript_.size();
    if (config_.validation_trials == 0) {
        finish();
        return;
    }
    grid_ = compute_grid();
    Rng rng = make_stream(config_.seed, Stream::kValidation);
    plan_ = select_validation_actions(grid_->predicted, training_actions_, config_.num_categories(),
                                      config_.validation_per_category, config_.validation_trials, rng);
    plan_predicted_.clear();
    for (ActionIndex a : plan_.actions) {
        plan_predicted_.push_back(grid_->predicted[a]);
    }
    if (plan_.actions.empty()) {
        finish();
        return;
    }
    query_ = Query{done + 1, plan_.actions.front(), transcript_.back().action, Phase::kValidation};
}

void Session::finish() {
    query_ = Query{transcript_.size() + 1, transcript_.back().action, std::nullopt, Phase::kFinished};
}

bool Session::grid_refresh_due() const {
    const std::size_t done = transcript_.size();
    if (done == 0 || done % config_.grid_refresh_every != 0) {
        return false;
    }
    return !grid_ || grid_->trial < done;
}

GridPosterior Session::compute_grid() const {
    return compute_grid_posterior(config_, kernel_, dataset_, transcript_.size());
}

void Session::publish_grid(GridPosterior grid) {
    if (grid_ && grid_->trial >= grid.trial) {
        return;
    }
    grid_ = std::move(grid);
}

std::optional<Eigen::MatrixXi> Session::validation_confusion() const {
    if (!finished() || plan_.actions.empty()) {
        return std::nullopt;
    }
    std::vector<OrdinalLabel> reported;
    for (std::size_t i = config_.training_trials; i < transcript_.size(); ++i) {
        reported.push_back(transcript_[i].label);
    }
    return confusion_matrix(reported, plan_predicted_, config_.num_categories());
}

}  // namespace roial
