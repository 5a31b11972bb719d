#include "roial/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace roial {

std::vector<ActionIndex> draw_subset(std::size_t num_actions, std::size_t subset_size, Rng& rng) {
    std::vector<ActionIndex> all(num_actions);
    std::iota(all.begin(), all.end(), ActionIndex{0});
    if (subset_size >= num_actions) {
        return all;
    }
    std::vector<ActionIndex> out;
    out.reserve(subset_size);
    std::sample(all.begin(), all.end(), std::back_inserter(out), subset_size, rng);
    return out;
}

std::vector<bool> roi_mask(std::span<const double> means, std::span<const double> sigmas, const RoiConfig& cfg) {
    if (means.size() != sigmas.size()) {
        throw std::invalid_argument("roi_mask: means and sigmas differ in length");
    }
    std::vector<bool> mask(means.size(), true);
    if (cfg.lambda == std::numeric_limits<double>::infinity()) {
        return mask;
    }
    for (std::size_t k = 0; k < means.size(); ++k) {
        mask[k] = means[k] + cfg.lambda * sigmas[k] > cfg.lowest_threshold;
    }
    return mask;
}

std::vector<bool> roi_mask(const Eigen::VectorXd& means, const Eigen::VectorXd& sigmas, const RoiConfig& cfg) {
    return roi_mask(std::span<const double>(means.data(), static_cast<std::size_t>(means.size())),
                    std::span<const double>(sigmas.data(), static_cast<std::size_t>(sigmas.size())), cfg);
}

OutcomeTable::OutcomeTable(int num_categories, bool with_preference)
    : probs_(Eigen::MatrixXd::Zero(num_categories, with_preference ? 2 : 1)) {}

namespace {

double plogp(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

}  // namespace

double OutcomeTable::entropy() const {
    double h = 0.0;
    for (Eigen::Index j = 0; j < probs_.cols(); ++j) {
        for (Eigen::Index i = 0; i < probs_.rows(); ++i) {
            h -= plogp(probs_(i, j));
        }
    }
    return h;
}

namespace {

struct Accumulated {
    OutcomeTable table;
    double mean_conditional_entropy;
};

// p log p with 0 log 0 = 0; the clamp keeps the log vectorized.
Eigen::ArrayXd plogp(const Eigen::ArrayXd& p) {
    return p * p.max(std::numeric_limits<double>::min()).log();
}

// Sigmoid link only. The ordinal CDFs g((b_y - f)/c) = 1 / (1 + e^(f/c) e^(-b_y/c))
// share one exponential per sample; overflow of the product to inf yields 0.
Accumulated accumulate_sigmoid(const PairSamples& samples, const LikelihoodModel& model, bool pairwise) {
    const auto count = static_cast<Eigen::Index>(samples.candidate.size());
    const int r = model.ordinal.num_categories();
    const double c = model.ordinal.noise();
    const Eigen::Map<const Eigen::ArrayXd> f(samples.candidate.data(), count);
    Eigen::ArrayXd p;
    Eigen::ArrayXd p_other;
    Eigen::ArrayXd h = Eigen::ArrayXd::Zero(count);
    if (pairwise) {
        // Binary entropy of g(x): log(1 + e) + |x| e / (1 + e), e = exp(-|x|).
        const Eigen::Map<const Eigen::ArrayXd> f_prev(samples.previous.data(), count);
        const Eigen::ArrayXd x = (f - f_prev) / model.preference.noise;
        const Eigen::ArrayXd a = x.abs();
        const Eigen::ArrayXd e = (-a).exp();
        const Eigen::ArrayXd d = (1.0 + e).inverse();
        const Eigen::ArrayXd small = e * d;
        h = (1.0 + e).log() + a * small;
        p = (x >= 0.0).select(d, small);
        p_other = (x >= 0.0).select(small, d);
    }
    const Eigen::ArrayXd u = (f / c).max(-700.0).min(700.0).exp();
    OutcomeTable table(r, pairwise);
    Eigen::ArrayXd prev = Eigen::ArrayXd::Zero(count);
    Eigen::ArrayXd q(count);
    for (int y = 1; y <= r; ++y) {
        if (y < r) {
            Eigen::ArrayXd cdf = (1.0 + u * std::exp(-model.ordinal.threshold(y) / c)).inverse();
            q = cdf - prev;
            prev.swap(cdf);
        } else {
            q = 1.0 - prev;
        }
        h -= plogp(q);
        if (pairwise) {
            table.at(y, 0) = (p * q).sum();
            table.at(y, 1) = (p_other * q).sum();
        } else {
            table.at(y, 0) = q.sum();
        }
    }
    const double inv = 1.0 / static_cast<double>(count);
    for (int y = 1; y <= r; ++y) {
        table.at(y, 0) *= inv;
        if (pairwise) {
            table.at(y, 1) *= inv;
        }
    }
    return {std::move(table), h.sum() * inv};
}

Accumulated accumulate(const PairSamples& samples, const LikelihoodModel& model) {
    const std::size_t count = samples.candidate.size();
    if (count == 0) {
        throw std::invalid_argument("outcome_probs needs at least one sample");
    }
    const bool pairwise = !samples.previous.empty();
    if (pairwise && samples.previous.size() != count) {
        throw std::invalid_argument("candidate and previous sample counts differ");
    }
    if (model.link.kind() == LinkKind::kSigmoid) {
        return accumulate_sigmoid(samples, model, pairwise);
    }
    const int r = model.ordinal.num_categories();
    OutcomeTable table(r, pairwise);
    std::vector<double> q(static_cast<std::size_t>(r));
    double conditional = 0.0;
    const double cp = model.preference.noise;
    for (std::size_t l = 0; l < count; ++l) {
        ordinal_probs(samples.candidate[l], model.ordinal, model.link, q);
        double h = 0.0;
        for (double p : q) {
            h -= plogp(p);
        }
        if (pairwise) {
            const double p_cand = model.link((samples.candidate[l] - samples.previous[l]) / cp);
            h -= plogp(p_cand) + plogp(1.0 - p_cand);
            for (int y = 1; y <= r; ++y) {
                const double qy = q[static_cast<std::size_t>(y - 1)];
                table.at(y, 0) += p_cand * qy;
                table.at(y, 1) += (1.0 - p_cand) * qy;
            }
        } else {
            for (int y = 1; y <= r; ++y) {
                table.at(y, 0) += q[static_cast<std::size_t>(y - 1)];
            }
        }
        conditional += h;
    }
    const double inv = 1.0 / static_cast<double>(count);
    for (int y = 1; y <= r; ++y) {
        table.at(y, 0) *= inv;
        if (pairwise) {
            table.at(y, 1) *= inv;
        }
    }
    return {std::move(table), conditional * inv};
}

std::vector<double> extract_row(const Eigen::MatrixXd& samples, std::span<const ActionIndex> sample_indices,
                                ActionIndex action) {
    auto it = std::find(sample_indices.begin(), sample_indices.end(), action);
    if (it == sample_indices.end()) {
        throw std::invalid_argument("action " + std::to_string(action) + " missing from sample index set");
    }
    const auto row = static_cast<Eigen::Index>(it - sample_indices.begin());
    std::vector<double> out(static_cast<std::size_t>(samples.cols()));
    for (Eigen::Index l = 0; l < samples.cols(); ++l) {
        out[static_cast<std::size_t>(l)] = samples(row, l);
    }
    return out;
}

}  // namespace

OutcomeTable outcome_probs(const PairSamples& samples, const LikelihoodModel& model) {
    return accumulate(samples, model).table;
}

double info_gain(const PairSamples& samples, const LikelihoodModel& model) {
    const Accumulated acc = accumulate(samples, model);
    return std::max(0.0, acc.table.entropy() - acc.mean_conditional_entropy);
}

OutcomeTable outcome_probs(ActionIndex candidate, std::optional<ActionIndex> previous, const Eigen::MatrixXd& samples,
                           std::span<const ActionIndex> sample_indices, const LikelihoodModel& model) {
    const auto cand = extract_row(samples, sample_indices, candidate);
    const auto prev = previous ? extract_row(samples, sample_indices, *previous) : std::vector<double>{};
    return outcome_probs(PairSamples{cand, prev}, model);
}

double info_gain(ActionIndex candidate, std::optional<ActionIndex> previous, const Eigen::MatrixXd& samples,
                 std::span<const ActionIndex> sample_indices, const LikelihoodModel& model) {
    const auto cand = extract_row(samples, sample_indices, candidate);
    const auto prev = previous ? extract_row(samples, sample_indices, *previous) : std::vector<double>{};
    return info_gain(PairSamples{cand, prev}, model);
}

Selection select_action(std::span<const ActionIndex> subset, std::optional<ActionIndex> previous,
                        const PosteriorState& state, const SelectionOptions& options, const LikelihoodModel& model,
                        Rng& sample_rng, Rng& tie_rng) {
    if (subset.empty()) {
        throw std::invalid_argument("select_action: empty candidate subset");
    }
    if (options.num_samples == 0) {
        throw std::invalid_argument("select_action: need at least one posterior sample");
    }
    std::vector<std::size_t> pos(subset.size());
    for (std::size_t i = 0; i < subset.size(); ++i) {
        auto p = state.position_of(subset[i]);
        if (!p) {
            throw std::invalid_argument("candidate " + std::to_string(subset[i]) + " is outside the inference set");
        }
        pos[i] = *p;
    }
    std::optional<std::size_t> prev_pos;
    if (previous) {
        prev_pos = state.position_of(*previous);
        if (!prev_pos) {
            throw std::invalid_argument("previous action is outside the inference set");
        }
    }

    std::vector<double> means(subset.size());
    std::vector<double> sigmas(subset.size());
    for (std::size_t i = 0; i < subset.size(); ++i) {
        means[i] = state.mean()[static_cast<Eigen::Index>(pos[i])];
        sigmas[i] = state.stddev()[static_cast<Eigen::Index>(pos[i])];
    }
    const std::vector<bool> mask = roi_mask(means, sigmas, options.roi);

    Selection result;
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < subset.size(); ++i) {
        if (mask[i]) {
            candidates.push_back(i);
        }
    }
    result.roi_size = candidates.size();
    if (candidates.empty()) {
        result.roi_fallback = true;
        candidates.resize(subset.size());
        std::iota(candidates.begin(), candidates.end(), std::size_t{0});
    }

    const std::size_t count = options.num_samples;
    std::normal_distribution<double> normal;
    std::vector<double> z1(count);
    std::vector<double> z2(count);
    for (std::size_t l = 0; l < count; ++l) {
        z1[l] = normal(sample_rng);
        z2[l] = normal(sample_rng);
    }

    std::vector<double> f_prev;
    double var_prev = 0.0;
    if (prev_pos) {
        const auto pp = static_cast<Eigen::Index>(*prev_pos);
        const double mu_p = state.mean()[pp];
        var_prev = state.stddev()[pp] * state.stddev()[pp];
        const double sd_p = std::sqrt(var_prev);
        f_prev.resize(count);
        for (std::size_t l = 0; l < count; ++l) {
            f_prev[l] = mu_p + sd_p * z1[l];
        }
    }

    std::vector<double> gains(candidates.size());
    std::vector<double> f_cand(count);
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        const std::size_t i = candidates[c];
        const double mu = means[i];
        const double var = sigmas[i] * sigmas[i];
        double loading = 0.0;  // coefficient on z1
        double residual = std::sqrt(var);
        if (prev_pos && var_prev > 0.0) {
            const double cov = state.covariance(pos[i], *prev_pos);
            loading = cov / std::sqrt(var_prev);
            residual = std::sqrt(std::max(0.0, var - loading * loading));
        }
        for (std::size_t l = 0; l < count; ++l) {
            f_cand[l] = mu + loading * z1[l] + residual * z2[l];
        }
        gains[c] = info_gain(PairSamples{f_cand, f_prev}, model);
    }

    const double best = *std::max_element(gains.begin(), gains.end());
    const double tol = 1e-12 * std::max(1.0, std::abs(best));
    std::vector<std::size_t> tied;
    for (std::size_t c = 0; c < gains.size(); ++c) {
        if (gains[c] >= best - tol) {
            tied.push_back(c);
        }
    }
    std::size_t pick = tied.front();
    if (tied.size() > 1) {
        std::uniform_int_distribution<std::size_t> uniform(0, tied.size() - 1);
        pick = tied[uniform(tie_rng)];
    }
    result.action = subset[candidates[pick]];
    result.info_gain = gains[pick];
    result.num_tied = tied.size();
    return result;
}

}  // namespace roial
