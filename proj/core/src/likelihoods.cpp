#include "roial/likelihoods.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "roial/errors.hpp"

namespace roial {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log(1 - e^a) for a <= 0.
double log1mexp(double a) {
    if (a == -kInf) {
        return 0.0;
    }
    if (a > -std::numbers::ln2) {
        return std::log(-std::expm1(a));
    }
    return std::log1p(-std::exp(a));
}

double sigmoid_log_cdf(double x) {
    if (x >= 0.0) {
        return -std::log1p(std::exp(-x));
    }
    return x - std::log1p(std::exp(x));
}

double probit_log_cdf(double x) {
    if (x > 0.0) {
        return std::log1p(-0.5 * std::erfc(x / std::numbers::sqrt2));
    }
    if (x > -35.0) {
        return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
    }
    // Mills-ratio asymptotic expansion for the far lower tail.
    const double x2 = x * x;
    const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
    return -0.5 * x2 - std::log(-x) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

}  // namespace

double Link::operator()(double x) const {
    if (x == kInf) {
        return 1.0;
    }
    if (x == -kInf) {
        return 0.0;
    }
    if (kind_ == LinkKind::kProbit) {
        return 0.5 * std::erfc(-x / std::numbers::sqrt2);
    }
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double Link::log_cdf(double x) const {
    if (x == kInf) {
        return 0.0;
    }
    if (x == -kInf) {
        return -kInf;
    }
    return kind_ == LinkKind::kProbit ? probit_log_cdf(x) : sigmoid_log_cdf(x);
}

double Link::log_pdf(double x) const {
    if (std::isinf(x)) {
        return -kInf;
    }
    if (kind_ == LinkKind::kProbit) {
        return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi);
    }
    return sigmoid_log_cdf(x) + sigmoid_log_cdf(-x);
}

double Link::pdf_slope(double x) const {
    if (kind_ == LinkKind::kProbit) {
        return -x;
    }
    return -std::tanh(0.5 * x);
}

double Link::log_interval(double upper, double lower) const {
    if (!(upper >= lower)) {
        throw std::invalid_argument("log_interval requires upper >= lower");
    }
    if (upper == lower) {
        return -kInf;
    }
    if (lower == -kInf) {
        return log_cdf(upper);
    }
    if (upper == kInf) {
        return log_cdf(-lower);
    }
    if (lower >= 0.0) {
        // Both in the upper tail: use g(u) - g(l) = g(-l) - g(-u).
        const double hi = log_cdf(-lower);
        return hi + log1mexp(log_cdf(-upper) - hi);
    }
    const double hi = log_cdf(upper);
    return hi + log1mexp(log_cdf(lower) - hi);
}

double link(double x) { return Link{LinkKind::kSigmoid}(x); }

OrdinalScale::OrdinalScale(std::vector<double> thresholds, double noise)
    : thresholds_(std::move(thresholds)), noise_(noise) {
    if (!(noise_ > 0.0) || !std::isfinite(noise_)) {
        throw std::invalid_argument("ordinal noise must be positive and finite");
    }
    for (std::size_t j = 0; j < thresholds_.size(); ++j) {
        if (!std::isfinite(thresholds_[j])) {
            throw std::invalid_argument("thresholds must be finite");
        }
        if (j > 0 && !(thresholds_[j] > thresholds_[j - 1])) {
            throw std::invalid_argument("thresholds strictly increasing");
        }
    }
}

double OrdinalScale::threshold(int y) const {
    if (y <= 0) {
        return -kInf;
    }
    if (y >= num_categories()) {
        return kInf;
    }
    return thresholds_[static_cast<std::size_t>(y - 1)];
}

double log_preference_prob(double f_winner, double f_loser, const PreferenceModel& model, const Link& g) {
    return g.log_cdf((f_winner - f_loser) / model.noise);
}

double preference_prob(double f_winner, double f_loser, const PreferenceModel& model, const Link& g) {
    return std::exp(log_preference_prob(f_winner, f_loser, model, g));
}

namespace {

void check_label(OrdinalLabel y, const OrdinalScale& scale) {
    if (y < 1 || y > scale.num_categories()) {
        throw std::out_of_range("ordinal label " + std::to_string(y) + " outside 1.."
                                + std::to_string(scale.num_categories()));
    }
}

}  // namespace

double log_ordinal_prob(double f, OrdinalLabel y, const OrdinalScale& scale, const Link& g) {
    check_label(y, scale);
    const double c = scale.noise();
    return g.log_interval((scale.threshold(y) - f) / c, (scale.threshold(y - 1) - f) / c);
}

double ordinal_prob(double f, OrdinalLabel y, const OrdinalScale& scale, const Link& g) {
    return std::exp(log_ordinal_prob(f, y, scale, g));
}

void ordinal_probs(double f, const OrdinalScale& scale, const Link& g, std::span<double> out) {
    const int r = scale.num_categories();
    double prev = 0.0;
    for (int y = 1; y < r; ++y) {
        const double cdf = g((scale.threshold(y) - f) / scale.noise());
        out[static_cast<std::size_t>(y - 1)] = cdf - prev;
        prev = cdf;
    }
    out[static_cast<std::size_t>(r - 1)] = 1.0 - prev;
}

OrdinalLabel predicted_label(double f, const OrdinalScale& scale, const Link& g) {
    OrdinalLabel best = 1;
    double best_log = -kInf;
    for (int y = 1; y <= scale.num_categories(); ++y) {
        const double lp = log_ordinal_prob(f, y, scale, g);
        if (lp > best_log) {
            best_log = lp;
            best = y;
        }
    }
    return best;
}

LocalFeedback localize(const FeedbackDataset& dataset, std::span<const ActionIndex> indices) {
    std::unordered_map<ActionIndex, std::size_t> position;
    position.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        position.emplace(indices[i], i);
    }
    auto lookup = [&](ActionIndex a) {
        auto it = position.find(a);
        if (it == position.end()) {
            throw std::invalid_argument("action " + std::to_string(a) + " referenced by feedback is not in the index set");
        }
        return it->second;
    };
    LocalFeedback out;
    out.dimension = indices.size();
    out.preferences.reserve(dataset.preferences.size());
    for (const auto& p : dataset.preferences) {
        out.preferences.emplace_back(lookup(p.winner), lookup(p.loser));
    }
    out.ordinals.reserve(dataset.ordinals.size());
    for (const auto& o : dataset.ordinals) {
        out.ordinals.emplace_back(lookup(o.action), o.label);
    }
    return out;
}

namespace {

struct TermDerivatives {
    double log_p;
    double d1;  // d log p / d(argument)
    double d2;  // d^2 log p / d(argument)^2
};

// Preference term as a function of z = (f_w - f_l) / c_p.
TermDerivatives preference_term(double z, const Link& g) {
    const double log_p = g.log_cdf(z);
    const double q = std::exp(g.log_pdf(z) - log_p);
    return {log_p, q, q * (g.pdf_slope(z) - q)};
}

// Ordinal term as a function of f directly.
TermDerivatives ordinal_term(double f, OrdinalLabel y, const OrdinalScale& scale, const Link& g) {
    const double c = scale.noise();
    const double z_hi = (scale.threshold(y) - f) / c;
    const double z_lo = (scale.threshold(y - 1) - f) / c;
    const double log_p = g.log_interval(z_hi, z_lo);
    const double r_hi = std::isinf(z_hi) ? 0.0 : std::exp(g.log_pdf(z_hi) - log_p);
    const double r_lo = std::isinf(z_lo) ? 0.0 : std::exp(g.log_pdf(z_lo) - log_p);
    const double s_hi = std::isinf(z_hi) ? 0.0 : r_hi * g.pdf_slope(z_hi);
    const double s_lo = std::isinf(z_lo) ? 0.0 : r_lo * g.pdf_slope(z_lo);
    const double d1 = -(r_hi - r_lo) / c;
    const double d2 = (s_hi - s_lo) / (c * c) - d1 * d1;
    return {log_p, d1, d2};
}

void check_dimension(const LocalFeedback& data, const Eigen::VectorXd& f) {
    if (static_cast<std::size_t>(f.size()) != data.dimension) {
        throw std::invalid_argument("utility vector size does not match feedback index set");
    }
}

void check_finite(double log_p) {
    if (!std::isfinite(log_p)) {
        throw NumericalError("likelihood term underflowed to zero");
    }
}

template <bool kGradient, bool kHessian>
LikelihoodTerms evaluate(const LocalFeedback& data, const Eigen::VectorXd& f, const LikelihoodModel& model) {
    check_dimension(data, f);
    const auto n = static_cast<Eigen::Index>(data.dimension);
    LikelihoodTerms out;
    if constexpr (kGradient) {
        out.gradient = Eigen::VectorXd::Zero(n);
    }
    if constexpr (kHessian) {
        out.hessian = Eigen::MatrixXd::Zero(n, n);
    }
    const double cp = model.preference.noise;
    for (const auto& [w, l] : data.preferences) {
        const auto iw = static_cast<Eigen::Index>(w);
        const auto il = static_cast<Eigen::Index>(l);
        const TermDerivatives t = preference_term((f[iw] - f[il]) / cp, model.link);
        check_finite(t.log_p);
        out.value -= t.log_p;
        if constexpr (kGradient) {
            out.gradient[iw] -= t.d1 / cp;
            out.gradient[il] += t.d1 / cp;
        }
        if constexpr (kHessian) {
            const double h = -t.d2 / (cp * cp);
            out.hessian(iw, iw) += h;
            out.hessian(il, il) += h;
            out.hessian(iw, il) -= h;
            out.hessian(il, iw) -= h;
        }
    }
    for (const auto& [pos, y] : data.ordinals) {
        check_label(y, model.ordinal);
        const auto i = static_cast<Eigen::Index>(pos);
        const TermDerivatives t = ordinal_term(f[i], y, model.ordinal, model.link);
        check_finite(t.log_p);
        out.value -= t.log_p;
        if constexpr (kGradient) {
            out.gradient[i] -= t.d1;
        }
        if constexpr (kHessian) {
            out.hessian(i, i) -= t.d2;
        }
    }
    return out;
}

}  // namespace

double neg_log_likelihood(const LocalFeedback& data, const Eigen::VectorXd& f, const LikelihoodModel& model) {
    return evaluate<false, false>(data, f, model).value;
}

Eigen::VectorXd neg_log_likelihood_gradient(const LocalFeedback& data, const Eigen::VectorXd& f,
                                            const LikelihoodModel& model) {
    return evaluate<true, false>(data, f, model).gradient;
}

Eigen::MatrixXd neg_log_likelihood_hessian(const LocalFeedback& data, const Eigen::VectorXd& f,
                                           const LikelihoodModel& model) {
    return evaluate<false, true>(data, f, model).hessian;
}

LikelihoodTerms neg_log_likelihood_terms(const LocalFeedback& data, const Eigen::VectorXd& f,
                                         const LikelihoodModel& model) {
    return evaluate<true, true>(data, f, model);
}

}  // namespace roial
