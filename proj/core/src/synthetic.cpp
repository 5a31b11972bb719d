#include "roial/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "roial/errors.hpp"

namespace roial {

namespace {

constexpr double kAlpha[4] = {1.0, 1.2, 3.0, 3.2};
constexpr double kA[4][3] = {{3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}, {3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}};
constexpr double kP[4][3] = {{0.3689, 0.1170, 0.2673},
                             {0.4699, 0.4387, 0.7470},
                             {0.1091, 0.8732, 0.5547},
                             {0.0381, 0.5743, 0.8828}};

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    if (eig.info() != Eigen::Success) {
        throw NumericalError("eigendecomposition of kernel factor failed");
    }
    const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

double hartmann3(std::span<const double> x) {
    if (x.size() != 3) {
        throw std::domain_error("hartmann3 takes a 3-vector");
    }
    for (double v : x) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::domain_error("hartmann3 input outside [0,1]^3");
        }
    }
    double sum = 0.0;
    for (int i = 0; i < 4; ++i) {
        double inner = 0.0;
        for (int j = 0; j < 3; ++j) {
            const double d = x[static_cast<std::size_t>(j)] - kP[i][j];
            inner += kA[i][j] * d * d;
        }
        sum += kAlpha[i] * std::exp(-inner);
    }
    return -sum;
}

OrdinalLabel true_category(double f, std::span<const double> thresholds) {
    return 1 + static_cast<OrdinalLabel>(std::upper_bound(thresholds.begin(), thresholds.end(), f) - thresholds.begin());
}

std::vector<double> equal_mass_thresholds(const Eigen::VectorXd& f, int num_categories) {
    if (num_categories < 1) {
        throw std::invalid_argument("need at least one category");
    }
    const auto n = static_cast<std::size_t>(f.size());
    if (n < static_cast<std::size_t>(num_categories)) {
        throw std::invalid_argument("fewer actions than categories");
    }
    std::vector<double> sorted(f.data(), f.data() + n);
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> out;
    for (int j = 1; j < num_categories; ++j) {
        const std::size_t rank = static_cast<std::size_t>(j) * n / static_cast<std::size_t>(num_categories);
        out.push_back(0.5 * (sorted[rank - 1] + sorted[rank]));
    }
    for (std::size_t j = 1; j < out.size(); ++j) {
        if (!(out[j] > out[j - 1])) {
            throw std::invalid_argument("utility has too many ties for distinct thresholds");
        }
    }
    return out;
}

SyntheticTruth make_truth(Eigen::VectorXd utility, int num_categories, double ordinal_noise,
                          double preference_noise) {
    SyntheticTruth t;
    t.thresholds = equal_mass_thresholds(utility, num_categories);
    t.utility = std::move(utility);
    t.ordinal_noise = ordinal_noise;
    t.preference_noise = preference_noise;
    t.categories.resize(t.size());
    t.roi.resize(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
        t.categories[k] = true_category(t.utility[static_cast<Eigen::Index>(k)], t.thresholds);
        t.roi[k] = t.categories[k] != 1;
    }
    return t;
}

Eigen::VectorXd sample_gp_utility(const ActionSpace& space, const KernelConfig& kernel, Rng& rng) {
    const SquaredExponentialKernel k(space, kernel);
    const auto n = static_cast<Eigen::Index>(space.size());
    Eigen::VectorXd f(n);
    std::normal_distribution<double> normal;
    for (Eigen::Index i = 0; i < n; ++i) {
        f[i] = normal(rng);
    }
    // Row-major grid: viewing f as a tensor, apply each factor root along its mode.
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    std::size_t outer = 1;
    for (std::size_t d = 0; d < space.num_dims(); ++d) {
        const std::size_t bins = space.dim(d).bins;
        const std::size_t inner = space.size() / (outer * bins);
        Eigen::MatrixXd factor = k.dimension_factor(d);
        factor.diagonal().array() += kernel.jitter;
        const Eigen::MatrixXd root = psd_sqrt(factor);
        for (std::size_t o = 0; o < outer; ++o) {
            Eigen::Map<RowMajor> block(f.data() + o * bins * inner, static_cast<Eigen::Index>(bins),
                                       static_cast<Eigen::Index>(inner));
            block = (root * block).eval();
        }
        outer *= bins;
    }
    return f * std::sqrt(kernel.signal_variance);
}

SyntheticTruth sample_synthetic(const ActionSpace& space, const KernelConfig& kernel, int num_categories,
                                double ordinal_noise, double preference_noise, std::uint64_t seed) {
    Rng rng = make_stream(seed, Stream::kTruth);
    return make_truth(sample_gp_utility(space, kernel, rng), num_categories, ordinal_noise, preference_noise);
}

SyntheticTruth hartmann_truth(const ActionSpace& space, int num_categories, double ordinal_noise,
                              double preference_noise) {
    if (space.num_dims() != 3) {
        throw std::invalid_argument("hartmann truth needs a 3-D action space");
    }
    const auto n = static_cast<Eigen::Index>(space.size());
    Eigen::VectorXd f(n);
    double x[3];
    for (Eigen::Index k = 0; k < n; ++k) {
        for (std::size_t d = 0; d < 3; ++d) {
            x[d] = space.normalized(static_cast<ActionIndex>(k), d);
        }
        f[k] = -hartmann3(x);
    }
    const double lo = f.minCoeff();
    const double span = f.maxCoeff() - lo;
    if (span > 0.0) {
        f = (f.array() - lo) / span;
    } else {
        f.setZero();
    }
    return make_truth(std::move(f), num_categories, ordinal_noise, preference_noise);
}

SimulatedResponse simulated_feedback(const SyntheticTruth& truth, ActionIndex current,
                                     std::optional<ActionIndex> previous, Rng& rng, const Link& g) {
    if (current >= truth.size() || (previous && *previous >= truth.size())) {
        throw std::out_of_range("simulated_feedback: action index out of range");
    }
    const double fc = truth.utility[static_cast<Eigen::Index>(current)];
    SimulatedResponse out;
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    if (truth.ordinal_noise == 0.0) {
        out.label = truth.categories[current];
    } else {
        const OrdinalScale scale(truth.thresholds, truth.ordinal_noise);
        std::vector<double> probs(static_cast<std::size_t>(scale.num_categories()));
        ordinal_probs(fc, scale, g, probs);
        const double u = uniform(rng);
        double cumulative = 0.0;
        out.label = scale.num_categories();
        for (std::size_t y = 0; y < probs.size(); ++y) {
            cumulative += probs[y];
            if (u < cumulative) {
                out.label = static_cast<OrdinalLabel>(y + 1);
                break;
            }
        }
    }
    if (!previous) {
        return out;
    }
    const double fp = truth.utility[static_cast<Eigen::Index>(*previous)];
    if (truth.preference_noise == 0.0) {
        if (fc > fp) {
            out.preference = PreferenceAnswer::kCurrent;
        } else if (fp > fc) {
            out.preference = PreferenceAnswer::kPrevious;
        }
        return out;
    }
    const double p_current = g((fc - fp) / truth.preference_noise);
    out.preference = uniform(rng) < p_current ? PreferenceAnswer::kCurrent : PreferenceAnswer::kPrevious;
    return out;
}

}  // namespace roial
