#ifndef ROIAL_SYNTHETIC_HPP
#define ROIAL_SYNTHETIC_HPP

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "roial/action_space.hpp"
#include "roial/feedback.hpp"
#include "roial/kernel.hpp"
#include "roial/likelihoods.hpp"
#include "roial/rng.hpp"

namespace roial {

/// Standard 3-D Hartmann function on [0,1]^3 (minimum -3.86278).
/// Throws std::domain_error for inputs outside the unit cube.
double hartmann3(std::span<const double> x);

/// Ground truth behind a simulated user.
struct SyntheticTruth {
    Eigen::VectorXd utility;
    std::vector<double> thresholds;  // b~_1 < ... < b~_{r-1}
    double ordinal_noise = 0.0;      // c~_o, 0 = noiseless
    double preference_noise = 0.0;   // c~_p, 0 = noiseless
    std::vector<OrdinalLabel> categories;
    std::vector<bool> roi;  // category != 1

    [[nodiscard]] int num_categories() const { return static_cast<int>(thresholds.size()) + 1; }
    [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(utility.size()); }
};

/// 1 + number of thresholds <= f.
OrdinalLabel true_category(double f, std::span<const double> thresholds);

/// Thresholds splitting `f` into r groups of (near) equal size: b_j lies
/// midway between the sorted values at ranks floor(jA/r) - 1 and floor(jA/r).
std::vector<double> equal_mass_thresholds(const Eigen::VectorXd& f, int num_categories);

/// Wraps a utility vector with equal-mass thresholds and derived categories.
SyntheticTruth make_truth(Eigen::VectorXd utility, int num_categories, double ordinal_noise, double preference_noise);

/// One exact draw from the GP prior over the whole grid. The squared
/// exponential kernel factorizes over dimensions, so the draw is formed from
/// per-dimension matrix square roots without materializing the A x A matrix.
Eigen::VectorXd sample_gp_utility(const ActionSpace& space, const KernelConfig& kernel, Rng& rng);

SyntheticTruth sample_synthetic(const ActionSpace& space, const KernelConfig& kernel, int num_categories,
                                double ordinal_noise, double preference_noise, std::uint64_t seed);

/// Negated Hartmann3 rescaled to [0, 1] over the grid (higher is better).
/// Requires a 3-D space; each dimension's range is mapped onto [0, 1].
SyntheticTruth hartmann_truth(const ActionSpace& space, int num_categories, double ordinal_noise,
                              double preference_noise);

struct SimulatedResponse {
    OrdinalLabel label = 1;
    PreferenceAnswer preference = PreferenceAnswer::kSkip;
};

/// Noisy answer from the simulated user for the current action (and the
/// previous one, when present). Zero noise gives the true category and the
/// true ordering, with ties skipped.
SimulatedResponse simulated_feedback(const SyntheticTruth& truth, ActionIndex current,
                                     std::optional<ActionIndex> previous, Rng& rng, const Link& g = Link{});

}  // namespace roial

#endif  // ROIAL_SYNTHETIC_HPP
