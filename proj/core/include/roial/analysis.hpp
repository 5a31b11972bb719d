#ifndef ROIAL_ANALYSIS_HPP
#define ROIAL_ANALYSIS_HPP

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "roial/action_space.hpp"

namespace roial {

/// Permutation feature importance of a utility surface over the grid.
///
/// For each dimension d and repeat, the d-th bin of every action is replaced
/// by that of a uniformly permuted action and the mean absolute change of the
/// looked-up utility is recorded; scores are averaged over repeats.
/// Deterministic for a given seed.
std::vector<double> permutation_importance(const Eigen::VectorXd& grid_means, const ActionSpace& space,
                                           std::uint64_t seed, std::size_t repeats = 10);

/// Pairwise view of a grid surface for dimensions (d1, d2).
struct Heatmap {
    std::size_t dim_x = 0;  // rows
    std::size_t dim_y = 0;  // columns
    /// Means averaged over the remaining dimensions, min-max normalized to
    /// [0, 1]; every cell is 0.5 when the averaged surface is flat.
    Eigen::MatrixXd values;
    /// Fraction of the cell's actions inside the ROI mask.
    Eigen::MatrixXd roi_fraction;
};

/// Throws std::invalid_argument when d1 == d2 or either is out of range, or
/// when the vectors do not cover the grid.
Heatmap pairwise_heatmap(const Eigen::VectorXd& grid_means, const std::vector<bool>& roi, const ActionSpace& space,
                         std::size_t d1, std::size_t d2);

}  // namespace roial

#endif  // ROIAL_ANALYSIS_HPP
