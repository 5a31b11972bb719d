#include "roial/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "roial/rng.hpp"

namespace roial {

std::vector<double> permutation_importance(const Eigen::VectorXd& grid_means, const ActionSpace& space,
                                           std::uint64_t seed, std::size_t repeats) {
    const std::size_t n = space.size();
    if (static_cast<std::size_t>(grid_means.size()) != n) {
        throw std::invalid_argument("permutation_importance: means do not cover the grid");
    }
    std::vector<std::vector<std::size_t>> bins(n);
    for (std::size_t k = 0; k < n; ++k) {
        bins[k] = space.bin_coords(k);
    }
    std::vector<double> scores(space.num_dims(), 0.0);
    if (repeats == 0) {
        return scores;
    }
    std::vector<std::size_t> perm(n);
    for (std::size_t d = 0; d < space.num_dims(); ++d) {
        for (std::size_t rep = 0; rep < repeats; ++rep) {
            Rng rng = make_stream(seed, Stream::kImportance, d * repeats + rep);
            std::iota(perm.begin(), perm.end(), std::size_t{0});
            std::shuffle(perm.begin(), perm.end(), rng);
            double total = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                std::vector<std::size_t> moved = bins[k];
                moved[d] = bins[perm[k]][d];
                const ActionIndex j = space.index_of_bins(moved);
                total += std::abs(grid_means[static_cast<Eigen::Index>(j)] - grid_means[static_cast<Eigen::Index>(k)]);
            }
            scores[d] += total / static_cast<double>(n);
        }
        scores[d] /= static_cast<double>(repeats);
    }
    return scores;
}

Heatmap pairwise_heatmap(const Eigen::VectorXd& grid_means, const std::vector<bool>& roi, const ActionSpace& space,
                         std::size_t d1, std::size_t d2) {
    if (d1 == d2 || d1 >= space.num_dims() || d2 >= space.num_dims()) {
        throw std::invalid_argument("pairwise_heatmap: need two distinct valid dimensions");
    }
    const std::size_t n = space.size();
    if (static_cast<std::size_t>(grid_means.size()) != n || roi.size() != n) {
        throw std::invalid_argument("pairwise_heatmap: inputs do not cover the grid");
    }
    const auto rows = static_cast<Eigen::Index>(space.dim(d1).bins);
    const auto cols = static_cast<Eigen::Index>(space.dim(d2).bins);
    Heatmap h;
    h.dim_x = d1;
    h.dim_y = d2;
    h.values = Eigen::MatrixXd::Zero(rows, cols);
    h.roi_fraction = Eigen::MatrixXd::Zero(rows, cols);
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(rows, cols);
    for (std::size_t k = 0; k < n; ++k) {
        const auto b = space.bin_coords(k);
        const auto i = static_cast<Eigen::Index>(b[d1]);
        const auto j = static_cast<Eigen::Index>(b[d2]);
        h.values(i, j) += grid_means[static_cast<Eigen::Index>(k)];
        h.roi_fraction(i, j) += roi[k] ? 1.0 : 0.0;
        counts(i, j) += 1.0;
    }
    h.values = h.values.cwiseQuotient(counts);
    h.roi_fraction = h.roi_fraction.cwiseQuotient(counts);
    const double lo = h.values.minCoeff();
    const double span = h.values.maxCoeff() - lo;
    if (span > 0.0) {
        h.values = (h.values.array() - lo) / span;
    } else {
        h.values.setConstant(0.5);
    }
    return h;
}

}  // namespace roial
