#ifndef ROIAL_ACTION_SPACE_HPP
#define ROIAL_ACTION_SPACE_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace roial {

using ActionIndex = std::size_t;

struct DimensionSpec {
    std::string name;
    double min = 0.0;
    double max = 1.0;
    std::size_t bins = 1;

    /// Value of the k-th grid point along this dimension, endpoints inclusive.
    [[nodiscard]] double value(std::size_t k) const;
    /// Grid spacing; zero for single-bin dimensions.
    [[nodiscard]] double spacing() const;

    bool operator==(const DimensionSpec&) const = default;
};

/// Finite grid of actions enumerated in row-major order: the first listed
/// dimension varies slowest, the last fastest.
///
/// Immutable after construction and safe to share read-only across threads.
class ActionSpace {
public:
    /// Throws std::invalid_argument on an empty dimension list, zero bins,
    /// min > max, or min == max with more than one bin.
    explicit ActionSpace(std::vector<DimensionSpec> dims);

    [[nodiscard]] std::size_t size() const { return size_; }
    [[nodiscard]] std::size_t num_dims() const { return dims_.size(); }
    [[nodiscard]] const std::vector<DimensionSpec>& dims() const { return dims_; }
    [[nodiscard]] const DimensionSpec& dim(std::size_t d) const { return dims_.at(d); }

    /// Per-dimension bin positions of action k.
    [[nodiscard]] std::vector<std::size_t> bin_coords(ActionIndex k) const;
    [[nodiscard]] ActionIndex index_of_bins(std::span<const std::size_t> bins) const;

    [[nodiscard]] std::vector<double> coordinates(ActionIndex k) const;
    /// Inverse of coordinates(); each value must lie on the grid (to 1e-9 of a bin).
    [[nodiscard]] ActionIndex index_of(std::span<const double> coords) const;

    /// Coordinate in [0, 1] along dimension d (0 for single-bin dimensions).
    [[nodiscard]] double normalized(ActionIndex k, std::size_t d) const;

    /// Position of dimension `name`, or throws std::out_of_range.
    [[nodiscard]] std::size_t dim_index(const std::string& name) const;

    bool operator==(const ActionSpace& other) const { return dims_ == other.dims_; }

private:
    void check_index(ActionIndex k) const;

    std::vector<DimensionSpec> dims_;
    std::vector<std::size_t> strides_;
    std::size_t size_ = 0;
};

inline ActionSpace build_grid(std::vector<DimensionSpec> dims) { return ActionSpace(std::move(dims)); }

inline std::vector<double> index_to_action(const ActionSpace& space, ActionIndex k) {
    return space.coordinates(k);
}

inline ActionIndex action_to_index(const ActionSpace& space, std::span<const double> coords) {
    return space.index_of(coords);
}

}  // namespace roial

#endif  // ROIAL_ACTION_SPACE_HPP
