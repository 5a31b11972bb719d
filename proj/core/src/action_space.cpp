#include "roial/action_space.hpp"

#include <cmath>
#include <stdexcept>

namespace roial {

double DimensionSpec::value(std::size_t k) const {
    if (bins <= 1) {
        return min;
    }
    if (k + 1 == bins) {
        return max;
    }
    return min + static_cast<double>(k) * spacing();
}

double DimensionSpec::spacing() const {
    return bins > 1 ? (max - min) / static_cast<double>(bins - 1) : 0.0;
}

ActionSpace::ActionSpace(std::vector<DimensionSpec> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) {
        throw std::invalid_argument("action space needs at least one dimension");
    }
    size_ = 1;
    for (const auto& d : dims_) {
        if (d.bins == 0) {
            throw std::invalid_argument("dimension '" + d.name + "': bins must be >= 1");
        }
        if (!std::isfinite(d.min) || !std::isfinite(d.max)) {
            throw std::invalid_argument("dimension '" + d.name + "': bounds must be finite");
        }
        if (d.min > d.max) {
            throw std::invalid_argument("dimension '" + d.name + "': min > max");
        }
        if (d.bins > 1 && d.min == d.max) {
            throw std::invalid_argument("dimension '" + d.name + "': min == max with more than one bin");
        }
        size_ *= d.bins;
    }
    strides_.assign(dims_.size(), 1);
    for (std::size_t d = dims_.size() - 1; d > 0; --d) {
        strides_[d - 1] = strides_[d] * dims_[d].bins;
    }
}

void ActionSpace::check_index(ActionIndex k) const {
    if (k >= size_) {
        throw std::out_of_range("action index " + std::to_string(k) + " outside [0, " + std::to_string(size_) + ")");
    }
}

std::vector<std::size_t> ActionSpace::bin_coords(ActionIndex k) const {
    check_index(k);
    std::vector<std::size_t> out(dims_.size());
    for (std::size_t d = 0; d < dims_.size(); ++d) {
        out[d] = (k / strides_[d]) % dims_[d].bins;
    }
    return out;
}

ActionIndex ActionSpace::index_of_bins(std::span<const std::size_t> bins) const {
    if (bins.size() != dims_.size()) {
        throw std::invalid_argument("bin vector has wrong dimension");
    }
    ActionIndex k = 0;
    for (std::size_t d = 0; d < dims_.size(); ++d) {
        if (bins[d] >= dims_[d].bins) {
            throw std::out_of_range("bin position out of range along '" + dims_[d].name + "'");
        }
        k += bins[d] * strides_[d];
    }
    return k;
}

std::vector<double> ActionSpace::coordinates(ActionIndex k) const {
    check_index(k);
    std::vector<double> out(dims_.size());
    for (std::size_t d = 0; d < dims_.size(); ++d) {
        out[d] = dims_[d].value((k / strides_[d]) % dims_[d].bins);
    }
    return out;
}

ActionIndex ActionSpace::index_of(std::span<const double> coords) const {
    if (coords.size() != dims_.size()) {
        throw std::invalid_argument("coordinate vector has wrong dimension");
    }
    std::vector<std::size_t> bins(dims_.size());
    for (std::size_t d = 0; d < dims_.size(); ++d) {
        const auto& dim = dims_[d];
        double pos = dim.bins > 1 ? (coords[d] - dim.min) / dim.spacing() : 0.0;
        double rounded = std::round(pos);
        if (std::abs(pos - rounded) > 1e-9 || rounded < 0.0 || rounded >= static_cast<double>(dim.bins)
            || (dim.bins == 1 && coords[d] != dim.min)) {
            throw std::out_of_range("coordinate off grid along '" + dim.name + "'");
        }
        bins[d] = static_cast<std::size_t>(rounded);
    }
    return index_of_bins(bins);
}

double ActionSpace::normalized(ActionIndex k, std::size_t d) const {
    const auto& dim = dims_[d];
    if (dim.bins <= 1) {
        return 0.0;
    }
    std::size_t b = (k / strides_[d]) % dim.bins;
    return static_cast<double>(b) / static_cast<double>(dim.bins - 1);
}

std::size_t ActionSpace::dim_index(const std::string& name) const {
    for (std::size_t d = 0; d < dims_.size(); ++d) {
        if (dims_[d].name == name) {
            return d;
        }
    }
    throw std::out_of_range("unknown dimension '" + name + "'");
}

}  // namespace roial
