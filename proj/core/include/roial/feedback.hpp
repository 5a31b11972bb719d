#ifndef ROIAL_FEEDBACK_HPP
#define ROIAL_FEEDBACK_HPP

#include <cstddef>
#include <vector>

#include "roial/action_space.hpp"

namespace roial {

/// Ordinal label in 1..r.
using OrdinalLabel = int;

/// Answer to "is the current action better than the previous one?".
enum class PreferenceAnswer { kCurrent, kPrevious, kSkip };

struct Preference {
    ActionIndex winner;
    ActionIndex loser;
    bool operator==(const Preference&) const = default;
};

struct OrdinalObservation {
    ActionIndex action;
    OrdinalLabel label;
    bool operator==(const OrdinalObservation&) const = default;
};

/// Accumulated pairwise preferences and ordinal labels.
struct FeedbackDataset {
    std::vector<Preference> preferences;
    std::vector<OrdinalObservation> ordinals;

    [[nodiscard]] bool empty() const { return preferences.empty() && ordinals.empty(); }
    /// Distinct actions referenced by any observation, ascending.
    [[nodiscard]] std::vector<ActionIndex> touched_actions() const;

    bool operator==(const FeedbackDataset&) const = default;
};

}  // namespace roial

#endif  // ROIAL_FEEDBACK_HPP
