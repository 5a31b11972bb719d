#include "roial/feedback.hpp"

#include <algorithm>

namespace roial {

std::vector<ActionIndex> FeedbackDataset::touched_actions() const {
    std::vector<ActionIndex> out;
    out.reserve(2 * preferences.size() + ordinals.size());
    for (const auto& p : preferences) {
        out.push_back(p.winner);
        out.push_back(p.loser);
    }
    for (const auto& o : ordinals) {
        out.push_back(o.action);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace roial
