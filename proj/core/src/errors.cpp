#include "roial/errors.hpp"

namespace roial {

namespace {

std::string join_violations(const std::vector<ConfigViolation>& violations) {
    std::string out = "invalid configuration:";
    for (const auto& v : violations) {
        out += "\n  " + (v.path.empty() ? std::string("<root>") : v.path) + ": " + v.message;
    }
    return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<ConfigViolation> violations)
    : std::runtime_error(join_violations(violations)), violations_(std::move(violations)) {}

}  // namespace roial
