#ifndef ROIAL_CONFIG_HPP
#define ROIAL_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "roial/action_space.hpp"
#include "roial/errors.hpp"
#include "roial/kernel.hpp"
#include "roial/likelihoods.hpp"

namespace roial {

enum class TruthFunction { kGaussianProcess, kHartmann3 };

/// Ground truth used by simulated users.
struct SimulationConfig {
    TruthFunction function = TruthFunction::kGaussianProcess;
    /// Kernel for sampled truths; defaults to the model kernel when absent.
    std::optional<KernelConfig> kernel;
    double ordinal_noise = 0.1;      // c~_o, 0 = noiseless
    double preference_noise = 0.02;  // c~_p, 0 = noiseless

    bool operator==(const SimulationConfig&) const = default;
};

struct ServiceConfig {
    std::string bind = "127.0.0.1";
    int port = 8080;
    bool show_validation_banner = false;

    bool operator==(const ServiceConfig&) const = default;
};

/// Every fixed hyperparameter of an experiment.
struct ExperimentConfig {
    std::string name = "experiment";
    std::vector<DimensionSpec> dimensions;
    KernelConfig kernel;
    std::vector<std::string> category_names;
    std::vector<double> thresholds;
    double ordinal_noise = 0.1;     // c_o
    double preference_noise = 0.1;  // c_p
    LinkKind link = LinkKind::kSigmoid;

    double lambda = std::numeric_limits<double>::infinity();
    /// 0 means "every action".
    std::size_t subset_size = 500;
    std::size_t posterior_samples = 1000;

    std::size_t training_trials = 30;
    std::size_t validation_trials = 10;
    std::size_t validation_per_category = 2;
    std::size_t grid_refresh_every = 10;

    std::uint64_t seed = 1;
    SimulationConfig simulation;
    ServiceConfig service;

    [[nodiscard]] int num_categories() const { return static_cast<int>(category_names.size()); }
    [[nodiscard]] ActionSpace action_space() const { return ActionSpace(dimensions); }
    [[nodiscard]] LikelihoodModel likelihood_model() const;
    [[nodiscard]] KernelConfig truth_kernel() const { return simulation.kernel.value_or(kernel); }

    bool operator==(const ExperimentConfig&) const = default;
};

/// Checks every invariant; returns all violations (empty when valid).
std::vector<ConfigViolation> validate(const ExperimentConfig& config);

/// Parses and validates. Throws ConfigError listing every violation, with
/// dotted field paths such as "ordinal.thresholds".
ExperimentConfig parse_config(const nlohmann::json& doc);
/// Throws ConfigError for unreadable files or malformed JSON as well.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Resolves a config reference: an existing file path, or a bare name looked
/// up as <dir>/<name>.json in $ROIAL_CONFIG_DIR and the built-in config
/// directory. Throws ConfigError if nothing matches.
std::filesystem::path resolve_config(const std::string& reference);
/// Directories searched by resolve_config(), in order.
std::vector<std::filesystem::path> config_search_path();

nlohmann::json to_json(const ExperimentConfig& config);
/// SHA-256 (hex) of the canonical JSON form.
std::string config_hash(const ExperimentConfig& config);

std::string sha256_hex(const std::string& data);

}  // namespace roial

#endif  // ROIAL_CONFIG_HPP
