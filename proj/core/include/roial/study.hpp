#ifndef ROIAL_STUDY_HPP
#define ROIAL_STUDY_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "roial/config.hpp"
#include "roial/session.hpp"
#include "roial/synthetic.hpp"

namespace roial {

enum class StudyKind { kSubset, kLambda, kNoise };

std::string to_string(StudyKind kind);
/// "subset", "lambda" or "noise"; throws std::invalid_argument otherwise.
StudyKind parse_study_kind(const std::string& text);

/// One arm of a study: the base config with some fields overridden.
struct StudyVariant {
    std::string name;
    ExperimentConfig config;
};

struct StudySpec {
    StudyKind kind = StudyKind::kSubset;
    ExperimentConfig base;
    std::vector<StudyVariant> variants;
    std::size_t num_functions = 10;
    std::size_t iterations = 80;
    /// Random evaluation actions per function; consecutive ones form the
    /// preference-test pairs.
    std::size_t eval_points = 1000;
    /// Iterations at which full-grid predictions are scored.
    std::vector<std::size_t> checkpoints;
    std::uint64_t seed = 1;
    /// Worker threads; results do not depend on this.
    std::size_t jobs = 1;
};

/// Default arms: subset M in {5, 50, 500, all}; lambda in {-0.45, 0, 0.45,
/// inf}; noise (c~_o, c~_p) in {(0.1, 0.02), (0.2, 0.04), (0.3, 0.06)}.
std::vector<StudyVariant> default_variants(StudyKind kind, const ExperimentConfig& base);

/// Spec with default variants, iteration count 80 (subset, noise) or 240
/// (lambda) and a checkpoint at the last iteration.
StudySpec make_study(StudyKind kind, const ExperimentConfig& base, std::uint64_t seed);

/// Full-grid scores at one checkpoint iteration.
struct CheckpointScore {
    std::size_t iteration = 0;
    Eigen::MatrixXi confusion;  // rows = true label, columns = predicted
    double within_one = 0.0;
    double ordinal_error = 0.0;
};

struct RunResult {
    std::size_t function = 0;
    std::size_t variant = 0;
    /// Per-iteration curves, index t-1 holds iteration t.
    std::map<std::string, std::vector<double>> curves;
    std::vector<CheckpointScore> checkpoints;
};

struct StudyResult {
    StudySpec spec;
    std::vector<RunResult> runs;  // function-major, then variant
    std::string config_hash;

    [[nodiscard]] const RunResult& run(std::size_t function, std::size_t variant) const;
    /// Mean over functions of a curve value at iteration t (1-based).
    [[nodiscard]] double mean_at(std::size_t variant, const std::string& metric, std::size_t t) const;
};

/// Ground truth for a config's simulated user: a GP prior draw (seeded) or
/// the rescaled Hartmann3 function.
SyntheticTruth simulation_truth(const ExperimentConfig& config, std::uint64_t seed);

/// Answers the session's queries with a simulated user until it finishes or
/// `max_trials` trials were answered. The answer to trial t comes from
/// stream (user_seed, t), so a resumed session continues identically. Due
/// full-grid refreshes run synchronously; `after_trial` runs after each one.
void run_simulated_user(Session& session, const SyntheticTruth& truth, std::uint64_t user_seed,
                        std::size_t max_trials = std::numeric_limits<std::size_t>::max(),
                        const std::function<void(const Session&)>& after_trial = {});

/// Truth behind function `function` of a study (shared by every variant).
SyntheticTruth study_truth(const StudySpec& spec, std::size_t function);

/// Runs one simulated session of `iterations` training trials with a
/// simulated user and records per-iteration metrics.
RunResult run_simulation(const StudySpec& spec, std::size_t function, std::size_t variant);

using StudyProgress = std::function<void(std::size_t done, std::size_t total)>;
StudyResult run_study(const StudySpec& spec, const StudyProgress& progress = {});

/// Tidy rows: study,run,function,variant,iteration,metric,value.
std::string tidy_csv(const StudyResult& result);
/// Per-variant mean/std curves and summed checkpoint confusion matrices.
nlohmann::json summary_json(const StudyResult& result);
/// "<study>_seed<seed>_<first 12 hex of config hash>"
std::string study_file_stem(const StudyResult& result);
/// Writes <stem>.csv and <stem>.json into `dir`; returns both paths.
std::vector<std::filesystem::path> write_study(const StudyResult& result, const std::filesystem::path& dir);

}  // namespace roial

#endif  // ROIAL_STUDY_HPP
