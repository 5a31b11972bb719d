#include "roial/study.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "roial/export.hpp"
#include "roial/metrics.hpp"
#include "roial/session.hpp"

namespace roial {

using nlohmann::json;

std::string to_string(StudyKind kind) {
    switch (kind) {
        case StudyKind::kSubset:
            return "subset";
        case StudyKind::kLambda:
            return "lambda";
        case StudyKind::kNoise:
            return "noise";
    }
    return "unknown";
}

StudyKind parse_study_kind(const std::string& text) {
    if (text == "subset") {
        return StudyKind::kSubset;
    }
    if (text == "lambda") {
        return StudyKind::kLambda;
    }
    if (text == "noise") {
        return StudyKind::kNoise;
    }
    throw std::invalid_argument("unknown study \"" + text + "\" (expected subset, lambda or noise)");
}

std::vector<StudyVariant> default_variants(StudyKind kind, const ExperimentConfig& base) {
    std::vector<StudyVariant> out;
    switch (kind) {
        case StudyKind::kSubset:
            for (std::size_t m : {std::size_t{5}, std::size_t{50}, std::size_t{500}, std::size_t{0}}) {
                StudyVariant v{m == 0 ? "M=all" : "M=" + std::to_string(m), base};
                v.config.subset_size = m;
                out.push_back(std::move(v));
            }
            break;
        case StudyKind::kLambda:
            for (double lambda : {-0.45, 0.0, 0.45, std::numeric_limits<double>::infinity()}) {
                StudyVariant v{std::isinf(lambda) ? "lambda=inf" : "lambda=" + format_double(lambda), base};
                v.config.lambda = lambda;
                out.push_back(std::move(v));
            }
            break;
        case StudyKind::kNoise:
            for (auto [co, cp] : {std::pair{0.1, 0.02}, std::pair{0.2, 0.04}, std::pair{0.3, 0.06}}) {
                StudyVariant v{"co=" + format_double(co) + ",cp=" + format_double(cp), base};
                v.config.simulation.ordinal_noise = co;
                v.config.simulation.preference_noise = cp;
                out.push_back(std::move(v));
            }
            break;
    }
    return out;
}

StudySpec make_study(StudyKind kind, const ExperimentConfig& base, std::uint64_t seed) {
    StudySpec spec;
    spec.kind = kind;
    spec.base = base;
    spec.variants = default_variants(kind, base);
    spec.iterations = kind == StudyKind::kLambda ? 240 : 80;
    spec.num_functions = kind == StudyKind::kLambda ? 20 : (kind == StudyKind::kNoise ? 20 : 10);
    spec.checkpoints = {spec.iterations};
    spec.seed = seed;
    return spec;
}

const RunResult& StudyResult::run(std::size_t function, std::size_t variant) const {
    return runs.at(function * spec.variants.size() + variant);
}

double StudyResult::mean_at(std::size_t variant, const std::string& metric, std::size_t t) const {
    double sum = 0.0;
    for (std::size_t f = 0; f < spec.num_functions; ++f) {
        sum += run(f, variant).curves.at(metric).at(t - 1);
    }
    return sum / static_cast<double>(spec.num_functions);
}

SyntheticTruth simulation_truth(const ExperimentConfig& config, std::uint64_t seed) {
    const ActionSpace space = config.action_space();
    const SimulationConfig& sim = config.simulation;
    if (sim.function == TruthFunction::kHartmann3) {
        return hartmann_truth(space, config.num_categories(), sim.ordinal_noise, sim.preference_noise);
    }
    return sample_synthetic(space, config.truth_kernel(), config.num_categories(), sim.ordinal_noise,
                            sim.preference_noise, seed);
}

void run_simulated_user(Session& session, const SyntheticTruth& truth, std::uint64_t user_seed,
                        std::size_t max_trials, const std::function<void(const Session&)>& after_trial) {
    for (std::size_t n = 0; n < max_trials && !session.finished(); ++n) {
        const Query q = session.query();
        Rng rng = make_stream(user_seed, Stream::kSimulatedUser, q.trial);
        const SimulatedResponse resp = simulated_feedback(truth, q.action, q.previous, rng, session.model().link);
        session.submit(resp.label, resp.preference);
        if (session.grid_refresh_due()) {
            session.refresh_grid();
        }
        if (after_trial) {
            after_trial(session);
        }
    }
}

SyntheticTruth study_truth(const StudySpec& spec, std::size_t function) {
    return simulation_truth(spec.base, derive_seed(spec.seed, function));
}

RunResult run_simulation(const StudySpec& spec, std::size_t function, std::size_t variant) {
    ExperimentConfig cfg = spec.variants.at(variant).config;
    cfg.training_trials = spec.iterations;
    cfg.validation_trials = 0;
    cfg.seed = derive_seed(spec.seed, function, 1);

    SyntheticTruth truth = study_truth(spec, function);
    truth.ordinal_noise = cfg.simulation.ordinal_noise;
    truth.preference_noise = cfg.simulation.preference_noise;

    Session session(cfg);
    const std::uint64_t function_seed = derive_seed(spec.seed, function);
    Rng eval_rng = make_stream(function_seed, Stream::kEvaluation);
    std::uniform_int_distribution<ActionIndex> uniform(0, truth.size() - 1);
    std::vector<ActionIndex> eval(spec.eval_points);
    for (auto& a : eval) {
        a = uniform(eval_rng);
    }
    std::vector<ActionIndex> all(truth.size());
    for (std::size_t k = 0; k < all.size(); ++k) {
        all[k] = k;
    }

    RunResult result;
    result.function = function;
    result.variant = variant;
    auto& pref = result.curves["preference_error"];
    auto& ord = result.curves["ordinal_error"];
    auto& roi_err = result.curves["roi_error"];
    auto& within = result.curves["within_one"];
    auto& visits = result.curves["roa_visits"];
    auto& gain = result.curves["info_gain"];
    auto& roi_size = result.curves["roi_size"];

    double visit_count = 0.0;
    for (std::size_t t = 1; t <= spec.iterations; ++t) {
        const Query q = session.query();
        Rng user_rng = make_stream(function_seed, Stream::kSimulatedUser, t);
        const SimulatedResponse resp = simulated_feedback(truth, q.action, q.previous, user_rng, session.model().link);
        visit_count += truth.roi[q.action] ? 0.0 : 1.0;
        session.submit(resp.label, resp.preference);

        const PosteriorState& post = *session.posterior();
        const MetricsRecord m =
            error_metrics(predict_mean(post, eval), eval, truth, session.model().ordinal, session.model().link);
        pref.push_back(m.preference_error);
        ord.push_back(m.ordinal_error);
        roi_err.push_back(m.roi_error);
        within.push_back(m.within_one);
        visits.push_back(visit_count);
        const auto& step = session.last_step();
        const bool selected = step && t < spec.iterations;
        gain.push_back(selected ? step->selection.info_gain : 0.0);
        roi_size.push_back(selected ? static_cast<double>(step->selection.roi_size) : 0.0);

        if (std::find(spec.checkpoints.begin(), spec.checkpoints.end(), t) != spec.checkpoints.end()) {
            const MetricsRecord g =
                error_metrics(predict_mean(post, all), all, truth, session.model().ordinal, session.model().link);
            result.checkpoints.push_back({t, g.confusion, g.within_one, g.ordinal_error});
        }
    }
    return result;
}

namespace {

json spec_json(const StudySpec& spec) {
    json variants = json::array();
    for (const auto& v : spec.variants) {
        variants.push_back({{"name", v.name}, {"config", to_json(v.config)}});
    }
    return json{{"study", to_string(spec.kind)},     {"base", to_json(spec.base)},
                {"variants", variants},              {"functions", spec.num_functions},
                {"iterations", spec.iterations},     {"eval_points", spec.eval_points},
                {"checkpoints", spec.checkpoints},   {"seed", spec.seed}};
}

}  // namespace

StudyResult run_study(const StudySpec& spec, const StudyProgress& progress) {
    if (spec.variants.empty() || spec.num_functions == 0 || spec.iterations == 0) {
        throw std::invalid_argument("study needs at least one variant, function and iteration");
    }
    StudyResult result;
    result.spec = spec;
    result.config_hash = sha256_hex(spec_json(spec).dump());
    const std::size_t total = spec.num_functions * spec.variants.size();
    result.runs.resize(total);

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;
    std::exception_ptr failure;
    auto worker = [&] {
        for (std::size_t i = next++; i < total; i = next++) {
            try {
                result.runs[i] = run_simulation(spec, i / spec.variants.size(), i % spec.variants.size());
            } catch (...) {
                std::lock_guard lock(progress_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next = total;
                return;
            }
            const std::size_t finished = ++done;
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress(finished, total);
            }
        }
    };
    const std::size_t jobs = std::max<std::size_t>(1, std::min(spec.jobs, total));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (std::size_t j = 0; j < jobs; ++j) {
            threads.emplace_back(worker);
        }
        for (auto& t : threads) {
            t.join();
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return result;
}

std::string tidy_csv(const StudyResult& result) {
    const std::string study = to_string(result.spec.kind);
    std::string out = "study,run,function,variant,iteration,metric,value\n";
    for (std::size_t i = 0; i < result.runs.size(); ++i) {
        const RunResult& run = result.runs[i];
        const std::string prefix = study + ',' + std::to_string(i) + ',' + std::to_string(run.function) + ','
                                   + result.spec.variants.at(run.variant).name + ',';
        for (const auto& [metric, values] : run.curves) {
            for (std::size_t t = 0; t < values.size(); ++t) {
                out += prefix + std::to_string(t + 1) + ',' + metric + ',' + format_double(values[t]) + '\n';
            }
        }
        for (const CheckpointScore& c : run.checkpoints) {
            const std::string row = prefix + std::to_string(c.iteration) + ',';
            out += row + "grid_within_one," + format_double(c.within_one) + '\n';
            out += row + "grid_ordinal_error," + format_double(c.ordinal_error) + '\n';
            for (Eigen::Index y = 0; y < c.confusion.rows(); ++y) {
                for (Eigen::Index p = 0; p < c.confusion.cols(); ++p) {
                    out += row + "confusion_true" + std::to_string(y + 1) + "_pred" + std::to_string(p + 1) + ','
                           + std::to_string(c.confusion(y, p)) + '\n';
                }
            }
        }
    }
    return out;
}

json summary_json(const StudyResult& result) {
    const StudySpec& spec = result.spec;
    json variants = json::array();
    for (std::size_t v = 0; v < spec.variants.size(); ++v) {
        json metrics = json::object();
        for (const auto& [metric, _] : result.run(0, v).curves) {
            std::vector<double> mean(spec.iterations, 0.0);
            std::vector<double> stddev(spec.iterations, 0.0);
            for (std::size_t t = 0; t < spec.iterations; ++t) {
                double s = 0.0;
                double s2 = 0.0;
                for (std::size_t f = 0; f < spec.num_functions; ++f) {
                    const double x = result.run(f, v).curves.at(metric)[t];
                    s += x;
                    s2 += x * x;
                }
                const double n = static_cast<double>(spec.num_functions);
                mean[t] = s / n;
                stddev[t] = std::sqrt(std::max(0.0, s2 / n - mean[t] * mean[t]));
            }
            metrics[metric] = {{"mean", mean}, {"std", stddev}};
        }
        json checkpoints = json::array();
        for (std::size_t c = 0; c < spec.checkpoints.size(); ++c) {
            Eigen::MatrixXi sum;
            double within = 0.0;
            for (std::size_t f = 0; f < spec.num_functions; ++f) {
                const auto& score = result.run(f, v).checkpoints.at(c);
                sum = f == 0 ? score.confusion : Eigen::MatrixXi(sum + score.confusion);
                within += score.within_one;
            }
            json rows = json::array();
            for (Eigen::Index y = 0; y < sum.rows(); ++y) {
                std::vector<int> row;
                for (Eigen::Index p = 0; p < sum.cols(); ++p) {
                    row.push_back(sum(y, p));
                }
                rows.push_back(row);
            }
            checkpoints.push_back({{"iteration", spec.checkpoints[c]},
                                   {"confusion", rows},
                                   {"within_one_mean", within / static_cast<double>(spec.num_functions)}});
        }
        variants.push_back({{"name", spec.variants[v].name}, {"metrics", metrics}, {"checkpoints", checkpoints}});
    }
    return json{{"study", to_string(spec.kind)},
                {"seed", spec.seed},
                {"config_hash", result.config_hash},
                {"functions", spec.num_functions},
                {"iterations", spec.iterations},
                {"variants", variants}};
}

std::string study_file_stem(const StudyResult& result) {
    return to_string(result.spec.kind) + "_seed" + std::to_string(result.spec.seed) + "_"
           + result.config_hash.substr(0, 12);
}

std::vector<std::filesystem::path> write_study(const StudyResult& result, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::string stem = study_file_stem(result);
    const auto csv_path = dir / (stem + ".csv");
    const auto json_path = dir / (stem + ".json");
    std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
    csv << tidy_csv(result);
    std::ofstream js(json_path, std::ios::binary | std::ios::trunc);
    js << summary_json(result).dump(1) << '\n';
    if (!csv || !js) {
        throw std::runtime_error("cannot write study results into " + dir.string());
    }
    return {csv_path, json_path};
}

}  // namespace roial
