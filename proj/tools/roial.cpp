// Command-line entry points: studies, headless sessions, the HTTP service and
// dataset export.

#include <csignal>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "roial/analysis.hpp"
#include "roial/config.hpp"
#include "roial/errors.hpp"
#include "roial/export.hpp"
#include "roial/rng.hpp"
#include "roial/service.hpp"
#include "roial/session.hpp"
#include "roial/snapshot.hpp"
#include "roial/study.hpp"

using nlohmann::json;

namespace {

void emit_error(const std::string& code, const std::string& message, json extra = json::object()) {
    json err = {{"code", code}, {"message", message}};
    for (auto& [k, v] : extra.items()) {
        err[k] = v;
    }
    std::cerr << json{{"error", err}}.dump() << std::endl;
}

roial::ExperimentConfig load(const std::string& ref, std::optional<std::uint64_t> seed) {
    auto cfg = roial::load_config(roial::resolve_config(ref));
    if (seed) {
        cfg.seed = *seed;
    }
    return cfg;
}

json matrix_json(const Eigen::MatrixXi& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(row);
    }
    return rows;
}

json session_summary(const roial::Session& s) {
    json actions = json::array();
    for (const auto& rec : s.transcript()) {
        actions.push_back(rec.action);
    }
    json out = {{"completed_trials", s.completed_trials()},
                {"phase", roial::to_string(s.phase())},
                {"actions", actions},
                {"preferences", s.dataset().preferences.size()}};
    if (auto confusion = s.validation_confusion()) {
        out["validation_confusion"] = matrix_json(*confusion);
    }
    if (const auto& grid = s.grid()) {
        const auto scores = roial::permutation_importance(grid->mean, s.space(), s.config().seed);
        json importance = json::object();
        for (std::size_t d = 0; d < scores.size(); ++d) {
            importance[s.space().dim(d).name] = scores[d];
        }
        out["feature_importance"] = importance;
        out["grid_trial"] = grid->trial;
    }
    return out;
}

struct StudyArgs {
    std::string kind;
    std::string config = "sim3d";
    std::string out = "results";
    std::optional<std::uint64_t> seed;
    std::size_t functions = 0;
    std::size_t trials = 0;
    std::size_t jobs = 1;
    std::size_t eval_points = 1000;
    bool quiet = false;
};

int run_study(const StudyArgs& a) {
    const auto base = load(a.config, std::nullopt);
    const auto kind = roial::parse_study_kind(a.kind);
    roial::StudySpec spec = roial::make_study(kind, base, a.seed.value_or(base.seed));
    if (a.functions > 0) {
        spec.num_functions = a.functions;
    }
    if (a.trials > 0) {
        spec.iterations = a.trials;
        spec.checkpoints = {a.trials};
    }
    spec.jobs = a.jobs;
    spec.eval_points = a.eval_points;
    auto progress = [&](std::size_t done, std::size_t total) {
        if (!a.quiet) {
            std::cerr << "run " << done << "/" << total << std::endl;
        }
    };
    const auto result = roial::run_study(spec, progress);
    const auto paths = roial::write_study(result, a.out);
    json written = json::array();
    for (const auto& p : paths) {
        written.push_back(p.string());
    }
    std::cout << json{{"study", a.kind}, {"files", written}}.dump() << std::endl;
    return 0;
}

struct SessionArgs {
    bool simulated = false;
    std::string config = "gait";
    std::optional<std::uint64_t> seed;
    std::size_t trials = 0;
    std::string out;
    std::string snapshot;
    std::string resume;
    std::size_t stop_after = 0;
};

int run_session(const SessionArgs& a) {
    std::optional<roial::Session> session;
    if (!a.resume.empty()) {
        session.emplace(roial::load_snapshot(a.resume));
    } else {
        auto cfg = load(a.config, a.seed);
        if (a.trials > 0) {
            cfg.training_trials = a.trials;
        }
        session.emplace(std::move(cfg));
    }
    roial::Session& s = *session;
    auto after_trial = [&](const roial::Session& current) {
        if (!a.snapshot.empty()) {
            roial::save_snapshot(current, a.snapshot);
        }
    };
    const std::size_t budget = a.stop_after > 0 ? a.stop_after : std::numeric_limits<std::size_t>::max();

    if (a.simulated) {
        const std::uint64_t seed = s.config().seed;
        const auto truth = roial::simulation_truth(s.config(), roial::derive_seed(seed, 1));
        roial::run_simulated_user(s, truth, roial::derive_seed(seed, 2), budget, after_trial);
    } else {
        // Interactive: one "label [current|previous|skip]" line per trial.
        std::size_t answered = 0;
        while (!s.finished() && answered < budget) {
            const auto& q = s.query();
            json prompt = {{"trial", q.trial}, {"phase", roial::to_string(q.phase)}, {"action", q.action},
                           {"coordinates", s.space().coordinates(q.action)},
                           {"preference_requested", q.preference_requested()}};
            std::cout << prompt.dump() << std::endl;
            std::string line;
            if (!std::getline(std::cin, line)) {
                break;
            }
            std::istringstream in(line);
            int label = 0;
            std::string pref = "skip";
            if (!(in >> label)) {
                emit_error("invalid_feedback", "expected \"<label> [current|previous|skip]\"");
                continue;
            }
            in >> pref;
            try {
                s.submit(label, roial::parse_preference(pref));
            } catch (const roial::FeedbackError& e) {
                emit_error("invalid_feedback", e.what());
                continue;
            }
            if (s.grid_refresh_due()) {
                s.refresh_grid();
            }
            after_trial(s);
            ++answered;
        }
    }
    if (!a.snapshot.empty()) {
        roial::save_snapshot(s, a.snapshot);
    }
    if (!a.out.empty()) {
        roial::write_export(roial::export_dataset(s), a.out);
    }
    std::cout << session_summary(s).dump() << std::endl;
    return 0;
}

struct ServeArgs {
    std::string config = "gait";
    std::optional<int> port;
    std::optional<std::string> bind;
    std::string static_dir;
    std::string snapshots;
};

roial::SessionService* g_service = nullptr;

extern "C" void on_signal(int) {
    if (g_service) {
        g_service->stop();
    }
}

int serve(const ServeArgs& a) {
    const auto cfg = load(a.config, std::nullopt);
    roial::ServiceOptions opts;
    opts.default_config = a.config;
    opts.bind = a.bind.value_or(cfg.service.bind);
    opts.port = a.port.value_or(cfg.service.port);
    if (!a.static_dir.empty()) {
        opts.static_dir = a.static_dir;
    }
    if (!a.snapshots.empty()) {
        opts.snapshot_dir = a.snapshots;
    }
    roial::SessionService service(opts);
    g_service = &service;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << json{{"listening", opts.bind + ":" + std::to_string(opts.port)}}.dump() << std::endl;
    service.listen();
    g_service = nullptr;
    return 0;
}

int export_snapshot(const std::string& snapshot, const std::string& out, const std::string& config) {
    std::optional<roial::ExperimentConfig> expected;
    if (!config.empty()) {
        expected = load(config, std::nullopt);
    }
    const auto session = roial::load_snapshot(snapshot, expected);
    const auto paths = roial::write_export(roial::export_dataset(session), out);
    json written = json::array();
    for (const auto& p : paths) {
        written.push_back(p.string());
    }
    std::cout << json{{"files", written}}.dump() << std::endl;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Region-of-interest active learning from preference and ordinal feedback"};
    app.require_subcommand(1);

    StudyArgs study;
    auto* cmd_study = app.add_subcommand("run-study", "Run a simulation study and write tidy CSV + JSON summary");
    cmd_study->add_option("--study", study.kind, "subset | lambda | noise")
        ->required()
        ->check(CLI::IsMember({"subset", "lambda", "noise"}));
    cmd_study->add_option("--config", study.config, "Config name or path")->capture_default_str();
    cmd_study->add_option("--out", study.out, "Output directory")->capture_default_str();
    cmd_study->add_option("--seed", study.seed, "Master seed (default: config seed)");
    cmd_study->add_option("--functions", study.functions, "Synthetic functions (default per study)");
    cmd_study->add_option("--trials", study.trials, "Iterations per run (default per study)");
    cmd_study->add_option("--jobs", study.jobs, "Worker threads")->capture_default_str();
    cmd_study->add_option("--eval-points", study.eval_points, "Evaluation actions per function")
        ->capture_default_str();
    cmd_study->add_flag("--quiet", study.quiet, "No progress on stderr");

    SessionArgs session;
    auto* cmd_session = app.add_subcommand("run-session", "Run a headless session (simulated or from stdin)");
    cmd_session->add_flag("--simulated", session.simulated, "Answer queries with a simulated user");
    cmd_session->add_option("--config", session.config, "Config name or path")->capture_default_str();
    cmd_session->add_option("--seed", session.seed, "Override the config seed");
    cmd_session->add_option("--trials", session.trials, "Override the number of training trials");
    cmd_session->add_option("--out", session.out, "Write the dataset export here");
    cmd_session->add_option("--snapshot", session.snapshot, "Save a snapshot here after every trial");
    cmd_session->add_option("--resume", session.resume, "Continue from a snapshot");
    cmd_session->add_option("--stop-after", session.stop_after, "Stop after this many trials");

    ServeArgs serve_args;
    auto* cmd_serve = app.add_subcommand("serve", "Start the HTTP session service");
    cmd_serve->add_option("--config", serve_args.config, "Default config for new sessions")->capture_default_str();
    cmd_serve->add_option("--port", serve_args.port, "Port (default: config service.port)");
    cmd_serve->add_option("--bind", serve_args.bind, "Bind address (default: config service.bind)");
    cmd_serve->add_option("--static", serve_args.static_dir, "Directory of web UI assets");
    cmd_serve->add_option("--snapshots", serve_args.snapshots, "Directory for session snapshots");

    std::string snapshot;
    std::string export_out;
    std::string export_config;
    auto* cmd_export = app.add_subcommand("export", "Export a snapshot's dataset as CSV");
    cmd_export->add_option("--snapshot", snapshot, "Snapshot file")->required();
    cmd_export->add_option("--out", export_out, "Output directory")->required();
    cmd_export->add_option("--config", export_config, "Refuse snapshots taken under a different config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);
        }
        emit_error("usage", e.what());
        return 2;
    }

    try {
        if (*cmd_study) {
            return run_study(study);
        }
        if (*cmd_session) {
            return run_session(session);
        }
        if (*cmd_serve) {
            return serve(serve_args);
        }
        if (*cmd_export) {
            return export_snapshot(snapshot, export_out, export_config);
        }
    } catch (const roial::ConfigError& e) {
        json violations = json::array();
        for (const auto& v : e.violations()) {
            violations.push_back({{"path", v.path}, {"message", v.message}});
        }
        emit_error("invalid_config", "configuration rejected", {{"violations", violations}});
        return 1;
    } catch (const roial::SnapshotError& e) {
        emit_error("snapshot", e.what());
        return 1;
    } catch (const roial::FeedbackError& e) {
        emit_error("invalid_feedback", e.what());
        return 1;
    } catch (const std::exception& e) {
        emit_error("error", e.what());
        return 1;
    }
    return 1;
}
