#include "roial/service.hpp"

#include <atomic>
#include <chrono>
#include <cctype>
#include <condition_variable>
#include <ctime>
#include <deque>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <thread>

// Eigen must precede httplib: <resolv.h> defines a `_res` macro that
// collides with Eigen parameter names.
#include "roial/analysis.hpp"
#include "roial/errors.hpp"
#include "roial/export.hpp"
#include "roial/session.hpp"
#include "roial/snapshot.hpp"

#include <httplib.h>

namespace roial {

using nlohmann::json;

namespace {

std::string now_iso() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string new_session_id() {
    static std::mutex mutex;
    static std::random_device device;
    std::lock_guard lock(mutex);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string id;
    for (int i = 0; i < 4; ++i) {
        std::uint32_t word = device();
        for (int j = 0; j < 8; ++j) {
            id.push_back(kHex[word & 0xf]);
            word >>= 4;
        }
    }
    return id;
}

std::string trial_token(std::size_t trial) { return "trial-" + std::to_string(trial); }

ServiceResponse error(int status, const std::string& code, const std::string& message, json extra = json::object()) {
    json err = {{"code", code}, {"message", message}};
    for (auto& [k, v] : extra.items()) {
        err[k] = v;
    }
    return {status, json{{"error", err}}, std::nullopt, "application/json"};
}

ServiceResponse config_error(const ConfigError& e) {
    json violations = json::array();
    for (const auto& v : e.violations()) {
        violations.push_back({{"path", v.path}, {"message", v.message}});
    }
    return error(400, "invalid_config", "configuration rejected", {{"violations", violations}});
}

json action_json(const ActionSpace& space, ActionIndex a) {
    json coords = json::array();
    const auto values = space.coordinates(a);
    for (std::size_t d = 0; d < space.num_dims(); ++d) {
        coords.push_back({{"name", space.dim(d).name}, {"value", values[d]}});
    }
    return {{"index", a}, {"coordinates", coords}};
}

json query_json(const Session& s) {
    const Query& q = s.query();
    if (q.phase == Phase::kFinished) {
        return nullptr;
    }
    return {
        {"trial", q.trial},
        {"trial_token", trial_token(q.trial)},
        {"phase", to_string(q.phase)},
        {"action", action_json(s.space(), q.action)},
        {"previous", q.previous ? action_json(s.space(), *q.previous) : json(nullptr)},
        {"preference_requested", q.preference_requested()},
        {"show_validation_banner", s.config().service.show_validation_banner},
    };
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

json matrix_json(const Eigen::MatrixXd& m) {
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

json dimensions_json(const ActionSpace& space) {
    json dims = json::array();
    for (const auto& d : space.dims()) {
        dims.push_back({{"name", d.name}, {"min", d.min}, {"max", d.max}, {"bins", d.bins}});
    }
    return dims;
}

json summary_json(const Session& s) {
    json summary = {{"completed_trials", s.completed_trials()}};
    if (auto confusion = s.validation_confusion()) {
        summary["validation_confusion"] = {{"rows", "reported label"},
                                           {"columns", "predicted label"},
                                           {"counts", matrix_json(*confusion)}};
    }
    return summary;
}

std::optional<json> parse_body(const std::string& body) {
    if (body.empty()) {
        return json::object();
    }
    try {
        return json::parse(body);
    } catch (const json::parse_error&) {
        return std::nullopt;
    }
}

bool is_bare_name(const std::string& name) {
    if (name.empty()) {
        return false;
    }
    for (char c : name) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) {
            return false;
        }
    }
    return name.find("..") == std::string::npos;
}

}  // namespace

struct SessionService::Impl {
    struct Resource {
        std::string id;
        std::mutex mutex;
        std::atomic<bool> busy{false};
        std::unique_ptr<Session> session;
        std::string created;
        std::string updated;
        std::optional<TrialRecord> last_record;
        json last_response;
    };

    struct RefreshJob {
        std::shared_ptr<Resource> resource;
        ExperimentConfig config;
        std::shared_ptr<const SquaredExponentialKernel> kernel;
        FeedbackDataset dataset;
        std::size_t trial;
    };

    explicit Impl(ServiceOptions opts) : options(std::move(opts)) {
        worker = std::thread([this] { refresh_loop(); });
        if (options.snapshot_dir) {
            restore_snapshots();
        }
        register_routes();
    }

    ~Impl() {
        server.stop();
        if (server_thread.joinable()) {
            server_thread.join();
        }
        {
            std::lock_guard lock(queue_mutex);
            stopping = true;
        }
        queue_cv.notify_all();
        worker.join();
    }

    std::shared_ptr<Resource> find(const std::string& id) {
        std::lock_guard lock(registry_mutex);
        auto it = sessions.find(id);
        return it == sessions.end() ? nullptr : it->second;
    }

    void persist(const Resource& res) {
        if (options.snapshot_dir) {
            save_snapshot(*res.session, *options.snapshot_dir / (res.id + ".json"));
        }
    }

    void restore_snapshots() {
        namespace fs = std::filesystem;
        fs::create_directories(*options.snapshot_dir);
        for (const auto& entry : fs::directory_iterator(*options.snapshot_dir)) {
            if (entry.path().extension() != ".json") {
                continue;
            }
            auto res = std::make_shared<Resource>();
            res->id = entry.path().stem().string();
            res->session = std::make_unique<Session>(load_snapshot(entry.path()));
            res->created = res->updated = now_iso();
            sessions.emplace(res->id, res);
        }
    }

    void schedule_refresh(const std::shared_ptr<Resource>& res) {
        const Session& s = *res->session;
        if (!s.grid_refresh_due()) {
            return;
        }
        {
            std::lock_guard lock(queue_mutex);
            jobs.push_back({res, s.config(), s.kernel(), s.dataset(), s.completed_trials()});
        }
        queue_cv.notify_all();
    }

    void refresh_loop() {
        for (;;) {
            RefreshJob job;
            {
                std::unique_lock lock(queue_mutex);
                queue_cv.wait(lock, [this] { return stopping || !jobs.empty(); });
                if (jobs.empty()) {
                    return;
                }
                job = std::move(jobs.front());
                jobs.pop_front();
                job_running = true;
            }
            try {
                GridPosterior grid = compute_grid_posterior(job.config, job.kernel, job.dataset, job.trial);
                std::lock_guard lock(job.resource->mutex);
                job.resource->session->publish_grid(std::move(grid));
                persist(*job.resource);
            } catch (const std::exception&) {
                // The next due refresh retries; feedback stepping is unaffected.
            }
            {
                std::lock_guard lock(queue_mutex);
                job_running = false;
            }
            idle_cv.notify_all();
        }
    }

    void wait_idle() {
        std::unique_lock lock(queue_mutex);
        idle_cv.wait(lock, [this] { return jobs.empty() && !job_running; });
    }

    ServiceResponse create(const std::string& body) {
        auto doc = parse_body(body);
        if (!doc || !doc->is_object()) {
            return error(400, "malformed_body", "request body must be a JSON object");
        }
        ExperimentConfig config;
        try {
            const json ref = doc->value("config", json(options.default_config));
            if (ref.is_string()) {
                const auto name = ref.get<std::string>();
                if (!is_bare_name(name)) {
                    return error(400, "invalid_config", "config names may only contain letters, digits, '_', '-', '.'",
                                 {{"violations", json::array({{{"path", "config"}, {"message", "invalid name"}}})}});
                }
                config = load_config(resolve_config(name));
            } else if (ref.is_object()) {
                config = parse_config(ref);
            } else {
                return error(400, "invalid_config", "\"config\" must be a name or an object",
                             {{"violations", json::array({{{"path", "config"}, {"message", "expected string or object"}}})}});
            }
            if (doc->contains("seed")) {
                const json& seed = doc->at("seed");
                if (!seed.is_number_unsigned()) {
                    return error(400, "invalid_config", "seed must be a non-negative integer",
                                 {{"violations", json::array({{{"path", "seed"}, {"message", "expected a non-negative integer"}}})}});
                }
                config.seed = seed.get<std::uint64_t>();
            }
        } catch (const ConfigError& e) {
            return config_error(e);
        }

        auto res = std::make_shared<Resource>();
        res->id = new_session_id();
        res->session = std::make_unique<Session>(std::move(config));
        res->created = res->updated = now_iso();
        {
            std::lock_guard lock(registry_mutex);
            sessions.emplace(res->id, res);
        }
        std::lock_guard lock(res->mutex);
        persist(*res);
        const Session& s = *res->session;
        return {201,
                {{"session_id", res->id},
                 {"config_name", s.config().name},
                 {"config_hash", config_hash(s.config())},
                 {"categories", s.config().category_names},
                 {"dimensions", dimensions_json(s.space())},
                 {"phase", to_string(s.phase())},
                 {"query", query_json(s)}},
                std::nullopt,
                "application/json"};
    }

    ServiceResponse feedback(const std::string& id, const std::string& body) {
        auto res = find(id);
        if (!res) {
            return error(404, "unknown_session", "no session " + id);
        }
        if (res->busy.exchange(true)) {
            return error(409, "busy", "another submission for this session is in flight");
        }
        struct Release {
            std::atomic<bool>& flag;
            ~Release() { flag = false; }
        } release{res->busy};

        auto doc = parse_body(body);
        if (!doc || !doc->is_object()) {
            return error(400, "malformed_body", "request body must be a JSON object");
        }
        if (!doc->contains("label") || !(*doc)["label"].is_number_integer()) {
            return error(422, "invalid_label", "\"label\" must be an integer category");
        }
        const OrdinalLabel label = (*doc)["label"].get<OrdinalLabel>();
        PreferenceAnswer pref = PreferenceAnswer::kSkip;
        if (doc->contains("preference") && !(*doc)["preference"].is_null()) {
            if (!(*doc)["preference"].is_string()) {
                return error(422, "invalid_preference", "\"preference\" must be current, previous or skip");
            }
            try {
                pref = parse_preference((*doc)["preference"].get<std::string>());
            } catch (const FeedbackError& e) {
                return error(422, "invalid_preference", e.what());
            }
        }

        std::lock_guard lock(res->mutex);
        Session& s = *res->session;
        if (doc->contains("trial_token")) {
            const json& tok = (*doc)["trial_token"];
            const std::string token = tok.is_string() ? tok.get<std::string>() : std::string{};
            if (res->last_record && token == trial_token(res->last_record->trial)) {
                if (res->last_record->label == label && res->last_record->preference == pref) {
                    return {200, res->last_response, std::nullopt, "application/json"};
                }
                return error(409, "conflicting_resubmission", "trial already recorded with different feedback");
            }
            if (s.finished() || token != trial_token(s.query().trial)) {
                return error(409, "stale_token", "trial token does not match the pending trial",
                             {{"pending_trial", s.finished() ? json(nullptr) : json(s.query().trial)}});
            }
        }
        if (s.finished()) {
            return error(409, "finished", "session is finished");
        }

        const std::size_t trial = s.query().trial;
        const Phase before = s.phase();
        try {
            s.submit(label, pref);
        } catch (const FeedbackError& e) {
            return error(422, "invalid_feedback", e.what());
        }
        res->updated = now_iso();
        json out = {{"session_id", id},
                    {"accepted_trial", trial},
                    {"phase", to_string(s.phase())},
                    {"query", query_json(s)}};
        if (before == Phase::kTraining && s.phase() != Phase::kTraining) {
            const auto& plan = s.validation_plan();
            out["validation"] = {{"actions", plan.actions.size()},
                                 {"category_shortfall", plan.shortfall},
                                 {"total_shortfall", plan.total_shortfall}};
        }
        if (s.finished()) {
            out["summary"] = summary_json(s);
        }
        res->last_record = s.transcript().back();
        res->last_response = out;
        persist(*res);
        schedule_refresh(res);
        return {200, out, std::nullopt, "application/json"};
    }

    ServiceResponse heatmap(const std::string& id, const std::string& pair) {
        auto res = find(id);
        if (!res) {
            return error(404, "unknown_session", "no session " + id);
        }
        std::lock_guard lock(res->mutex);
        const Session& s = *res->session;
        const ActionSpace& space = s.space();
        const auto comma = pair.find(',');
        if (comma == std::string::npos) {
            return error(400, "invalid_pair", "pair must be \"d1,d2\"");
        }
        auto dim_of = [&](const std::string& name) -> std::optional<std::size_t> {
            try {
                return space.dim_index(name);
            } catch (const std::out_of_range&) {
                return std::nullopt;
            }
        };
        const auto d1 = dim_of(pair.substr(0, comma));
        const auto d2 = dim_of(pair.substr(comma + 1));
        if (!d1 || !d2 || *d1 == *d2) {
            return error(400, "invalid_pair", "pair must name two distinct dimensions");
        }
        const auto& grid = s.grid();
        if (!grid) {
            const std::size_t every = s.config().grid_refresh_every;
            const std::size_t next = (s.completed_trials() / every + 1) * every;
            return error(409, "no_posterior", "no full-grid posterior yet",
                         {{"retry_after_trial", std::min(next, s.config().training_trials)}});
        }
        const Heatmap h = pairwise_heatmap(grid->mean, grid->roi, space, *d1, *d2);
        json rows_at = json::array();
        json cols_at = json::array();
        for (std::size_t k = 0; k < space.dim(*d1).bins; ++k) {
            rows_at.push_back(space.dim(*d1).value(k));
        }
        for (std::size_t k = 0; k < space.dim(*d2).bins; ++k) {
            cols_at.push_back(space.dim(*d2).value(k));
        }
        return {200,
                {{"session_id", id},
                 {"grid_trial", grid->trial},
                 {"pair", {space.dim(*d1).name, space.dim(*d2).name}},
                 {"row_values", rows_at},
                 {"column_values", cols_at},
                 {"values", matrix_json(h.values)},
                 {"roi_fraction", matrix_json(h.roi_fraction)}},
                std::nullopt,
                "application/json"};
    }

    ServiceResponse session_status(const std::string& id) {
        auto res = find(id);
        if (!res) {
            return error(404, "unknown_session", "no session " + id);
        }
        std::lock_guard lock(res->mutex);
        const Session& s = *res->session;
        json out = {{"session_id", id},
                    {"config_name", s.config().name},
                    {"config_hash", config_hash(s.config())},
                    {"created", res->created},
                    {"updated", res->updated},
                    {"trial", s.finished() ? s.completed_trials() : s.query().trial},
                    {"completed_trials", s.completed_trials()},
                    {"training_trials", s.config().training_trials},
                    {"validation_trials", s.config().validation_trials},
                    {"phase", to_string(s.phase())},
                    {"categories", s.config().category_names},
                    {"dimensions", dimensions_json(s.space())},
                    {"query", query_json(s)},
                    {"last_action", s.transcript().empty() ? json(nullptr)
                                                           : action_json(s.space(), s.transcript().back().action)},
                    {"num_preferences", s.dataset().preferences.size()},
                    {"num_ordinals", s.dataset().ordinals.size()}};
        if (const auto& grid = s.grid()) {
            const auto scores = permutation_importance(grid->mean, s.space(), s.config().seed);
            json importance = json::array();
            for (std::size_t d = 0; d < scores.size(); ++d) {
                importance.push_back({{"name", s.space().dim(d).name}, {"score", scores[d]}});
            }
            out["grid_trial"] = grid->trial;
            out["feature_importance"] = importance;
        }
        if (s.finished()) {
            out["summary"] = summary_json(s);
        }
        return {200, out, std::nullopt, "application/json"};
    }

    ServiceResponse export_files(const std::string& id, const std::string& file) {
        auto res = find(id);
        if (!res) {
            return error(404, "unknown_session", "no session " + id);
        }
        DatasetExport files;
        {
            std::lock_guard lock(res->mutex);
            files = export_dataset(*res->session);
        }
        std::map<std::string, std::string> named = {{"ordinals.csv", files.ordinals},
                                                    {"preferences.csv", files.preferences}};
        if (files.posterior_grid) {
            named.emplace("posterior_grid.csv", *files.posterior_grid);
        }
        if (!file.empty()) {
            auto it = named.find(file);
            if (it == named.end()) {
                return error(404, "unknown_file", "no export file " + file);
            }
            return {200, nullptr, it->second, "text/csv"};
        }
        return {200, {{"session_id", id}, {"files", named}}, std::nullopt, "application/json"};
    }

    ServiceResponse configs() {
        std::set<std::string> names;
        for (const auto& dir : config_search_path()) {
            std::error_code ec;
            for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
                if (entry.path().extension() == ".json") {
                    names.insert(entry.path().stem().string());
                }
            }
        }
        return {200, {{"configs", names}, {"default", options.default_config}}, std::nullopt, "application/json"};
    }

    static void reply(httplib::Response& out, const ServiceResponse& r) {
        out.status = r.status;
        if (r.raw) {
            out.set_content(*r.raw, r.content_type);
        } else {
            out.set_content(r.body.dump(), "application/json");
        }
    }

    void register_routes() {
        server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& out) {
            reply(out, create(req.body));
        });
        server.Post(R"(/sessions/([0-9a-f]+)/feedback)", [this](const httplib::Request& req, httplib::Response& out) {
            reply(out, feedback(req.matches[1], req.body));
        });
        server.Get(R"(/sessions/([0-9a-f]+)/posterior)", [this](const httplib::Request& req, httplib::Response& out) {
            reply(out, heatmap(req.matches[1], req.get_param_value("pair")));
        });
        server.Get(R"(/sessions/([0-9a-f]+)/export)", [this](const httplib::Request& req, httplib::Response& out) {
            reply(out, export_files(req.matches[1], req.get_param_value("file")));
        });
        server.Get(R"(/sessions/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& out) {
            reply(out, session_status(req.matches[1]));
        });
        server.Get("/configs", [this](const httplib::Request&, httplib::Response& out) { reply(out, configs()); });
        server.set_exception_handler([](const httplib::Request&, httplib::Response& out, std::exception_ptr ep) {
            std::string what = "internal error";
            try {
                std::rethrow_exception(ep);
            } catch (const std::exception& e) {
                what = e.what();
            } catch (...) {
            }
            reply(out, error(500, "internal", what));
        });
        if (options.static_dir) {
            server.set_mount_point("/", options.static_dir->string());
        }
    }

    ServiceOptions options;
    std::mutex registry_mutex;
    std::map<std::string, std::shared_ptr<Resource>> sessions;

    std::mutex queue_mutex;
    std::condition_variable queue_cv;
    std::condition_variable idle_cv;
    std::deque<RefreshJob> jobs;
    bool job_running = false;
    bool stopping = false;
    std::thread worker;

    httplib::Server server;
    std::thread server_thread;
};

SessionService::SessionService(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

SessionService::~SessionService() = default;

ServiceResponse SessionService::create_session(const std::string& body) { return impl_->create(body); }

ServiceResponse SessionService::submit_feedback(const std::string& id, const std::string& body) {
    return impl_->feedback(id, body);
}

ServiceResponse SessionService::posterior(const std::string& id, const std::string& pair) {
    return impl_->heatmap(id, pair);
}

ServiceResponse SessionService::status(const std::string& id) { return impl_->session_status(id); }

ServiceResponse SessionService::export_files(const std::string& id, const std::string& file) {
    return impl_->export_files(id, file);
}

ServiceResponse SessionService::list_configs() { return impl_->configs(); }

void SessionService::wait_idle() { impl_->wait_idle(); }

int SessionService::start() {
    int port = impl_->options.port;
    if (port == 0) {
        port = impl_->server.bind_to_any_port(impl_->options.bind);
    } else if (!impl_->server.bind_to_port(impl_->options.bind, port)) {
        port = -1;
    }
    if (port < 0) {
        throw std::runtime_error("cannot bind " + impl_->options.bind + ":" + std::to_string(impl_->options.port));
    }
    impl_->server_thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port;
}

void SessionService::listen() {
    if (!impl_->server.listen(impl_->options.bind, impl_->options.port)) {
        throw std::runtime_error("cannot listen on " + impl_->options.bind + ":" + std::to_string(impl_->options.port));
    }
}

void SessionService::stop() { impl_->server.stop(); }

}  // namespace roial
