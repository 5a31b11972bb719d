#include "roial/snapshot.hpp"

#include <fstream>

#include "roial/errors.hpp"

namespace roial {

using nlohmann::json;

namespace {

json vector_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Eigen::VectorXd json_vector(const json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

json snapshot_json(const Session& session) {
    json transcript = json::array();
    for (const TrialRecord& rec : session.transcript()) {
        transcript.push_back({{"trial", rec.trial},
                              {"action", rec.action},
                              {"label", rec.label},
                              {"preference", to_string(rec.preference)}});
    }
    const Query& q = session.query();
    json payload = {
        {"config", to_json(session.config())},
        {"transcript", transcript},
        {"query", {{"trial", q.trial}, {"action", q.action}, {"phase", to_string(q.phase)}}},
        {"grid", nullptr},
    };
    if (const auto& grid = session.grid()) {
        payload["grid"] = {{"trial", grid->trial}, {"mean", vector_json(grid->mean)}, {"stddev", vector_json(grid->stddev)}};
    }
    return json{
        {"format", kSnapshotFormat},
        {"version", kSnapshotVersion},
        {"config_hash", config_hash(session.config())},
        {"payload", payload},
        {"checksum", sha256_hex(payload.dump())},
    };
}

Session restore_snapshot(const json& doc, const std::optional<ExperimentConfig>& expected) {
    try {
        if (!doc.is_object() || doc.value("format", "") != kSnapshotFormat) {
            throw SnapshotError("not a session snapshot");
        }
        const int version = doc.at("version").get<int>();
        if (version != kSnapshotVersion) {
            throw SnapshotError("snapshot version " + std::to_string(version) + " is not supported (expected "
                                + std::to_string(kSnapshotVersion) + ")");
        }
        const json& payload = doc.at("payload");
        if (sha256_hex(payload.dump()) != doc.at("checksum").get<std::string>()) {
            throw SnapshotError("snapshot checksum mismatch (file corrupted)");
        }
        ExperimentConfig config = parse_config(payload.at("config"));
        const std::string hash = doc.at("config_hash").get<std::string>();
        if (config_hash(config) != hash) {
            throw SnapshotError("snapshot config hash does not match its embedded config");
        }
        if (expected && config_hash(*expected) != hash) {
            throw SnapshotError("snapshot was taken under a different config (hash " + hash.substr(0, 12) + ")");
        }

        std::vector<TrialRecord> transcript;
        for (const json& rec : payload.at("transcript")) {
            transcript.push_back({rec.at("trial").get<std::size_t>(), rec.at("action").get<ActionIndex>(),
                                  rec.at("label").get<OrdinalLabel>(),
                                  parse_preference(rec.at("preference").get<std::string>())});
        }
        Session session = Session::replay(config, transcript);

        const json& q = payload.at("query");
        if (q.at("trial").get<std::size_t>() != session.query().trial
            || q.at("action").get<ActionIndex>() != session.query().action
            || q.at("phase").get<std::string>() != to_string(session.query().phase)) {
            throw SnapshotError("replayed session disagrees with the recorded pending query");
        }
        const json& grid = payload.at("grid");
        if (!grid.is_null()) {
            GridPosterior g = make_grid_posterior(config, grid.at("trial").get<std::size_t>(), json_vector(grid.at("mean")),
                                                  json_vector(grid.at("stddev")));
            if (static_cast<std::size_t>(g.mean.size()) != session.space().size()) {
                throw SnapshotError("snapshot grid does not cover the action space");
            }
            session.publish_grid(std::move(g));
        }
        return session;
    } catch (const SnapshotError&) {
        throw;
    } catch (const ConfigError& e) {
        throw SnapshotError(std::string("snapshot config invalid: ") + e.what());
    } catch (const std::exception& e) {
        throw SnapshotError(std::string("malformed snapshot: ") + e.what());
    }
}

void save_snapshot(const Session& session, const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw SnapshotError("cannot write " + tmp.string());
        }
        out << snapshot_json(session).dump(1) << '\n';
        if (!out) {
            throw SnapshotError("write failed for " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

Session load_snapshot(const std::filesystem::path& path, const std::optional<ExperimentConfig>& expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw SnapshotError("cannot open snapshot " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SnapshotError(std::string("snapshot is not valid JSON: ") + e.what());
    }
    return restore_snapshot(doc, expected);
}

}  // namespace roial
