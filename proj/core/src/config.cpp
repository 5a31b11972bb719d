#include "roial/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <openssl/evp.h>

namespace roial {

using nlohmann::json;

LikelihoodModel ExperimentConfig::likelihood_model() const {
    return LikelihoodModel{PreferenceModel{preference_noise}, OrdinalScale(thresholds, ordinal_noise), Link(link)};
}

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

std::string indexed(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

/// Reads typed fields out of a JSON document, recording a violation for every
/// type error instead of stopping at the first one.
class Reader {
public:
    explicit Reader(std::vector<ConfigViolation>& out) : out_(out) {}

    void fail(const std::string& path, const std::string& message) { out_.push_back({path, message}); }

    bool expect_object(const json& node, const std::string& path) {
        if (!node.is_object()) {
            fail(path, "expected an object");
            return false;
        }
        return true;
    }

    void allowed_keys(const json& node, const std::string& path, std::initializer_list<const char*> keys) {
        std::set<std::string> allowed(keys.begin(), keys.end());
        for (const auto& [key, _] : node.items()) {
            if (!allowed.contains(key)) {
                fail(join(path, key), "unknown field");
            }
        }
    }

    const json* child(const json& node, const char* key) {
        auto it = node.find(key);
        return it == node.end() ? nullptr : &*it;
    }

    void number(const json& node, const std::string& path, const char* key, double& dst) {
        if (const json* v = child(node, key)) {
            if (v->is_number()) {
                dst = v->get<double>();
            } else {
                fail(join(path, key), "expected a number");
            }
        }
    }

    void count(const json& node, const std::string& path, const char* key, std::size_t& dst) {
        if (const json* v = child(node, key)) {
            if (v->is_number_unsigned()) {
                dst = v->get<std::size_t>();
            } else {
                fail(join(path, key), "expected a non-negative integer");
            }
        }
    }

    void integer(const json& node, const std::string& path, const char* key, int& dst) {
        if (const json* v = child(node, key)) {
            if (v->is_number_integer()) {
                dst = v->get<int>();
            } else {
                fail(join(path, key), "expected an integer");
            }
        }
    }

    void text(const json& node, const std::string& path, const char* key, std::string& dst) {
        if (const json* v = child(node, key)) {
            if (v->is_string()) {
                dst = v->get<std::string>();
            } else {
                fail(join(path, key), "expected a string");
            }
        }
    }

    void boolean(const json& node, const std::string& path, const char* key, bool& dst) {
        if (const json* v = child(node, key)) {
            if (v->is_boolean()) {
                dst = v->get<bool>();
            } else {
                fail(join(path, key), "expected true or false");
            }
        }
    }

    void numbers(const json& node, const std::string& path, const char* key, std::vector<double>& dst) {
        const json* v = child(node, key);
        if (!v) {
            return;
        }
        const std::string p = join(path, key);
        if (v->is_number()) {
            dst = {v->get<double>()};
            return;
        }
        if (!v->is_array()) {
            fail(p, "expected a number or an array of numbers");
            return;
        }
        dst.clear();
        for (std::size_t i = 0; i < v->size(); ++i) {
            if ((*v)[i].is_number()) {
                dst.push_back((*v)[i].get<double>());
            } else {
                fail(indexed(p, i), "expected a number");
            }
        }
    }

    void texts(const json& node, const std::string& path, const char* key, std::vector<std::string>& dst) {
        const json* v = child(node, key);
        if (!v) {
            return;
        }
        const std::string p = join(path, key);
        if (!v->is_array()) {
            fail(p, "expected an array of strings");
            return;
        }
        dst.clear();
        for (std::size_t i = 0; i < v->size(); ++i) {
            if ((*v)[i].is_string()) {
                dst.push_back((*v)[i].get<std::string>());
            } else {
                fail(indexed(p, i), "expected a string");
            }
        }
    }

private:
    std::vector<ConfigViolation>& out_;
};

void read_kernel(Reader& in, const json& node, const std::string& path, KernelConfig& k) {
    if (!in.expect_object(node, path)) {
        return;
    }
    in.allowed_keys(node, path, {"signal_variance", "lengthscales", "jitter"});
    in.number(node, path, "signal_variance", k.signal_variance);
    in.numbers(node, path, "lengthscales", k.lengthscales);
    in.number(node, path, "jitter", k.jitter);
}

void validate_kernel(const KernelConfig& k, std::size_t dims, const std::string& path,
                     std::vector<ConfigViolation>& out) {
    if (!(k.signal_variance > 0.0) || !std::isfinite(k.signal_variance)) {
        out.push_back({join(path, "signal_variance"), "must be positive"});
    }
    if (k.lengthscales.size() != 1 && k.lengthscales.size() != dims) {
        out.push_back({join(path, "lengthscales"), "needs 1 or " + std::to_string(dims) + " entries"});
    }
    for (std::size_t i = 0; i < k.lengthscales.size(); ++i) {
        if (!(k.lengthscales[i] > 0.0) || !std::isfinite(k.lengthscales[i])) {
            out.push_back({indexed(join(path, "lengthscales"), i), "must be positive"});
        }
    }
    if (!(k.jitter >= 0.0) || !std::isfinite(k.jitter)) {
        out.push_back({join(path, "jitter"), "must be non-negative"});
    }
}

json kernel_json(const KernelConfig& k) {
    return json{{"signal_variance", k.signal_variance}, {"lengthscales", k.lengthscales}, {"jitter", k.jitter}};
}

ExperimentConfig read_config(const json& doc, std::vector<ConfigViolation>& violations) {
    Reader in(violations);
    ExperimentConfig cfg;
    if (!in.expect_object(doc, "")) {
        return cfg;
    }
    in.allowed_keys(doc, "", {"name", "action_space", "kernel", "ordinal", "preference", "link", "acquisition",
                              "session", "simulation", "seed", "service"});
    in.text(doc, "", "name", cfg.name);

    if (const json* space = in.child(doc, "action_space"); space && in.expect_object(*space, "action_space")) {
        in.allowed_keys(*space, "action_space", {"dimensions"});
        const json* dims = in.child(*space, "dimensions");
        if (dims && dims->is_array()) {
            for (std::size_t i = 0; i < dims->size(); ++i) {
                const std::string p = indexed("action_space.dimensions", i);
                const json& d = (*dims)[i];
                DimensionSpec spec;
                spec.bins = 0;
                if (in.expect_object(d, p)) {
                    in.allowed_keys(d, p, {"name", "min", "max", "bins"});
                    in.text(d, p, "name", spec.name);
                    in.number(d, p, "min", spec.min);
                    in.number(d, p, "max", spec.max);
                    in.count(d, p, "bins", spec.bins);
                }
                cfg.dimensions.push_back(spec);
            }
        } else if (dims) {
            in.fail("action_space.dimensions", "expected an array");
        }
    }

    if (const json* k = in.child(doc, "kernel")) {
        read_kernel(in, *k, "kernel", cfg.kernel);
    }

    if (const json* ord = in.child(doc, "ordinal"); ord && in.expect_object(*ord, "ordinal")) {
        in.allowed_keys(*ord, "ordinal", {"categories", "thresholds", "noise"});
        in.texts(*ord, "ordinal", "categories", cfg.category_names);
        in.numbers(*ord, "ordinal", "thresholds", cfg.thresholds);
        in.number(*ord, "ordinal", "noise", cfg.ordinal_noise);
    }

    if (const json* pref = in.child(doc, "preference"); pref && in.expect_object(*pref, "preference")) {
        in.allowed_keys(*pref, "preference", {"noise"});
        in.number(*pref, "preference", "noise", cfg.preference_noise);
    }

    if (const json* link = in.child(doc, "link")) {
        if (*link == "sigmoid") {
            cfg.link = LinkKind::kSigmoid;
        } else if (*link == "probit") {
            cfg.link = LinkKind::kProbit;
        } else {
            in.fail("link", "expected \"sigmoid\" or \"probit\"");
        }
    }

    if (const json* acq = in.child(doc, "acquisition"); acq && in.expect_object(*acq, "acquisition")) {
        in.allowed_keys(*acq, "acquisition", {"lambda", "subset_size", "posterior_samples"});
        if (const json* lam = in.child(*acq, "lambda")) {
            if (lam->is_number()) {
                cfg.lambda = lam->get<double>();
            } else if (lam->is_string() && (*lam == "inf" || *lam == "infinity" || *lam == "+inf")) {
                cfg.lambda = std::numeric_limits<double>::infinity();
            } else {
                in.fail("acquisition.lambda", "expected a number or \"inf\"");
            }
        }
        if (const json* m = in.child(*acq, "subset_size")) {
            if (m->is_string() && *m == "all") {
                cfg.subset_size = 0;
            } else if (m->is_number_unsigned() && m->get<std::size_t>() > 0) {
                cfg.subset_size = m->get<std::size_t>();
            } else {
                in.fail("acquisition.subset_size", "expected a positive integer or \"all\"");
            }
        }
        in.count(*acq, "acquisition", "posterior_samples", cfg.posterior_samples);
    }

    if (const json* s = in.child(doc, "session"); s && in.expect_object(*s, "session")) {
        in.allowed_keys(*s, "session",
                        {"training_trials", "validation_trials", "validation_per_category", "grid_refresh_every"});
        in.count(*s, "session", "training_trials", cfg.training_trials);
        in.count(*s, "session", "validation_trials", cfg.validation_trials);
        in.count(*s, "session", "validation_per_category", cfg.validation_per_category);
        in.count(*s, "session", "grid_refresh_every", cfg.grid_refresh_every);
    }

    if (const json* sim = in.child(doc, "simulation"); sim && in.expect_object(*sim, "simulation")) {
        in.allowed_keys(*sim, "simulation", {"function", "kernel", "ordinal_noise", "preference_noise"});
        if (const json* fn = in.child(*sim, "function")) {
            if (*fn == "gp") {
                cfg.simulation.function = TruthFunction::kGaussianProcess;
            } else if (*fn == "hartmann3") {
                cfg.simulation.function = TruthFunction::kHartmann3;
            } else {
                in.fail("simulation.function", "expected \"gp\" or \"hartmann3\"");
            }
        }
        if (const json* k = in.child(*sim, "kernel")) {
            KernelConfig truth = cfg.kernel;
            read_kernel(in, *k, "simulation.kernel", truth);
            cfg.simulation.kernel = truth;
        }
        in.number(*sim, "simulation", "ordinal_noise", cfg.simulation.ordinal_noise);
        in.number(*sim, "simulation", "preference_noise", cfg.simulation.preference_noise);
    }

    if (const json* seed = in.child(doc, "seed")) {
        if (seed->is_number_unsigned()) {
            cfg.seed = seed->get<std::uint64_t>();
        } else {
            in.fail("seed", "expected a non-negative integer");
        }
    }

    if (const json* svc = in.child(doc, "service"); svc && in.expect_object(*svc, "service")) {
        in.allowed_keys(*svc, "service", {"bind", "port", "show_validation_banner"});
        in.text(*svc, "service", "bind", cfg.service.bind);
        in.integer(*svc, "service", "port", cfg.service.port);
        in.boolean(*svc, "service", "show_validation_banner", cfg.service.show_validation_banner);
    }
    return cfg;
}

}  // namespace

std::vector<ConfigViolation> validate(const ExperimentConfig& cfg) {
    std::vector<ConfigViolation> out;
    if (cfg.dimensions.empty()) {
        out.push_back({"action_space.dimensions", "at least one dimension required"});
    }
    std::set<std::string> names;
    for (std::size_t i = 0; i < cfg.dimensions.size(); ++i) {
        const auto& d = cfg.dimensions[i];
        const std::string p = indexed("action_space.dimensions", i);
        if (d.name.empty()) {
            out.push_back({join(p, "name"), "must be non-empty"});
        } else if (!names.insert(d.name).second) {
            out.push_back({join(p, "name"), "duplicate dimension name"});
        }
        if (d.bins == 0) {
            out.push_back({join(p, "bins"), "must be >= 1"});
        }
        if (!std::isfinite(d.min) || !std::isfinite(d.max)) {
            out.push_back({p, "bounds must be finite"});
        } else if (d.min > d.max) {
            out.push_back({p, "min must not exceed max"});
        } else if (d.bins > 1 && d.min == d.max) {
            out.push_back({p, "min < max required when bins > 1"});
        }
    }
    validate_kernel(cfg.kernel, cfg.dimensions.size(), "kernel", out);

    const std::size_t r = cfg.category_names.size();
    if (r < 2) {
        out.push_back({"ordinal.categories", "at least 2 categories required"});
    }
    if (cfg.thresholds.size() + 1 != r) {
        out.push_back({"ordinal.thresholds", "needs exactly (number of categories - 1) entries"});
    }
    for (std::size_t j = 0; j < cfg.thresholds.size(); ++j) {
        if (!std::isfinite(cfg.thresholds[j])) {
            out.push_back({indexed("ordinal.thresholds", j), "must be finite"});
        }
    }
    for (std::size_t j = 1; j < cfg.thresholds.size(); ++j) {
        if (!(cfg.thresholds[j] > cfg.thresholds[j - 1])) {
            out.push_back({"ordinal.thresholds", "thresholds strictly increasing"});
            break;
        }
    }
    if (!(cfg.ordinal_noise > 0.0) || !std::isfinite(cfg.ordinal_noise)) {
        out.push_back({"ordinal.noise", "must be positive"});
    }
    if (!(cfg.preference_noise > 0.0) || !std::isfinite(cfg.preference_noise)) {
        out.push_back({"preference.noise", "must be positive"});
    }
    if (std::isnan(cfg.lambda) || cfg.lambda == -std::numeric_limits<double>::infinity()) {
        out.push_back({"acquisition.lambda", "must be finite or +inf"});
    }
    if (cfg.posterior_samples == 0) {
        out.push_back({"acquisition.posterior_samples", "must be >= 1"});
    }
    if (cfg.training_trials == 0) {
        out.push_back({"session.training_trials", "must be >= 1"});
    }
    if (cfg.validation_trials > 0 && r >= 2 && (r - 1) * cfg.validation_per_category > cfg.validation_trials) {
        out.push_back({"session.validation_per_category", "targeted validation actions exceed validation_trials"});
    }
    if (cfg.grid_refresh_every == 0) {
        out.push_back({"session.grid_refresh_every", "must be >= 1"});
    }
    if (cfg.simulation.kernel) {
        validate_kernel(*cfg.simulation.kernel, cfg.dimensions.size(), "simulation.kernel", out);
    }
    if (cfg.simulation.function == TruthFunction::kHartmann3 && cfg.dimensions.size() != 3) {
        out.push_back({"simulation.function", "hartmann3 needs a 3-dimensional action space"});
    }
    if (!(cfg.simulation.ordinal_noise >= 0.0) || !std::isfinite(cfg.simulation.ordinal_noise)) {
        out.push_back({"simulation.ordinal_noise", "must be non-negative"});
    }
    if (!(cfg.simulation.preference_noise >= 0.0) || !std::isfinite(cfg.simulation.preference_noise)) {
        out.push_back({"simulation.preference_noise", "must be non-negative"});
    }
    if (cfg.service.port < 0 || cfg.service.port > 65535) {
        out.push_back({"service.port", "must be in 0..65535"});
    }
    return out;
}

ExperimentConfig parse_config(const json& doc) {
    std::vector<ConfigViolation> violations;
    ExperimentConfig cfg = read_config(doc, violations);
    if (violations.empty()) {
        violations = validate(cfg);
    } else {
        // Type errors first, then whatever semantic checks still make sense.
        auto more = validate(cfg);
        violations.insert(violations.end(), more.begin(), more.end());
    }
    if (!violations.empty()) {
        throw ConfigError(std::move(violations));
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError({{"", "cannot open config file " + path.string()}});
    }
    json doc;
    try {
        doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError({{"", std::string("parse error: ") + e.what()}});
    }
    return parse_config(doc);
}

std::vector<std::filesystem::path> config_search_path() {
    std::vector<std::filesystem::path> dirs;
    if (const char* env = std::getenv("ROIAL_CONFIG_DIR")) {
        dirs.emplace_back(env);
    }
#ifdef ROIAL_DEFAULT_CONFIG_DIR
    dirs.emplace_back(ROIAL_DEFAULT_CONFIG_DIR);
#endif
    return dirs;
}

std::filesystem::path resolve_config(const std::string& reference) {
    namespace fs = std::filesystem;
    if (fs::is_regular_file(reference)) {
        return reference;
    }
    for (const auto& dir : config_search_path()) {
        for (const fs::path& candidate : {dir / reference, dir / (reference + ".json")}) {
            if (fs::is_regular_file(candidate)) {
                return candidate;
            }
        }
    }
    throw ConfigError({{"", "no config file or named config '" + reference + "'"}});
}

json to_json(const ExperimentConfig& cfg) {
    json dims = json::array();
    for (const auto& d : cfg.dimensions) {
        dims.push_back({{"name", d.name}, {"min", d.min}, {"max", d.max}, {"bins", d.bins}});
    }
    json sim = {{"function", cfg.simulation.function == TruthFunction::kHartmann3 ? "hartmann3" : "gp"},
                {"ordinal_noise", cfg.simulation.ordinal_noise},
                {"preference_noise", cfg.simulation.preference_noise}};
    if (cfg.simulation.kernel) {
        sim["kernel"] = kernel_json(*cfg.simulation.kernel);
    }
    json lambda = std::isinf(cfg.lambda) ? json("inf") : json(cfg.lambda);
    json subset = cfg.subset_size == 0 ? json("all") : json(cfg.subset_size);
    return json{
        {"name", cfg.name},
        {"action_space", {{"dimensions", dims}}},
        {"kernel", kernel_json(cfg.kernel)},
        {"ordinal", {{"categories", cfg.category_names}, {"thresholds", cfg.thresholds}, {"noise", cfg.ordinal_noise}}},
        {"preference", {{"noise", cfg.preference_noise}}},
        {"link", cfg.link == LinkKind::kProbit ? "probit" : "sigmoid"},
        {"acquisition", {{"lambda", lambda}, {"subset_size", subset}, {"posterior_samples", cfg.posterior_samples}}},
        {"session",
         {{"training_trials", cfg.training_trials},
          {"validation_trials", cfg.validation_trials},
          {"validation_per_category", cfg.validation_per_category},
          {"grid_refresh_every", cfg.grid_refresh_every}}},
        {"simulation", sim},
        {"seed", cfg.seed},
        {"service",
         {{"bind", cfg.service.bind},
          {"port", cfg.service.port},
          {"show_validation_banner", cfg.service.show_validation_banner}}},
    };
}

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xf]);
    }
    return out;
}

std::string config_hash(const ExperimentConfig& config) { return sha256_hex(to_json(config).dump()); }

}  // namespace roial
