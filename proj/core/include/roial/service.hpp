#ifndef ROIAL_SERVICE_HPP
#define ROIAL_SERVICE_HPP

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace roial {

struct ServiceOptions {
    std::string bind = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    /// Built web UI served at "/" when set.
    std::optional<std::filesystem::path> static_dir;
    /// Snapshots are written here after every trial and reloaded on start.
    std::optional<std::filesystem::path> snapshot_dir;
    /// Config used when POST /sessions names none.
    std::string default_config = "gait";
};

/// Result of one endpoint call, independent of the transport.
struct ServiceResponse {
    int status = 200;
    nlohmann::json body;
    /// Raw payload with its content type, used instead of `body` when set.
    std::optional<std::string> raw;
    std::string content_type = "application/json";
};

/// HTTP session service. Each session is stepped synchronously by its
/// feedback request; full-grid refreshes run on a background worker and are
/// published atomically. Sessions are independent of each other; within a
/// session, a second submission while one is in flight gets 409.
///
/// The handler methods can be called directly (tests, embedding) or through
/// the HTTP server started with start() / listen().
class SessionService {
public:
    explicit SessionService(ServiceOptions options = {});
    ~SessionService();
    SessionService(const SessionService&) = delete;
    SessionService& operator=(const SessionService&) = delete;

    /// POST /sessions  {"config": name | object, "seed"?: integer}
    ServiceResponse create_session(const std::string& body);
    /// POST /sessions/{id}/feedback  {"label", "preference"?, "trial_token"?}
    ServiceResponse submit_feedback(const std::string& id, const std::string& body);
    /// GET /sessions/{id}/posterior?pair=d1,d2
    ServiceResponse posterior(const std::string& id, const std::string& pair);
    /// GET /sessions/{id}
    ServiceResponse status(const std::string& id);
    /// GET /sessions/{id}/export[?file=name]
    ServiceResponse export_files(const std::string& id, const std::string& file = "");
    /// GET /configs
    ServiceResponse list_configs();

    /// Blocks until no background refresh is queued or running.
    void wait_idle();

    /// Binds and serves on a background thread; returns the bound port.
    int start();
    /// Binds and serves on the calling thread until stop().
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace roial

#endif  // ROIAL_SERVICE_HPP
