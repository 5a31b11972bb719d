#ifndef ROIAL_SNAPSHOT_HPP
#define ROIAL_SNAPSHOT_HPP

#include <filesystem>
#include <optional>

#include <nlohmann/json.hpp>

#include "roial/session.hpp"

namespace roial {

inline constexpr int kSnapshotVersion = 1;
inline constexpr const char* kSnapshotFormat = "roial-session-snapshot";

/// Self-describing snapshot document:
///   {"format", "version", "config_hash", "payload", "checksum"}
/// where checksum is the SHA-256 of payload.dump(). The payload holds the
/// config, the trial transcript, the pending query and the latest full-grid
/// posterior. RNG state is never stored; it is re-derived from the seed.
nlohmann::json snapshot_json(const Session& session);

/// Verifies format, version, checksum and config hash, then replays the
/// transcript. When `expected` is given its hash must match the snapshot's.
/// Throws SnapshotError on any mismatch.
Session restore_snapshot(const nlohmann::json& doc, const std::optional<ExperimentConfig>& expected = std::nullopt);

/// Writes atomically (temporary file, then rename).
void save_snapshot(const Session& session, const std::filesystem::path& path);
Session load_snapshot(const std::filesystem::path& path,
                      const std::optional<ExperimentConfig>& expected = std::nullopt);

}  // namespace roial

#endif  // ROIAL_SNAPSHOT_HPP
