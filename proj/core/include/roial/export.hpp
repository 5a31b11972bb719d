#ifndef ROIAL_EXPORT_HPP
#define ROIAL_EXPORT_HPP

#include <filesystem>
#include <optional>
#include <string>

#include "roial/session.hpp"

namespace roial {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// CSV exports of a session, as file contents.
///
///   ordinals.csv        trial,action_index,<dimension names...>,label
///   preferences.csv     trial,winner,loser
///   posterior_grid.csv  action_index,<dimension names...>,mean,sigma
///                       (only once a full-grid posterior exists)
struct DatasetExport {
    std::string ordinals;
    std::string preferences;
    std::optional<std::string> posterior_grid;
};

DatasetExport export_dataset(const Session& session);

/// Writes the files into `dir` (created if missing); returns the paths written.
std::vector<std::filesystem::path> write_export(const DatasetExport& files, const std::filesystem::path& dir);

}  // namespace roial

#endif  // ROIAL_EXPORT_HPP
