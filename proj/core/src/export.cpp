#include "roial/export.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

namespace roial {

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    if (res.ec != std::errc{}) {
        throw std::runtime_error("format_double: conversion failed");
    }
    return std::string(buf, res.ptr);
}

namespace {

std::string coordinate_header(const ActionSpace& space) {
    std::string out;
    for (const auto& d : space.dims()) {
        out += ',';
        out += d.name;
    }
    return out;
}

std::string coordinate_fields(const ActionSpace& space, ActionIndex a) {
    std::string out;
    for (double x : space.coordinates(a)) {
        out += ',';
        out += format_double(x);
    }
    return out;
}

}  // namespace

DatasetExport export_dataset(const Session& session) {
    const ActionSpace& space = session.space();
    DatasetExport out;
    out.ordinals = "trial,action_index" + coordinate_header(space) + ",label\n";
    out.preferences = "trial,winner,loser\n";
    const auto& transcript = session.transcript();
    for (std::size_t i = 0; i < transcript.size(); ++i) {
        const TrialRecord& rec = transcript[i];
        out.ordinals += std::to_string(rec.trial) + ',' + std::to_string(rec.action)
                        + coordinate_fields(space, rec.action) + ',' + std::to_string(rec.label) + '\n';
        if (rec.preference == PreferenceAnswer::kSkip || i == 0) {
            continue;
        }
        const ActionIndex prev = transcript[i - 1].action;
        const bool current_wins = rec.preference == PreferenceAnswer::kCurrent;
        const ActionIndex winner = current_wins ? rec.action : prev;
        const ActionIndex loser = current_wins ? prev : rec.action;
        out.preferences += std::to_string(rec.trial) + ',' + std::to_string(winner) + ',' + std::to_string(loser) + '\n';
    }
    if (const auto& grid = session.grid()) {
        std::string csv = "action_index" + coordinate_header(space) + ",mean,sigma\n";
        for (ActionIndex a = 0; a < space.size(); ++a) {
            const auto k = static_cast<Eigen::Index>(a);
            csv += std::to_string(a) + coordinate_fields(space, a) + ',' + format_double(grid->mean[k]) + ','
                   + format_double(grid->stddev[k]) + '\n';
        }
        out.posterior_grid = std::move(csv);
    }
    return out;
}

std::vector<std::filesystem::path> write_export(const DatasetExport& files, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    auto put = [&](const char* name, const std::string& body) {
        const auto path = dir / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write " + path.string());
        }
        out << body;
        if (!out) {
            throw std::runtime_error("write failed for " + path.string());
        }
        written.push_back(path);
    };
    put("ordinals.csv", files.ordinals);
    put("preferences.csv", files.preferences);
    if (files.posterior_grid) {
        put("posterior_grid.csv", *files.posterior_grid);
    }
    return written;
}

}  // namespace roial
