#ifndef ROIAL_TEST_UTIL_HPP
#define ROIAL_TEST_UTIL_HPP

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "roial/config.hpp"

namespace roial::test {

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline ExperimentConfig named_config(const std::string& name) {
    return load_config(std::filesystem::path(ROIAL_TEST_CONFIG_DIR) / (name + ".json"));
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    auto dir = std::filesystem::temp_directory_path() / ("roial_test_" + tag + "_" + std::to_string(rng() % 1000000));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Plain logistic, independent of the library's link implementation.
inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace roial::test

#endif  // ROIAL_TEST_UTIL_HPP
