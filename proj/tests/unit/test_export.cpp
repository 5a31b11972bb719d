#include <doctest.h>

#include <sstream>

#include "roial/export.hpp"
#include "roial/study.hpp"
#include "test_util.hpp"

using namespace roial;

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            cells.push_back(cell);
        }
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST_CASE("shortest round-trip formatting") {
    for (double v : {0.1, -1.0 / 3.0, 1e-300, 123456789.123, 0.0, 2.5}) {
        CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(2.5) == "2.5");
}

TEST_CASE("empty session exports header-only files") {
    Session s(test::named_config("gait"));
    const auto files = export_dataset(s);
    CHECK(files.ordinals == "trial,action_index,SL,SD,PR,PP,label\n");
    CHECK(files.preferences == "trial,winner,loser\n");
    CHECK_FALSE(files.posterior_grid);
}

TEST_CASE("finished gait session export") {
    const auto cfg = test::named_config("gait");
    Session s(cfg);
    run_simulated_user(s, simulation_truth(cfg, 4), 6);
    REQUIRE(s.finished());
    const auto files = export_dataset(s);
    const auto ord = parse_csv(files.ordinals);
    const auto pref = parse_csv(files.preferences);
    CHECK(ord.size() == 41);
    CHECK(pref.size() - 1 <= 39);
    CHECK(pref.size() - 1 == s.dataset().preferences.size());
    for (std::size_t i = 1; i < ord.size(); ++i) {
        const auto& rec = s.transcript()[i - 1];
        CHECK(std::stoul(ord[i][0]) == rec.trial);
        CHECK(std::stoul(ord[i][1]) == rec.action);
        const auto x = s.space().coordinates(rec.action);
        for (std::size_t d = 0; d < 4; ++d) {
            CHECK(std::stod(ord[i][2 + d]) == x[d]);
        }
        CHECK(std::stoi(ord[i][6]) == rec.label);
    }

    REQUIRE(files.posterior_grid);
    const auto grid = parse_csv(*files.posterior_grid);
    REQUIRE(grid.size() == 1751);
    CHECK(grid[0] == std::vector<std::string>{"action_index", "SL", "SD", "PR", "PP", "mean", "sigma"});
    for (std::size_t k = 0; k < 1750; ++k) {
        CHECK(std::stoul(grid[k + 1][0]) == k);
        CHECK(std::stod(grid[k + 1][5]) == s.grid()->mean[static_cast<Eigen::Index>(k)]);
        CHECK(std::stod(grid[k + 1][6]) == s.grid()->stddev[static_cast<Eigen::Index>(k)]);
    }

    const auto dir = test::scratch_dir("export");
    const auto paths = write_export(files, dir);
    CHECK(paths.size() == 3);
    CHECK(test::read_file(dir / "ordinals.csv") == files.ordinals);
    CHECK(test::read_file(dir / "posterior_grid.csv") == *files.posterior_grid);
    std::filesystem::remove_all(dir);
}
