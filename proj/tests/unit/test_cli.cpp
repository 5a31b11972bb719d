#include <doctest.h>

#include <cstdlib>

#include "test_util.hpp"

#ifdef ROIAL_CLI_PATH

namespace {

int run(const std::string& args, const std::filesystem::path& out, const std::filesystem::path& err) {
    const std::string cmd = std::string(ROIAL_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("run-session twice with the same seed gives identical exports") {
    const auto dir = roial::test::scratch_dir("cli");
    CHECK(run("run-session --simulated --seed 7 --config gait --out " + (dir / "a").string(), dir / "o1", dir / "e1") == 0);
    CHECK(run("run-session --simulated --seed 7 --config gait --out " + (dir / "b").string(), dir / "o2", dir / "e2") == 0);
    for (const char* f : {"ordinals.csv", "preferences.csv", "posterior_grid.csv"}) {
        CHECK(roial::test::read_file(dir / "a" / f) == roial::test::read_file(dir / "b" / f));
    }
    CHECK(roial::test::read_file(dir / "o1") == roial::test::read_file(dir / "o2"));
    const auto summary = nlohmann::json::parse(roial::test::read_file(dir / "o1"));
    CHECK(summary["completed_trials"] == 40);
    CHECK(summary["feature_importance"].size() == 4);
    std::filesystem::remove_all(dir);
}

TEST_CASE("interrupted run resumes from its snapshot and export checks the config") {
    const auto dir = roial::test::scratch_dir("cli");
    const auto snap = (dir / "s.json").string();
    CHECK(run("run-session --simulated --config gait --out " + (dir / "full").string(), dir / "o", dir / "e") == 0);
    CHECK(run("run-session --simulated --config gait --stop-after 17 --snapshot " + snap, dir / "o", dir / "e") == 0);
    CHECK(run("run-session --simulated --resume " + snap + " --snapshot " + snap, dir / "o", dir / "e") == 0);
    CHECK(run("export --snapshot " + snap + " --out " + (dir / "x").string() + " --config gait", dir / "o", dir / "e") == 0);
    for (const char* f : {"ordinals.csv", "preferences.csv", "posterior_grid.csv"}) {
        CHECK(roial::test::read_file(dir / "full" / f) == roial::test::read_file(dir / "x" / f));
    }
    CHECK(run("export --snapshot " + snap + " --out " + (dir / "y").string() + " --config sim3d", dir / "o", dir / "e") == 1);
    const auto err = nlohmann::json::parse(roial::test::read_file(dir / "e"));
    CHECK(err["error"]["code"] == "snapshot");
    std::filesystem::remove_all(dir);
}

TEST_CASE("usage and config errors are structured") {
    const auto dir = roial::test::scratch_dir("cli");
    CHECK(run("run-session --frobnicate", dir / "o", dir / "e") == 2);
    CHECK(nlohmann::json::parse(roial::test::read_file(dir / "e"))["error"]["code"] == "usage");
    CHECK(run("run-study --study sideways", dir / "o", dir / "e") == 2);
    {
        std::ofstream bad(dir / "bad.json");
        auto doc = nlohmann::json::parse(roial::test::read_file(std::filesystem::path(ROIAL_TEST_CONFIG_DIR) / "gait.json"));
        doc["ordinal"]["thresholds"] = {1.0, -1.0, 0.0};
        bad << doc.dump();
    }
    CHECK(run("run-session --simulated --config " + (dir / "bad.json").string(), dir / "o", dir / "e") == 1);
    const auto err = nlohmann::json::parse(roial::test::read_file(dir / "e"));
    CHECK(err["error"]["code"] == "invalid_config");
    CHECK(err["error"]["violations"][0]["path"] == "ordinal.thresholds");
    std::filesystem::remove_all(dir);
}

TEST_CASE("run-study writes one tidy CSV covering every subset size") {
    const auto dir = roial::test::scratch_dir("cli");
    CHECK(run("run-study --study subset --config sim3d_small --functions 1 --trials 3 --eval-points 100 --quiet --out "
                  + (dir / "results").string(),
              dir / "o", dir / "e") == 0);
    const auto out = nlohmann::json::parse(roial::test::read_file(dir / "o"));
    REQUIRE(out["files"].size() == 2);
    const auto csv = roial::test::read_file(out["files"][0].get<std::string>());
    for (const char* v : {",M=5,", ",M=50,", ",M=500,", ",M=all,"}) {
        CHECK(csv.find(v) != std::string::npos);
    }
    std::filesystem::remove_all(dir);
}

#endif
