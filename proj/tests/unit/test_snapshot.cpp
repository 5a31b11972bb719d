#include <doctest.h>

#include "roial/errors.hpp"
#include "roial/export.hpp"
#include "roial/snapshot.hpp"
#include "roial/study.hpp"
#include "test_util.hpp"

using namespace roial;

namespace {

std::vector<ActionIndex> actions_of(const Session& s) {
    std::vector<ActionIndex> out;
    for (const auto& r : s.transcript()) {
        out.push_back(r.action);
    }
    return out;
}

}  // namespace

TEST_CASE("snapshot at trial 15 continues exactly like an uninterrupted run") {
    const auto cfg = test::named_config("gait");
    const auto truth = simulation_truth(cfg, 77);

    Session straight(cfg);
    run_simulated_user(straight, truth, 5, 30);

    Session first(cfg);
    run_simulated_user(first, truth, 5, 15);
    const auto dir = test::scratch_dir("snap");
    save_snapshot(first, dir / "s.json");
    Session resumed = load_snapshot(dir / "s.json", cfg);
    CHECK(resumed.query() == first.query());
    run_simulated_user(resumed, truth, 5, 15);

    CHECK(actions_of(resumed) == actions_of(straight));
    CHECK(resumed.query() == straight.query());
    std::filesystem::remove_all(dir);
}

TEST_CASE("empty session snapshot replays the first action") {
    const auto cfg = test::named_config("gait");
    Session s(cfg);
    const auto restored = restore_snapshot(snapshot_json(s));
    CHECK(restored.query() == s.query());
    CHECK(restored.completed_trials() == 0);
}

TEST_CASE("snapshots carry the full-grid posterior bit for bit") {
    auto cfg = test::named_config("gait");
    Session s(cfg);
    run_simulated_user(s, simulation_truth(cfg, 1), 2, 12);
    REQUIRE(s.grid());
    const auto restored = restore_snapshot(snapshot_json(s));
    REQUIRE(restored.grid());
    CHECK(restored.grid()->trial == s.grid()->trial);
    CHECK(restored.grid()->mean == s.grid()->mean);
    CHECK(restored.grid()->stddev == s.grid()->stddev);
    CHECK(export_dataset(restored).posterior_grid == export_dataset(s).posterior_grid);
}

TEST_CASE("mismatched config hash is refused") {
    const auto cfg = test::named_config("gait");
    Session s(cfg);
    s.submit(2);
    auto other = cfg;
    other.lambda = 0.0;
    CHECK_THROWS_AS(restore_snapshot(snapshot_json(s), other), SnapshotError);
    CHECK_NOTHROW(restore_snapshot(snapshot_json(s), cfg));
}

TEST_CASE("corrupted or foreign snapshots are refused") {
    const auto cfg = test::named_config("gait");
    Session s(cfg);
    s.submit(2);
    s.submit(3, PreferenceAnswer::kCurrent);

    auto doc = snapshot_json(s);
    doc["payload"]["transcript"][1]["label"] = 4;
    CHECK_THROWS_AS(restore_snapshot(doc), SnapshotError);

    doc = snapshot_json(s);
    doc["version"] = kSnapshotVersion + 1;
    CHECK_THROWS_AS(restore_snapshot(doc), SnapshotError);

    doc = snapshot_json(s);
    doc["format"] = "something-else";
    CHECK_THROWS_AS(restore_snapshot(doc), SnapshotError);

    // Consistent checksum but a transcript the engine would never produce.
    doc = snapshot_json(s);
    doc["payload"]["transcript"][1]["action"] = (s.transcript()[1].action + 1) % 1750;
    doc["checksum"] = sha256_hex(doc["payload"].dump());
    CHECK_THROWS_AS(restore_snapshot(doc), SnapshotError);

    const auto dir = test::scratch_dir("snapbad");
    {
        std::ofstream out(dir / "trunc.json");
        out << snapshot_json(s).dump().substr(0, 40);
    }
    CHECK_THROWS_AS(load_snapshot(dir / "trunc.json"), SnapshotError);
    CHECK_THROWS_AS(load_snapshot(dir / "absent.json"), SnapshotError);
    std::filesystem::remove_all(dir);
}
