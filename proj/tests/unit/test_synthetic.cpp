#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "roial/synthetic.hpp"
#include "test_util.hpp"

using namespace roial;

TEST_CASE("Hartmann3 minimum on a dense grid") {
    const int n = 200;
    double best = 1e9;
    std::array<double, 3> arg{};
    std::array<double, 3> x{};
    for (int i = 0; i < n; ++i) {
        x[0] = i / double(n - 1);
        for (int j = 0; j < n; ++j) {
            x[1] = j / double(n - 1);
            for (int k = 0; k < n; ++k) {
                x[2] = k / double(n - 1);
                const double v = hartmann3(x);
                if (v < best) {
                    best = v;
                    arg = x;
                }
            }
        }
    }
    CHECK(best == doctest::Approx(-3.86278).epsilon(1e-3));
    CHECK(arg[0] == doctest::Approx(0.1146).epsilon(0.05));
    CHECK(arg[1] == doctest::Approx(0.5556).epsilon(0.02));
    CHECK(arg[2] == doctest::Approx(0.8525).epsilon(0.02));
    const std::array<double, 3> known{0.114614, 0.555649, 0.852547};
    CHECK(hartmann3(known) == doctest::Approx(-3.86278).epsilon(1e-5));
    CHECK(-hartmann3(known) == doctest::Approx(3.86278).epsilon(1e-5));
}

TEST_CASE("Hartmann3 is continuous and rejects points outside the cube") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    for (int i = 0; i < 100; ++i) {
        std::array<double, 3> x{u(rng), u(rng), u(rng)};
        auto y = x;
        y[i % 3] += 1e-9;
        CHECK(std::abs(hartmann3(x) - hartmann3(y)) < 1e-6);
    }
    const std::array<double, 3> out{0.5, 1.2, 0.5};
    CHECK_THROWS_AS(hartmann3(out), std::domain_error);
}

TEST_CASE("Hartmann truth is negated and rescaled") {
    ActionSpace s({{"x1", 0, 1, 12}, {"x2", 0, 1, 12}, {"x3", 0, 1, 12}});
    const auto t = hartmann_truth(s, 5, 0.1, 0.02);
    CHECK(t.utility.minCoeff() == doctest::Approx(0.0));
    CHECK(t.utility.maxCoeff() == doctest::Approx(1.0));
    Eigen::Index best_truth = 0;
    t.utility.maxCoeff(&best_truth);
    ActionIndex best_raw = 0;
    double lowest = 1e9;
    for (ActionIndex k = 0; k < s.size(); ++k) {
        const double v = hartmann3(s.coordinates(k));
        if (v < lowest) {
            lowest = v;
            best_raw = k;
        }
    }
    CHECK(static_cast<ActionIndex>(best_truth) == best_raw);
    ActionSpace two({{"a", 0, 1, 3}, {"b", 0, 1, 3}});
    CHECK_THROWS(hartmann_truth(two, 5, 0.1, 0.02));
}

TEST_CASE("true category counts thresholds at or below f") {
    const std::vector<double> b{-1.0, 0.0, 1.0};
    CHECK(true_category(-5.0, b) == 1);
    CHECK(true_category(-1.0, b) == 2);
    CHECK(true_category(0.5, b) == 3);
    CHECK(true_category(7.0, b) == 4);
}

TEST_CASE("equal-mass thresholds split the grid into equal groups") {
    ActionSpace s({{"x1", 0, 1, 10}, {"x2", 0, 1, 10}, {"x3", 0, 1, 10}});
    auto rng = make_stream(4, Stream::kTruth);
    const auto f = sample_gp_utility(s, KernelConfig{}, rng);
    const auto t = make_truth(f, 5, 0.1, 0.02);
    std::vector<int> count(6, 0);
    for (auto y : t.categories) {
        ++count[y];
    }
    for (int y = 1; y <= 5; ++y) {
        CHECK(std::abs(count[y] - 200) <= 1);
    }
    CHECK(std::is_sorted(t.thresholds.begin(), t.thresholds.end()));
    for (ActionIndex k = 0; k < s.size(); ++k) {
        CHECK(t.roi[k] == (t.categories[k] != 1));
    }
}

TEST_CASE("seeded GP draws") {
    ActionSpace s({{"x1", 0, 1, 8}, {"x2", 0, 1, 8}});
    const auto a = sample_synthetic(s, KernelConfig{}, 5, 0.1, 0.02, 1);
    const auto b = sample_synthetic(s, KernelConfig{}, 5, 0.1, 0.02, 2);
    const auto a2 = sample_synthetic(s, KernelConfig{}, 5, 0.1, 0.02, 1);
    CHECK((a.utility - b.utility).lpNorm<Eigen::Infinity>() > 0.0);
    CHECK(a.utility == a2.utility);
}

TEST_CASE("GP draws have the kernel covariance") {
    ActionSpace s({{"x1", 0, 1, 4}, {"x2", 0, 1, 3}});
    const KernelConfig kc{1.3, {0.4, 0.7}, 1e-6};
    const std::size_t draws = 40000;
    const auto n = static_cast<Eigen::Index>(s.size());
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
    auto rng = make_stream(8, Stream::kTruth);
    for (std::size_t i = 0; i < draws; ++i) {
        const Eigen::VectorXd f = sample_gp_utility(s, kc, rng);
        acc += f * f.transpose();
    }
    acc /= static_cast<double>(draws);
    std::vector<ActionIndex> idx(s.size());
    std::iota(idx.begin(), idx.end(), ActionIndex{0});
    const Eigen::MatrixXd K = SquaredExponentialKernel(s, kc).covariance(idx);
    CHECK((acc - K).norm() / K.norm() < 0.03);
}

TEST_CASE("noiseless simulated user") {
    SyntheticTruth t = make_truth(Eigen::Vector4d(-1.0, 0.2, 0.2, 3.0), 2, 0.0, 0.0);
    auto rng = make_stream(1, Stream::kSimulatedUser);
    for (int i = 0; i < 20; ++i) {
        CHECK(simulated_feedback(t, 3, 0, rng).label == t.categories[3]);
        CHECK(simulated_feedback(t, 3, 0, rng).preference == PreferenceAnswer::kCurrent);
        CHECK(simulated_feedback(t, 0, 3, rng).preference == PreferenceAnswer::kPrevious);
        CHECK(simulated_feedback(t, 1, 2, rng).preference == PreferenceAnswer::kSkip);
    }
    CHECK(simulated_feedback(t, 1, std::nullopt, rng).preference == PreferenceAnswer::kSkip);
}

TEST_CASE("noiseless label between the second and third thresholds is always 3") {
    SyntheticTruth t;
    t.utility = Eigen::Vector2d(0.1, 5.0);
    t.thresholds = {-1.0, 0.0, 1.0, 2.0};
    t.categories = {3, 5};
    t.roi = {true, true};
    auto rng = make_stream(1, Stream::kSimulatedUser);
    for (int i = 0; i < 50; ++i) {
        CHECK(simulated_feedback(t, 0, std::nullopt, rng).label == 3);
    }
}

TEST_CASE("noisy labels follow the ordinal likelihood") {
    SyntheticTruth t;
    t.utility = Eigen::Vector2d(-0.1, 0.4);
    t.thresholds = {-0.84, -0.25, 0.25, 0.84};
    t.ordinal_noise = 0.1;
    t.preference_noise = 0.02;
    t.categories = {3, 4};
    t.roi = {true, true};
    const int draws = 100000;
    std::vector<double> freq(5, 0.0);
    double current = 0.0;
    auto rng = make_stream(12, Stream::kSimulatedUser);
    for (int i = 0; i < draws; ++i) {
        const auto r = simulated_feedback(t, 0, 1, rng);
        freq[r.label - 1] += 1.0 / draws;
        current += r.preference == PreferenceAnswer::kCurrent ? 1.0 / draws : 0.0;
    }
    double tv = 0.0;
    for (int y = 1; y <= 5; ++y) {
        const double hi = y == 5 ? 1.0 : test::logistic((t.thresholds[y - 1] + 0.1) / 0.1);
        const double lo = y == 1 ? 0.0 : test::logistic((t.thresholds[y - 2] + 0.1) / 0.1);
        tv += 0.5 * std::abs(freq[y - 1] - (hi - lo));
    }
    CHECK(tv < 0.01);
    CHECK(current == doctest::Approx(test::logistic(-0.5 / 0.02)).epsilon(0.01));
}
