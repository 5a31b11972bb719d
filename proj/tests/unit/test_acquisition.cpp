#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "roial/acquisition.hpp"
#include "test_util.hpp"

using namespace roial;

namespace {

LikelihoodModel model5(double cp = 0.1, double co = 0.1) {
    return {PreferenceModel{cp}, OrdinalScale({-0.84, -0.25, 0.25, 0.84}, co), Link{}};
}

// Independent re-implementation of the expected outcome distribution:
// column 0 = candidate preferred, column 1 = previous preferred.
Eigen::MatrixXd oracle_table(const std::vector<double>& cand, const std::vector<double>& prev,
                             const std::vector<double>& b, double co, double cp) {
    const int r = static_cast<int>(b.size()) + 1;
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(r, prev.empty() ? 1 : 2);
    for (std::size_t l = 0; l < cand.size(); ++l) {
        for (int y = 1; y <= r; ++y) {
            const double hi = y == r ? 1.0 : test::logistic((b[y - 1] - cand[l]) / co);
            const double lo = y == 1 ? 0.0 : test::logistic((b[y - 2] - cand[l]) / co);
            const double py = hi - lo;
            if (prev.empty()) {
                t(y - 1, 0) += py;
            } else {
                const double ps = test::logistic((cand[l] - prev[l]) / cp);
                t(y - 1, 0) += ps * py;
                t(y - 1, 1) += (1.0 - ps) * py;
            }
        }
    }
    return t / static_cast<double>(cand.size());
}

double entropy(const Eigen::MatrixXd& p) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double v = p.data()[i];
        if (v > 0) {
            h -= v * std::log(v);
        }
    }
    return h;
}

double oracle_gain(const std::vector<double>& cand, const std::vector<double>& prev, const std::vector<double>& b,
                   double co, double cp) {
    double cond = 0.0;
    for (std::size_t l = 0; l < cand.size(); ++l) {
        const std::vector<double> c1{cand[l]};
        const std::vector<double> p1 = prev.empty() ? std::vector<double>{} : std::vector<double>{prev[l]};
        cond += entropy(oracle_table(c1, p1, b, co, cp));
    }
    return std::max(0.0, entropy(oracle_table(cand, prev, b, co, cp)) - cond / static_cast<double>(cand.size()));
}

std::vector<double> normals(std::size_t n, unsigned seed, double mu = 0.0, double sd = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(mu, sd);
    std::vector<double> v(n);
    for (auto& x : v) {
        x = z(rng);
    }
    return v;
}

}  // namespace

TEST_CASE("subset draws") {
    auto rng = make_stream(1, Stream::kSubset);
    auto all = draw_subset(20, 20, rng);
    std::vector<ActionIndex> expected(20);
    std::iota(expected.begin(), expected.end(), ActionIndex{0});
    CHECK(all == expected);
    CHECK(draw_subset(20, 50, rng) == expected);

    auto s = draw_subset(1750, 500, rng);
    CHECK(s.size() == 500);
    CHECK(std::set<ActionIndex>(s.begin(), s.end()).size() == 500);
    CHECK(std::is_sorted(s.begin(), s.end()));
    CHECK(s.back() < 1750);
}

TEST_CASE("subset inclusion frequencies pass a binomial test") {
    const std::size_t A = 40, M = 20, draws = 10000;
    std::vector<int> hits(A, 0);
    auto rng = make_stream(5, Stream::kSubset);
    for (std::size_t t = 0; t < draws; ++t) {
        for (auto a : draw_subset(A, M, rng)) {
            ++hits[a];
        }
    }
    const double p = 0.5;
    const double sd = std::sqrt(draws * p * (1 - p));
    for (int h : hits) {
        CHECK(std::abs(h - draws * p) <= 3 * sd);
    }
}

TEST_CASE("ROI mask") {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> mu{0.0, 0.5, -3.0}, sd{1.0, 1.0, 0.1};
    CHECK(roi_mask(mu, sd, RoiConfig{inf, 0.0}) == std::vector<bool>{true, true, true});
    // 0.5 - 0.45 = 0.05 > 0.
    CHECK(roi_mask(mu, sd, RoiConfig{-0.45, 0.0})[1]);
    // Exactly on the threshold is excluded.
    std::vector<double> m2{0.25}, s2{0.5};
    CHECK_FALSE(roi_mask(m2, s2, RoiConfig{0.5, 0.5})[0]);
    CHECK(roi_mask(m2, s2, RoiConfig{0.5, 0.4999})[0]);
}

TEST_CASE("outcome table in the deterministic limit") {
    const auto m = LikelihoodModel{PreferenceModel{1e-6}, OrdinalScale({-0.84, -0.25, 0.25, 0.84}, 1e-6), Link{}};
    const std::vector<double> cand{0.0}, prev{-2.0};
    const auto t = outcome_probs(PairSamples{cand, prev}, m);
    CHECK(t(3, 0) == doctest::Approx(1.0));
    CHECK(t.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("outcome tables sum to one and match an independent formula") {
    const std::vector<double> b{-0.84, -0.25, 0.25, 0.84};
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> noise(0.05, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const double co = noise(rng), cp = noise(rng);
        const auto m = model5(cp, co);
        const std::size_t L = 1 + trial * 7;
        const auto cand = normals(L, 100 + trial, 0.2, 0.8);
        const auto prev = normals(L, 200 + trial, -0.1, 0.5);
        const auto with = outcome_probs(PairSamples{cand, prev}, m);
        const auto without = outcome_probs(PairSamples{cand, {}}, m);
        CHECK(std::abs(with.sum() - 1.0) <= 1e-9);
        CHECK(std::abs(without.sum() - 1.0) <= 1e-9);
        CHECK((with.matrix() - oracle_table(cand, prev, b, co, cp)).lpNorm<Eigen::Infinity>() <= 1e-12);
        CHECK((without.matrix() - oracle_table(cand, {}, b, co, cp)).lpNorm<Eigen::Infinity>() <= 1e-12);
        const double ig = info_gain(PairSamples{cand, prev}, m);
        CHECK(ig >= 0.0);
        CHECK(ig <= std::log(2.0 * 5) + 1e-12);
        CHECK(ig == doctest::Approx(oracle_gain(cand, prev, b, co, cp)).epsilon(1e-10));
    }
}

TEST_CASE("information gain degenerate cases") {
    const auto m = model5();
    const std::vector<double> one{0.3}, prev_one{0.1};
    CHECK(info_gain(PairSamples{one, prev_one}, m) == 0.0);
    const std::vector<double> same(50, 0.7), prev_same(50, -0.2);
    CHECK(info_gain(PairSamples{same, prev_same}, m) == doctest::Approx(0.0).epsilon(1e-12));

    // Two equally likely worlds that differ only in which action is better.
    const auto sharp = LikelihoodModel{PreferenceModel{1e-6}, OrdinalScale({-10.0}, 1e-6), Link{}};
    const std::vector<double> cand{1.0, -1.0}, prev{-1.0, 1.0};
    CHECK(info_gain(PairSamples{cand, prev}, sharp) == doctest::Approx(std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("information gain bound over random sample sets") {
    for (int r : {2, 4, 5}) {
        std::vector<double> b;
        for (int j = 1; j < r; ++j) {
            b.push_back(-1.0 + 2.0 * j / r);
        }
        const LikelihoodModel m{PreferenceModel{0.05}, OrdinalScale(b, 0.05), Link{}};
        for (unsigned seed = 0; seed < 20; ++seed) {
            const auto cand = normals(200, seed, 0.0, 2.0);
            const auto prev = normals(200, seed + 99, 0.0, 2.0);
            const double ig = info_gain(PairSamples{cand, prev}, m);
            CHECK(ig >= 0.0);
            CHECK(ig <= std::log(2.0 * r) + 1e-12);
        }
    }
}

namespace {

struct Toy {
    std::shared_ptr<const SquaredExponentialKernel> kernel;
    LikelihoodModel model = model5();
    PosteriorState post;
    std::vector<ActionIndex> subset;

    static PosteriorState fit(const std::shared_ptr<const SquaredExponentialKernel>& k, const LikelihoodModel& m,
                              const std::vector<ActionIndex>& idx) {
        FeedbackDataset d;
        d.ordinals = {{3, 2}, {12, 4}, {20, 3}};
        d.preferences = {{12, 3}, {12, 20}};
        return laplace_fit(d, idx, k, m);
    }

    Toy()
        : kernel(std::make_shared<SquaredExponentialKernel>(ActionSpace({{"x", 0, 1, 25}}),
                                                            KernelConfig{1.0, {0.15}, 1e-6})),
          post(fit(kernel, model, all())),
          subset(all()) {}

    static std::vector<ActionIndex> all() {
        std::vector<ActionIndex> v(25);
        std::iota(v.begin(), v.end(), ActionIndex{0});
        return v;
    }
};

}  // namespace

TEST_CASE("selection matches an exhaustive scan of information gain") {
    Toy toy;
    const ActionIndex previous = 20;
    SelectionOptions opts;
    opts.num_samples = 400;
    auto sample_rng = make_stream(3, Stream::kPosteriorSamples);
    auto tie_rng = make_stream(3, Stream::kTieBreak);
    const auto sel = select_action(toy.subset, previous, toy.post, opts, toy.model, sample_rng, tie_rng);

    // Same standard normals, bivariate draws from a 2x2 Cholesky factor.
    auto rng = make_stream(3, Stream::kPosteriorSamples);
    std::normal_distribution<double> z;
    std::vector<double> z1(opts.num_samples), z2(opts.num_samples);
    for (std::size_t l = 0; l < opts.num_samples; ++l) {
        z1[l] = z(rng);
        z2[l] = z(rng);
    }
    const Eigen::MatrixXd cov = toy.post.covariance();
    const std::vector<double> b{-0.84, -0.25, 0.25, 0.84};
    const auto p = static_cast<Eigen::Index>(previous);
    double best = -1.0;
    ActionIndex best_a = 0;
    for (ActionIndex a : toy.subset) {
        const auto i = static_cast<Eigen::Index>(a);
        const double l11 = std::sqrt(cov(p, p));
        const double l21 = cov(i, p) / l11;
        const double l22 = std::sqrt(std::max(0.0, cov(i, i) - l21 * l21));
        std::vector<double> fc(opts.num_samples), fp(opts.num_samples);
        for (std::size_t l = 0; l < opts.num_samples; ++l) {
            fp[l] = toy.post.mean()[p] + l11 * z1[l];
            fc[l] = toy.post.mean()[i] + l21 * z1[l] + l22 * z2[l];
        }
        const double g = oracle_gain(fc, fp, b, 0.1, 0.1);
        if (g > best) {
            best = g;
            best_a = a;
        }
    }
    CHECK(sel.action == best_a);
    CHECK(sel.info_gain == doctest::Approx(best).epsilon(1e-8));
    CHECK(sel.roi_size == toy.subset.size());
    CHECK_FALSE(sel.roi_fallback);
}

TEST_CASE("single-candidate subset returns that action") {
    Toy toy;
    const std::vector<ActionIndex> one{7};
    SelectionOptions opts;
    opts.num_samples = 50;
    auto a = make_stream(1, Stream::kPosteriorSamples);
    auto b = make_stream(1, Stream::kTieBreak);
    CHECK(select_action(one, std::nullopt, toy.post, opts, toy.model, a, b).action == 7);
}

TEST_CASE("ties are broken uniformly and reproducibly") {
    // Identical candidates far from any data: equal gain for all of them.
    auto k = std::make_shared<SquaredExponentialKernel>(ActionSpace({{"x", 0, 1, 30}}), KernelConfig{1.0, {1e-3}, 1e-6});
    const auto m = model5();
    std::vector<ActionIndex> idx(30);
    std::iota(idx.begin(), idx.end(), ActionIndex{0});
    const auto post = laplace_fit(FeedbackDataset{}, idx, k, m);
    SelectionOptions opts;
    opts.num_samples = 30;
    std::set<ActionIndex> seen;
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        auto a = make_stream(1, Stream::kPosteriorSamples);
        auto b = make_stream(seed, Stream::kTieBreak);
        const auto sel = select_action(idx, std::nullopt, post, opts, m, a, b);
        CHECK(sel.num_tied == 30);
        seen.insert(sel.action);
        auto a2 = make_stream(1, Stream::kPosteriorSamples);
        auto b2 = make_stream(seed, Stream::kTieBreak);
        CHECK(select_action(idx, std::nullopt, post, opts, m, a2, b2).action == sel.action);
    }
    CHECK(seen.size() > 10);
}

TEST_CASE("ROI restricts candidates and falls back when empty") {
    Toy toy;
    SelectionOptions opts;
    opts.num_samples = 100;
    opts.roi = RoiConfig{-0.45, -0.84};
    auto a = make_stream(2, Stream::kPosteriorSamples);
    auto b = make_stream(2, Stream::kTieBreak);
    const auto sel = select_action(toy.subset, 20, toy.post, opts, toy.model, a, b);
    const auto& mu = toy.post.mean();
    const auto& sd = toy.post.stddev();
    const auto i = static_cast<Eigen::Index>(sel.action);
    CHECK(mu[i] - 0.45 * sd[i] > -0.84);
    std::size_t expected = 0;
    for (Eigen::Index k = 0; k < mu.size(); ++k) {
        expected += mu[k] - 0.45 * sd[k] > -0.84 ? 1 : 0;
    }
    CHECK(sel.roi_size == expected);

    opts.roi = RoiConfig{-0.45, 100.0};
    auto a2 = make_stream(2, Stream::kPosteriorSamples);
    auto b2 = make_stream(2, Stream::kTieBreak);
    const auto fb = select_action(toy.subset, 20, toy.post, opts, toy.model, a2, b2);
    CHECK(fb.roi_fallback);
    CHECK(fb.roi_size == 0);
}

TEST_CASE("selection input validation") {
    Toy toy;
    SelectionOptions opts;
    auto a = make_stream(1, Stream::kPosteriorSamples);
    auto b = make_stream(1, Stream::kTieBreak);
    CHECK_THROWS_AS(select_action({}, std::nullopt, toy.post, opts, toy.model, a, b), std::invalid_argument);
    const std::vector<ActionIndex> outside{99};
    CHECK_THROWS_AS(select_action(outside, std::nullopt, toy.post, opts, toy.model, a, b), std::invalid_argument);
}
