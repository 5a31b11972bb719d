#include <doctest.h>

#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "roial/errors.hpp"
#include "roial/posterior.hpp"

using namespace roial;

namespace {

std::shared_ptr<const SquaredExponentialKernel> line_kernel(std::size_t bins, double lengthscale,
                                                            double jitter = 1e-6) {
    return std::make_shared<SquaredExponentialKernel>(ActionSpace({{"x", 0, 1, bins}}),
                                                      KernelConfig{1.0, {lengthscale}, jitter});
}

std::vector<ActionIndex> all_actions(std::size_t n) {
    std::vector<ActionIndex> v(n);
    std::iota(v.begin(), v.end(), ActionIndex{0});
    return v;
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Damped joint Newton iteration over every action, with the step
// f <- K (I + W K)^-1 (W f - g) and backtracking on the negative log
// posterior. Uses no part of the library's fitting code.
Eigen::VectorXd joint_newton(const FeedbackDataset& data, const std::vector<ActionIndex>& idx,
                             const SquaredExponentialKernel& k, const LikelihoodModel& m) {
    const auto local = localize(data, idx);
    const Eigen::MatrixXd K = k.covariance(idx);
    const Eigen::LDLT<Eigen::MatrixXd> K_ldlt(K);
    const auto n = static_cast<Eigen::Index>(idx.size());
    auto objective = [&](const Eigen::VectorXd& f) {
        return 0.5 * f.dot(K_ldlt.solve(f)) + neg_log_likelihood(local, f, m);
    };
    Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
    for (int it = 0; it < 500; ++it) {
        const auto terms = neg_log_likelihood_terms(local, f, m);
        const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) + terms.hessian * K;
        const Eigen::VectorXd dir = K * A.partialPivLu().solve(terms.hessian * f - terms.gradient) - f;
        double step = 1.0;
        const double current = objective(f);
        while (step > 1e-10 && objective(f + step * dir) > current) {
            step *= 0.5;
        }
        f += step * dir;
        if ((step * dir).lpNorm<Eigen::Infinity>() < 1e-12) {
            break;
        }
    }
    return f;
}

}  // namespace

TEST_CASE("empty dataset returns the prior") {
    auto k = line_kernel(6, 0.3);
    LikelihoodModel m{PreferenceModel{0.1}, OrdinalScale({0.0}, 0.1), Link{}};
    const std::vector<ActionIndex> idx{0, 2, 5};
    const auto post = laplace_fit(FeedbackDataset{}, idx, k, m);
    CHECK(post.mean().isZero());
    CHECK((post.covariance() - k->covariance(idx)).norm() < 1e-12);
}

TEST_CASE("a single preference orders the two actions") {
    auto k = line_kernel(2, 0.5);
    LikelihoodModel m{PreferenceModel{0.1}, OrdinalScale({0.0}, 0.1), Link{}};
    FeedbackDataset d;
    d.preferences = {{0, 1}};
    const auto post = laplace_fit(d, all_actions(2), k, m);
    CHECK(post.mean()[0] > post.mean()[1]);
    CHECK(post.mean()[0] == doctest::Approx(-post.mean()[1]));
}

TEST_CASE("mode matches brute-force search of the log posterior") {
    // Three actions, two preferences and two ordinal labels.
    auto k = line_kernel(3, 0.5, 1e-4);
    const std::vector<ActionIndex> idx{0, 1, 2};
    LikelihoodModel m{PreferenceModel{0.5}, OrdinalScale({-0.5, 0.5}, 0.3), Link{}};
    FeedbackDataset d;
    d.preferences = {{0, 1}, {2, 1}};
    d.ordinals = {{0, 3}, {1, 1}};
    const auto post = laplace_fit(d, idx, k, m);

    const Eigen::Matrix3d Kinv = k->covariance(idx).inverse();
    const int n = 601;
    std::vector<double> grid(n);
    for (int i = 0; i < n; ++i) {
        grid[i] = -3.0 + 0.01 * i;
    }
    auto log_ord = [&](double f, int y) {
        const double hi = y == 3 ? 1.0 : sig((m.ordinal.thresholds()[y - 1] - f) / 0.3);
        const double lo = y == 1 ? 0.0 : sig((m.ordinal.thresholds()[y - 2] - f) / 0.3);
        return std::log(hi - lo);
    };
    // Separable tables: unary terms per action and pairwise terms per pair.
    std::vector<double> u0(n), u1(n), u2(n);
    for (int i = 0; i < n; ++i) {
        const double x = grid[i];
        u0[i] = log_ord(x, 3) - 0.5 * Kinv(0, 0) * x * x;
        u1[i] = log_ord(x, 1) - 0.5 * Kinv(1, 1) * x * x;
        u2[i] = -0.5 * Kinv(2, 2) * x * x;
    }
    std::vector<double> p01(n * n), p21(n * n), q02(n * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            p01[i * n + j] = std::log(sig((grid[i] - grid[j]) / 0.5)) - Kinv(0, 1) * grid[i] * grid[j];
            p21[i * n + j] = std::log(sig((grid[i] - grid[j]) / 0.5)) - Kinv(2, 1) * grid[i] * grid[j];
            q02[i * n + j] = -Kinv(0, 2) * grid[i] * grid[j];
        }
    }
    double best = -1e300;
    int bi = 0, bj = 0, bl = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double partial = u0[i] + u1[j] + p01[i * n + j];
            for (int l = 0; l < n; ++l) {
                const double s = partial + u2[l] + p21[l * n + j] + q02[i * n + l];
                if (s > best) {
                    best = s;
                    bi = i;
                    bj = j;
                    bl = l;
                }
            }
        }
    }
    CHECK(std::abs(post.mean()[0] - grid[bi]) <= 1e-2);
    CHECK(std::abs(post.mean()[1] - grid[bj]) <= 1e-2);
    CHECK(std::abs(post.mean()[2] - grid[bl]) <= 1e-2);
}

TEST_CASE("fitting on touched actions equals a joint fit over the whole line") {
    auto k = line_kernel(20, 0.15);
    LikelihoodModel m{PreferenceModel{0.1}, OrdinalScale({-0.84, -0.25, 0.25, 0.84}, 0.1), Link{}};
    FeedbackDataset d;
    d.ordinals = {{2, 1}, {7, 4}, {11, 5}, {15, 3}, {18, 2}};
    d.preferences = {{7, 2}, {11, 7}, {11, 15}, {15, 18}};
    const auto idx = all_actions(20);
    const Eigen::VectorXd joint = joint_newton(d, idx, *k, m);

    const auto touched = d.touched_actions();
    const auto post = laplace_fit(d, touched, k, m);
    const auto pred = predict(post, idx);
    CHECK((pred.mean - joint).lpNorm<Eigen::Infinity>() < 1e-3);
    CHECK((predict_mean(post, idx) - pred.mean).lpNorm<Eigen::Infinity>() < 1e-12);

    const auto full = laplace_fit(d, idx, k, m);
    CHECK((full.mean() - joint).lpNorm<Eigen::Infinity>() < 1e-3);
    CHECK((full.stddev() - pred.variance.cwiseSqrt()).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("predicting the inference set returns stored moments") {
    auto k = line_kernel(10, 0.2);
    LikelihoodModel m{PreferenceModel{0.1}, OrdinalScale({0.0}, 0.2), Link{}};
    FeedbackDataset d;
    d.ordinals = {{3, 2}, {6, 1}};
    d.preferences = {{3, 6}};
    const std::vector<ActionIndex> idx{1, 3, 6, 8};
    const auto post = laplace_fit(d, idx, k, m);
    const auto pred = predict(post, idx);
    CHECK(pred.mean == post.mean());
    CHECK(pred.variance == post.stddev().cwiseProduct(post.stddev()));
}

TEST_CASE("a point with no correlation to the data keeps its prior") {
    auto k = std::make_shared<SquaredExponentialKernel>(ActionSpace({{"x", 0, 1, 40}}), KernelConfig{1.0, {0.01}, 1e-6});
    LikelihoodModel m{PreferenceModel{0.1}, OrdinalScale({0.0}, 0.2), Link{}};
    FeedbackDataset d;
    d.ordinals = {{0, 2}, {1, 1}};
    const auto post = laplace_fit(d, d.touched_actions(), k, m);
    const std::vector<ActionIndex> far{39};
    const auto pred = predict(post, far);
    CHECK(pred.mean[0] == doctest::Approx(0.0));
    CHECK(pred.variance[0] == doctest::Approx(k->prior_variance()));
}

TEST_CASE("sample covariance converges to the posterior covariance") {
    auto k = line_kernel(5, 0.4);
    LikelihoodModel m{PreferenceModel{0.2}, OrdinalScale({0.0}, 0.3), Link{}};
    FeedbackDataset d;
    d.preferences = {{1, 3}};
    d.ordinals = {{1, 2}};
    const std::vector<ActionIndex> idx{1, 3};
    const auto post = laplace_fit(d, idx, k, m);
    const auto s = sample(post, 100000, 42);
    CHECK(s.rows() == 2);
    CHECK(s.cols() == 100000);
    const Eigen::VectorXd mu = s.rowwise().mean();
    const Eigen::MatrixXd c = s.colwise() - mu;
    const Eigen::MatrixXd cov = c * c.transpose() / static_cast<double>(s.cols() - 1);
    const Eigen::MatrixXd target = post.covariance();
    CHECK((cov - target).norm() / target.norm() < 0.02);
    CHECK((mu - post.mean()).norm() < 0.02);
}

TEST_CASE("zero samples gives an empty matrix") {
    auto k = line_kernel(3, 0.4);
    LikelihoodModel m{PreferenceModel{0.2}, OrdinalScale({0.0}, 0.3), Link{}};
    const std::vector<ActionIndex> idx{0, 1};
    const auto post = laplace_fit(FeedbackDataset{}, idx, k, m);
    CHECK(sample(post, 0, 1).cols() == 0);
}

TEST_CASE("sampling is deterministic per seed") {
    auto k = line_kernel(4, 0.4);
    LikelihoodModel m{PreferenceModel{0.2}, OrdinalScale({0.0}, 0.3), Link{}};
    const auto post = laplace_fit(FeedbackDataset{}, all_actions(4), k, m);
    CHECK(sample(post, 10, 9) == sample(post, 10, 9));
    CHECK(sample(post, 10, 9) != sample(post, 10, 10));
}

TEST_CASE("newton iteration limit raises ConvergenceError") {
    auto k = line_kernel(5, 0.3);
    LikelihoodModel m{PreferenceModel{0.01}, OrdinalScale({-0.5, 0.5}, 0.01), Link{}};
    FeedbackDataset d;
    d.preferences = {{0, 1}, {1, 2}, {2, 3}};
    d.ordinals = {{0, 3}, {3, 1}};
    LaplaceOptions opts;
    opts.max_iterations = 1;
    CHECK_THROWS_AS(laplace_fit(d, all_actions(5), k, m, opts), ConvergenceError);
}

TEST_CASE("feedback outside the inference set is rejected") {
    auto k = line_kernel(5, 0.3);
    LikelihoodModel m{PreferenceModel{0.1}, OrdinalScale({0.0}, 0.1), Link{}};
    FeedbackDataset d;
    d.ordinals = {{4, 1}};
    const std::vector<ActionIndex> idx{0, 1};
    CHECK_THROWS_AS(laplace_fit(d, idx, k, m), std::invalid_argument);
}

TEST_CASE("mode gradient meets tolerance and curvature is not clamped for log-concave likelihoods") {
    auto k = line_kernel(12, 0.2);
    LikelihoodModel m{PreferenceModel{0.1}, OrdinalScale({-0.84, -0.25, 0.25, 0.84}, 0.1), Link{}};
    FeedbackDataset d;
    d.ordinals = {{0, 5}, {4, 1}, {8, 3}, {11, 2}};
    d.preferences = {{0, 4}, {8, 4}, {8, 11}};
    const auto post = laplace_fit(d, all_actions(12), k, m);
    CHECK(post.gradient_norm() < 1e-6);
    CHECK(post.newton_iterations() <= 100);
    CHECK_FALSE(post.curvature_clamped());
    CHECK(post.data_indices() == d.touched_actions());
}
