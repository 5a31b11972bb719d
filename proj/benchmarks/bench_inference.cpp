#include <algorithm>
#include <memory>
#include <numeric>
#include <vector>

#include <benchmark/benchmark.h>

#include "roial/acquisition.hpp"
#include "roial/posterior.hpp"
#include "roial/rng.hpp"

namespace {

roial::ActionSpace grid(std::size_t bins) {
    return roial::ActionSpace({{"x1", 0.0, 1.0, bins}, {"x2", 0.0, 1.0, bins}, {"x3", 0.0, 1.0, bins}});
}

roial::LikelihoodModel model() {
    return {roial::PreferenceModel{0.1}, roial::OrdinalScale({-0.84, -0.25, 0.25, 0.84}, 0.1),
            roial::Link(roial::LinkKind::kSigmoid)};
}

// Random walk of n trials with alternating labels and preferences.
roial::FeedbackDataset random_feedback(std::size_t num_actions, std::size_t n) {
    auto rng = roial::make_stream(7, roial::Stream::kSimulatedUser);
    std::uniform_int_distribution<roial::ActionIndex> pick(0, num_actions - 1);
    roial::FeedbackDataset data;
    roial::ActionIndex prev = pick(rng);
    data.ordinals.push_back({prev, 3});
    for (std::size_t t = 1; t < n; ++t) {
        const auto a = pick(rng);
        data.ordinals.push_back({a, static_cast<int>(1 + t % 5)});
        if (a != prev) {
            data.preferences.push_back(t % 2 ? roial::Preference{a, prev} : roial::Preference{prev, a});
        }
        prev = a;
    }
    return data;
}

struct Fixture {
    std::shared_ptr<const roial::SquaredExponentialKernel> kernel;
    roial::FeedbackDataset data;
    std::vector<roial::ActionIndex> subset;
    roial::LikelihoodModel lik = model();

    Fixture(std::size_t bins, std::size_t trials, std::size_t m) {
        kernel = std::make_shared<roial::SquaredExponentialKernel>(grid(bins), roial::KernelConfig{});
        data = random_feedback(kernel->space().size(), trials);
        auto rng = roial::make_stream(3, roial::Stream::kSubset);
        subset = roial::draw_subset(kernel->space().size(), m, rng);
        auto touched = data.touched_actions();
        subset.insert(subset.end(), touched.begin(), touched.end());
        std::sort(subset.begin(), subset.end());
        subset.erase(std::unique(subset.begin(), subset.end()), subset.end());
    }
};

void BM_LaplaceFit(benchmark::State& state) {
    Fixture fx(20, static_cast<std::size_t>(state.range(0)), 500);
    for (auto _ : state) {
        auto post = roial::laplace_fit(fx.data, fx.subset, fx.kernel, fx.lik);
        benchmark::DoNotOptimize(post.mean().data());
    }
}
BENCHMARK(BM_LaplaceFit)->Arg(20)->Arg(80)->Arg(240)->Unit(benchmark::kMillisecond);

void BM_SelectAction(benchmark::State& state) {
    Fixture fx(20, 80, static_cast<std::size_t>(state.range(0)));
    const auto post = roial::laplace_fit(fx.data, fx.subset, fx.kernel, fx.lik);
    const auto previous = fx.data.ordinals.back().action;
    roial::SelectionOptions opts;
    for (auto _ : state) {
        auto sample_rng = roial::make_stream(1, roial::Stream::kPosteriorSamples);
        auto tie_rng = roial::make_stream(1, roial::Stream::kTieBreak);
        auto sel = roial::select_action(fx.subset, previous, post, opts, fx.lik, sample_rng, tie_rng);
        benchmark::DoNotOptimize(sel.action);
    }
}
BENCHMARK(BM_SelectAction)->Arg(50)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_GridPredict(benchmark::State& state) {
    Fixture fx(20, 80, 0);
    const auto touched = fx.data.touched_actions();
    const auto post = roial::laplace_fit(fx.data, touched, fx.kernel, fx.lik);
    std::vector<roial::ActionIndex> all(fx.kernel->space().size());
    std::iota(all.begin(), all.end(), 0);
    for (auto _ : state) {
        auto pred = roial::predict(post, all);
        benchmark::DoNotOptimize(pred.mean.data());
    }
}
BENCHMARK(BM_GridPredict)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
