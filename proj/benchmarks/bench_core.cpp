#include <benchmark/benchmark.h>

#include <map>

#include "apl/likelihood.hpp"
#include "apl/model_family.hpp"
#include "apl/planning.hpp"
#include "apl/solver.hpp"

using namespace apl;

namespace {

const Pomdp& tiger_model() {
    static const Pomdp m = instantiate(tiger_template(), tiger::kTrueTheta);
    return m;
}

const DemoTrace& demo(std::size_t length) {
    static std::map<std::size_t, DemoTrace> cache;
    auto it = cache.find(length);
    if (it == cache.end())
        it = cache.emplace(length, generate_demo(tiger_model(), solve(tiger_model(), SolverConfig{}),
                                                 PolicyConfig{0.3}, length, 1))
                 .first;
    return it->second;
}

}  // namespace

static void BM_SolveTiger(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(solve(tiger_model(), SolverConfig{}));
}
BENCHMARK(BM_SolveTiger)->Unit(benchmark::kMillisecond);

static void BM_ObsLoglik(benchmark::State& state) {
    const auto& t = demo(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(obs_loglik(tiger_model(), t));
}
BENCHMARK(BM_ObsLoglik)->Arg(100)->Arg(2000);

static void BM_Ffbs(benchmark::State& state) {
    const auto& t = demo(state.range(0));
    Rng rng(3);
    for (auto _ : state) benchmark::DoNotOptimize(ffbs(tiger_model(), t, rng));
}
BENCHMARK(BM_Ffbs)->Arg(100)->Arg(2000);

static void BM_ActionLoglik(benchmark::State& state) {
    const auto& t = demo(state.range(0));
    const ValueFunction vf = solve(tiger_model(), SolverConfig{});
    for (auto _ : state) benchmark::DoNotOptimize(action_loglik(tiger_model(), vf, PolicyConfig{0.3}, t));
}
BENCHMARK(BM_ActionLoglik)->Arg(100)->Arg(2000);

static void BM_PlanPosterior(benchmark::State& state) {
    Rng rng(5);
    std::vector<ParamVector> samples;
    for (int i = 0; i < state.range(0); ++i) samples.push_back(sample_prior(tiger_template(), rng));
    for (auto _ : state) benchmark::DoNotOptimize(plan_posterior(samples, tiger_template(), SolverConfig{}));
}
BENCHMARK(BM_PlanPosterior)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
