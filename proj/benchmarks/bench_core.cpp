#include <benchmark/benchmark.h>

#include "bpre/exact_engine.hpp"
#include "bpre/exponents.hpp"
#include "bpre/montecarlo.hpp"
#include "bpre/qseries.hpp"
#include "bpre/verification.hpp"

namespace {

void BM_BuildKernel(benchmark::State& state) {
    const auto env = bpre::fixtures::env_e1();
    const auto J = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(bpre::build_kernel(env, J));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BuildKernel)->RangeMultiplier(2)->Range(100, 1600)->Complexity();

void BM_Propagate(benchmark::State& state) {
    const auto env = bpre::fixtures::env_e1();
    const auto J = static_cast<std::size_t>(state.range(0));
    const auto kernel = bpre::build_kernel(env, J);
    const auto dist = bpre::exact_dist(env, 1, 8, J);
    for (auto _ : state) benchmark::DoNotOptimize(bpre::propagate(kernel, dist));
}
BENCHMARK(BM_Propagate)->RangeMultiplier(2)->Range(100, 1600);

void BM_QTable(benchmark::State& state) {
    const auto env = bpre::fixtures::env_e1();
    const auto J = static_cast<std::size_t>(state.range(0));
    const auto kernel = bpre::build_kernel(env, J);
    for (auto _ : state) benchmark::DoNotOptimize(bpre::q_table(env, kernel, 1));
}
BENCHMARK(BM_QTable)->RangeMultiplier(2)->Range(100, 1600);

void BM_ExponentReport(benchmark::State& state) {
    const auto env = bpre::fixtures::env_e1();
    for (auto _ : state) benchmark::DoNotOptimize(bpre::exponent_report(env, 1));
}
BENCHMARK(BM_ExponentReport);

void BM_SimulatePaths(benchmark::State& state) {
    const auto env = bpre::fixtures::env_e1();
    bpre::SimConfig cfg;
    cfg.n_paths = 10000;
    cfg.n_gens = static_cast<int>(state.range(0));
    cfg.threads = 1;
    for (auto _ : state) benchmark::DoNotOptimize(bpre::sample_W(env, cfg));
    state.SetItemsProcessed(state.iterations() * cfg.n_paths);
}
BENCHMARK(BM_SimulatePaths)->Arg(10)->Arg(25)->Arg(40)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
