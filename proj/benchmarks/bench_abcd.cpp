#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "dae/abcd.hpp"
#include "dae/trigger.hpp"

namespace {

struct Scores {
    std::vector<double> r1, r2;
};

Scores scores(std::size_t n) {
    std::mt19937_64 rng(7);
    std::exponential_distribution<double> d;
    Scores s{std::vector<double>(n), std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        s.r1[i] = d(rng);
        s.r2[i] = d(rng);
    }
    return s;
}

void BM_CountRegions(benchmark::State& state) {
    const Scores s = scores(static_cast<std::size_t>(state.range(0)));
    const dae::Thresholds c = dae::diagonal_thresholds(s.r1, s.r2, 0.1);
    for (auto _ : state) benchmark::DoNotOptimize(dae::count_regions(s.r1, s.r2, c));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CountRegions)->Arg(100000)->Arg(1000000);

void BM_DiagonalScan(benchmark::State& state) {
    const Scores s = scores(static_cast<std::size_t>(state.range(0)));
    dae::ScoredSample sample;
    sample.r1 = s.r1;
    sample.r2 = s.r2;
    const std::vector<double> effs = {0.01, 0.02, 0.05, 0.1, 0.2, 0.3};
    const auto grid = dae::diagonal_grid(effs);
    for (auto _ : state) benchmark::DoNotOptimize(dae::threshold_scan(sample, grid));
}
BENCHMARK(BM_DiagonalScan)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_TriggerStream(benchmark::State& state) {
    const Scores s = scores(1000000);
    const dae::Thresholds c = dae::diagonal_thresholds(s.r1, s.r2, 0.05);
    const auto config = dae::PrescaleConfig::shared(state.range(0), c, 3);
    for (auto _ : state) benchmark::DoNotOptimize(dae::run_trigger(s.r1, s.r2, config));
    state.SetItemsProcessed(state.iterations() * 1000000);
}
BENCHMARK(BM_TriggerStream)->Arg(1)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace
