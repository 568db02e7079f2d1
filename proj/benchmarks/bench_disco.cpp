#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "dae/disco.hpp"

namespace {

std::vector<double> normals(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d;
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

void BM_DistanceCorrelation(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto u = normals(n, 1);
    const auto v = normals(n, 2);
    for (auto _ : state) benchmark::DoNotOptimize(dae::distance_correlation(u, v));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DistanceCorrelation)->RangeMultiplier(4)->Range(256, 16384)->Complexity(benchmark::oNSquared);

void BM_DiscoSquaredWithGradient(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto u = normals(n, 3);
    const auto v = normals(n, 4);
    for (auto _ : state) benchmark::DoNotOptimize(dae::disco_squared_with_gradient(u, v));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DiscoSquaredWithGradient)->RangeMultiplier(4)->Range(256, 16384)->Complexity(benchmark::oNSquared);

}  // namespace
