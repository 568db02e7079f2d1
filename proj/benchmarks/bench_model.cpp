#include <benchmark/benchmark.h>

#include "dae/autoencoder.hpp"

namespace {

dae::Matrix batch(Eigen::Index rows, Eigen::Index cols) {
    return dae::Matrix::Random(rows, cols);
}

void BM_ReconstructionError(benchmark::State& state) {
    const dae::Autoencoder ae = dae::make_autoencoder(72, dae::kDefaultEncoderWidths, 1);
    const dae::Matrix x = batch(state.range(0), 72);
    for (auto _ : state) benchmark::DoNotOptimize(dae::reconstruction_error(ae, x));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ReconstructionError)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

// One training step worth of work without the optimizer update.
void BM_TotalLossGradient(benchmark::State& state) {
    const dae::DualAutoencoder m = dae::make_dual_autoencoder(72, dae::kDefaultEncoderWidths, 2);
    const dae::Matrix x = batch(state.range(0), 72);
    for (auto _ : state) benchmark::DoNotOptimize(dae::total_loss_gradient(m, x, 100.0, 1));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TotalLossGradient)->Arg(2000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace
