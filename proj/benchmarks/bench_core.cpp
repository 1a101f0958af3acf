#include <benchmark/benchmark.h>

#include <cmath>

#include "cslab/kernels.hpp"
#include "cslab/macrosolver.hpp"
#include "cslab/moments.hpp"
#include "cslab/particles.hpp"

using namespace cslab;

static void BM_AlignmentField(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto s = sample_uniform_ensemble(n, 1, 1.0, 1.0, 1.0, 1);
    const InteractionKernel kernel = KernelParams{0.25, 0.1, 1};
    for (auto _ : state) benchmark::DoNotOptimize(alignment_field(s.positions, s.velocities, 1, s.weight, kernel));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}
BENCHMARK(BM_AlignmentField)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_Deposition(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto s = sample_uniform_ensemble(n, 2, 1.0, 1.0, 1.0, 2);
    const auto grid = make_cube_grid(2, 2.0, 65);
    for (auto _ : state) benchmark::DoNotOptimize(empirical_moments(s, grid, 1.0));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Deposition)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_PairStatistics(benchmark::State& state) {
    const auto s = sample_uniform_ensemble(2000, 1, 1.0, 1.0, 1.0, 3);
    const KernelParams p{0.25, 0.1, 1};
    for (auto _ : state) benchmark::DoNotOptimize(pair_statistics(s, p, {}, {0.1}));
}
BENCHMARK(BM_PairStatistics)->Unit(benchmark::kMillisecond);

static void BM_RieszPotential(benchmark::State& state) {
    const auto grid = make_cube_grid(2, 4.0, static_cast<std::size_t>(state.range(0)));
    const auto f = sample_scalar(grid, [](const Vec& x) { return std::exp(-norm_sq(x)); });
    for (auto _ : state) benchmark::DoNotOptimize(riesz_potential(f, 1.5, grid));
}
BENCHMARK(BM_RieszPotential)->Arg(33)->Arg(65)->Unit(benchmark::kMillisecond);

static void BM_CommutatorApply(benchmark::State& state) {
    const auto grid = make_cube_grid(1, 4.0, static_cast<std::size_t>(state.range(0)));
    const CommutatorOperator op(grid, 0.25);
    const auto rho = sample_scalar(grid, [](const Vec& x) { return std::exp(-x[0] * x[0]); });
    const auto u = sample_vector(grid, 1, [](const Vec& x) { return Vec{std::tanh(x[0]), 0, 0}; });
    for (auto _ : state) benchmark::DoNotOptimize(op.apply(rho, u));
}
BENCHMARK(BM_CommutatorApply)->Arg(257)->Arg(1025)->Unit(benchmark::kMicrosecond);

static void BM_Pushforward(benchmark::State& state) {
    const auto grid = make_cube_grid(1, 4.0, 257);
    const auto u = sample_velocity(grid, 0.02, 51, [](double, const Vec& x) { return Vec{-0.05 * x[0], 0, 0}; });
    const auto rho0 = sample_scalar(grid, [](const Vec& x) { return std::exp(-2 * x[0] * x[0]); });
    for (auto _ : state) benchmark::DoNotOptimize(transport_pushforward(rho0, u, {}, ExitPolicy::zero_density));
}
BENCHMARK(BM_Pushforward)->Unit(benchmark::kMillisecond);

static void BM_FlowBacktrace(benchmark::State& state) {
    const auto grid = make_cube_grid(2, 4.0, 65);
    const auto u = sample_velocity(grid, 0.02, 51,
                                   [](double, const Vec& x) { return Vec{-x[1], x[0], 0}; });
    for (auto _ : state) benchmark::DoNotOptimize(flow_backtrace(u, 1.0, {0.5, 0.25, 0}));
}
BENCHMARK(BM_FlowBacktrace)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
