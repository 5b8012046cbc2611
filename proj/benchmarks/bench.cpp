// Microbenchmarks for the hot paths: loop generation, kill-probability
// streaming, the closed-form rectangle oracle, the scattering quadrature and
// a small finite-difference solve.

#include <benchmark/benchmark.h>

#include <vector>

#include "wlc/engine.hpp"
#include "wlc/heat_kernel_lab.hpp"
#include "wlc/loops.hpp"
#include "wlc/rectangle_oracle.hpp"
#include "wlc/scattering_1d.hpp"

namespace {

wlc::Scene two_points() {
    wlc::Scene s;
    s.dim = 1;
    s.objects = {
        wlc::Object{wlc::Hyperplane{{1, 0, 0}, 0.0}, wlc::Interaction{}},
        wlc::Object{wlc::Hyperplane{{1, 0, 0}, 1.0}, wlc::Interaction{}}};
    return s;
}

wlc::Scene tictactoe() {
    wlc::Scene s;
    s.dim = 2;
    s.objects = {
        wlc::Object{wlc::Hyperplane{{1, 0, 0}, 0.0}, wlc::Interaction{}},
        wlc::Object{wlc::Hyperplane{{1, 0, 0}, 1.0}, wlc::Interaction{}},
        wlc::Object{wlc::Hyperplane{{0, 1, 0}, 0.0}, wlc::Interaction{}},
        wlc::Object{wlc::Hyperplane{{0, 1, 0}, 1.0}, wlc::Interaction{}}};
    return s;
}

void BM_LoopGeneration(benchmark::State& state) {
    const auto scheme = state.range(0) == 0 ? wlc::LoopScheme::bisection
                                            : wlc::LoopScheme::incremental;
    const std::uint32_t points = std::uint32_t(state.range(1));
    const wlc::LoopEnsembleSpec spec{1 << 20, points, 2, 1, scheme};
    std::vector<double> out((points + 1) * 2);
    std::uint64_t i = 0;
    for (auto _ : state) {
        wlc::generate_unit_loop(spec, i++, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * points);
}
BENCHMARK(BM_LoopGeneration)
    ->ArgsProduct({{0, 1}, {256, 1024, 4096}})
    ->ArgNames({"scheme", "points"});

void BM_KillProbability1D(benchmark::State& state) {
    const wlc::Scene scene = two_points();
    const wlc::LoopEnsembleSpec spec{256, 1024, 1, 1,
                                     wlc::LoopScheme::bisection};
    for (auto _ : state) {
        const wlc::MeanErr r =
            wlc::estimate_kill_probability(scene, spec, {0.5, 0, 0}, 1.0);
        benchmark::DoNotOptimize(r.mean);
    }
    state.SetItemsProcessed(state.iterations() * spec.count);
}
BENCHMARK(BM_KillProbability1D)->Unit(benchmark::kMillisecond);

void BM_KillProbability2D(benchmark::State& state) {
    const wlc::Scene scene = tictactoe();
    const wlc::LoopEnsembleSpec spec{256, 1024, 2, 1,
                                     wlc::LoopScheme::bisection};
    for (auto _ : state) {
        const wlc::MeanErr r =
            wlc::estimate_kill_probability(scene, spec, {0.5, 0.5, 0}, 2.0);
        benchmark::DoNotOptimize(r.mean);
    }
    state.SetItemsProcessed(state.iterations() * spec.count);
}
BENCHMARK(BM_KillProbability2D)->Unit(benchmark::kMillisecond);

void BM_RectangleOracle(benchmark::State& state) {
    for (auto _ : state) {
        const wlc::OracleValue v =
            wlc::hrectangle_energy_certified(2, {1.0, 0.37, 1.0});
        benchmark::DoNotOptimize(v.value);
    }
}
BENCHMARK(BM_RectangleOracle)->Unit(benchmark::kMicrosecond);

void BM_ScatterThreePlates(benchmark::State& state) {
    const wlc::PlateStack stack{{0.0, 0.5, 1.2}, {3.0, 1.5, 4.0}};
    for (auto _ : state) {
        const wlc::ScatterResult r = wlc::irreducible_energy_1d(stack);
        benchmark::DoNotOptimize(r.value);
    }
}
BENCHMARK(BM_ScatterThreePlates)->Unit(benchmark::kMillisecond);

void BM_Lab1D(benchmark::State& state) {
    wlc::Scene s = two_points();
    s.domain = wlc::BoxShape{{-3, 0, 0}, {4, 0, 0}};
    const wlc::GridConfig grid{std::uint32_t(state.range(0))};
    for (auto _ : state) {
        const double v = wlc::irreducible_spectral_exact(s, grid, 1.0);
        benchmark::DoNotOptimize(v);
    }
}
BENCHMARK(BM_Lab1D)->Arg(699)->Arg(1399)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
