#include <benchmark/benchmark.h>

#include "melodic/model.hpp"
#include "melodic/oracles.hpp"
#include "melodic/selection.hpp"
#include "melodic/solver.hpp"

using namespace melodic;

namespace {

Dataset synthetic(Index n, Index p, Index r, Index m) {
    oracles::SyntheticSpec spec;
    spec.n = n;
    spec.num_predictors = p;
    spec.num_responses = r;
    spec.true_dims = m;
    spec.seed = 42;
    return oracles::generate_synthetic(spec).dataset;
}

void BM_FitUnconstrained(benchmark::State& state) {
    const Dataset data = synthetic(state.range(0), 9, 11, 2);
    FitConfig config;
    config.dimensions = 2;
    config.record_trace = false;
    int iterations = 0;
    for (auto _ : state) {
        const FitResult f = fit(data, config);
        iterations = f.iterations;
        benchmark::DoNotOptimize(f.deviance);
    }
    state.counters["mm_iterations"] = iterations;
}
BENCHMARK(BM_FitUnconstrained)->Arg(200)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_FitConstrained(benchmark::State& state) {
    const Dataset data = synthetic(state.range(0), 8, 5, 2);
    Eigen::MatrixXi d(5, 2);
    d << 1, 0, 1, 0, 1, 1, 0, 1, 0, 1;
    FitConfig config;
    config.dimensions = 2;
    config.assignment = DimensionAssignment(d);
    config.record_trace = false;
    for (auto _ : state) benchmark::DoNotOptimize(fit(data, config).deviance);
}
BENCHMARK(BM_FitConstrained)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_Deviance(benchmark::State& state) {
    const Dataset data = synthetic(state.range(0), 9, 11, 2);
    FitConfig config;
    config.dimensions = 2;
    const ModelParams params = fit(data, config).params;
    for (auto _ : state) benchmark::DoNotOptimize(deviance(data, params));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Deviance)->Arg(1000)->Arg(10000);

void BM_DimensionScan(benchmark::State& state) {
    const Dataset data = synthetic(500, 6, 6, 2);
    FitConfig config;
    config.record_trace = false;
    for (auto _ : state) benchmark::DoNotOptimize(dimension_scan(data, 1, 4, config).best_bic);
}
BENCHMARK(BM_DimensionScan)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
