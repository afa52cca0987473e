// Serial reference kernels against their OpenMP builds.

#include <benchmark/benchmark.h>

#include "qdim/kernels.hpp"
#include "qdim/rng.hpp"
#include "qdim/sampler.hpp"

namespace {

using namespace qdim;

AffineIFS bench_ifs() {
  return AffineIFS{Matrix::diagonal({0.5, 0.4}), Matrix::diagonal({0.45, 0.3}), Matrix::diagonal({0.4, 0.35})};
}

MeasureModel bench_model() { return MeasureModel::bernoulli({0.5, 0.3, 0.2}); }

const std::vector<double>& bench_cloud() {
  static const std::vector<double> coords = [] {
    const DisplacementField field(3, 2, 1.0);
    return kernels::omp::sample_cloud(bench_ifs(), bench_model(), field, 200000, 30, 4);
  }();
  return coords;
}

template <class F>
void run(benchmark::State& state, F&& f) {
  for (auto _ : state) benchmark::DoNotOptimize(f());
}

void BM_WeightedSums_Serial(benchmark::State& state) {
  const auto ifs = bench_ifs();
  const auto model = bench_model();
  run(state, [&] { return kernels::serial::log_weighted_sums(ifs, model, 1.2, -1.0, 2.0, state.range(0)); });
}
void BM_WeightedSums_Omp(benchmark::State& state) {
  const auto ifs = bench_ifs();
  const auto model = bench_model();
  run(state, [&] { return kernels::omp::log_weighted_sums(ifs, model, 1.2, -1.0, 2.0, state.range(0)); });
}
BENCHMARK(BM_WeightedSums_Serial)->Arg(10)->Arg(12)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WeightedSums_Omp)->Arg(10)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_WordTable_Serial(benchmark::State& state) {
  const auto ifs = bench_ifs();
  const auto model = bench_model();
  run(state, [&] { return kernels::serial::build_word_table(ifs, model, 11).depth; });
}
void BM_WordTable_Omp(benchmark::State& state) {
  const auto ifs = bench_ifs();
  const auto model = bench_model();
  run(state, [&] { return kernels::omp::build_word_table(ifs, model, 11).depth; });
}
BENCHMARK(BM_WordTable_Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WordTable_Omp)->Unit(benchmark::kMillisecond);

void BM_Sample_Serial(benchmark::State& state) {
  const auto ifs = bench_ifs();
  const auto model = bench_model();
  const DisplacementField field(1, 2, 1.0);
  run(state, [&] { return kernels::serial::sample_cloud(ifs, model, field, state.range(0), 40, 2); });
}
void BM_Sample_Omp(benchmark::State& state) {
  const auto ifs = bench_ifs();
  const auto model = bench_model();
  const DisplacementField field(1, 2, 1.0);
  run(state, [&] { return kernels::omp::sample_cloud(ifs, model, field, state.range(0), 40, 2); });
}
BENCHMARK(BM_Sample_Serial)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Sample_Omp)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_Mesh_Serial(benchmark::State& state) {
  run(state, [&] { return kernels::serial::mesh_counts(bench_cloud(), 2, 1.0 / state.range(0)); });
}
void BM_Mesh_Omp(benchmark::State& state) {
  run(state, [&] { return kernels::omp::mesh_counts(bench_cloud(), 2, 1.0 / state.range(0)); });
}
BENCHMARK(BM_Mesh_Serial)->Arg(16)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Mesh_Omp)->Arg(16)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_Balls_Serial(benchmark::State& state) {
  run(state, [&] { return kernels::serial::ball_counts(bench_cloud(), 2, state.range(0), 0.05); });
}
void BM_Balls_Omp(benchmark::State& state) {
  run(state, [&] { return kernels::omp::ball_counts(bench_cloud(), 2, state.range(0), 0.05); });
}
BENCHMARK(BM_Balls_Serial)->Arg(5000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Balls_Omp)->Arg(5000)->Arg(20000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
