#include <benchmark/benchmark.h>

#include "transitive/perfmodel.hpp"
#include "transitive/rng.hpp"

using namespace transitive;

namespace {

TransRowTile random_tile(std::size_t rows, unsigned width) {
  Rng rng(rows * 31 + width);
  std::vector<TransRow> v(rows);
  for (auto& x : v) x = static_cast<TransRow>(rng.bits(width));
  return make_tile(v, width);
}

void BM_DynamicSi(benchmark::State& state) {
  const auto tile = random_tile(static_cast<std::size_t>(state.range(0)), 8);
  for (auto _ : state) benchmark::DoNotOptimize(build_dynamic_si(tile));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DynamicSi)->Arg(64)->Arg(256)->Arg(1024);

void BM_PlanExecute(benchmark::State& state) {
  const auto tile = random_tile(256, 8);
  const auto si = build_dynamic_si(tile);
  const auto x = gen_random(8, static_cast<std::size_t>(state.range(0)), 8, 2);
  for (auto _ : state) {
    AccumMatrix out(tile.weight_rows, x.cols());
    const auto p = plan(tile, si);
    benchmark::DoNotOptimize(execute(p, x, out));
  }
}
BENCHMARK(BM_PlanExecute)->Arg(32)->Arg(128);

void BM_Simulate(benchmark::State& state) {
  const auto w = gen_random(256, 256, 8, 1), x = gen_random(256, 64, 8, 2);
  ArchConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(simulate(w, x, cfg, static_cast<unsigned>(state.range(0))));
}
BENCHMARK(BM_Simulate)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_ReferenceGemm(benchmark::State& state) {
  const auto w = gen_random(256, 256, 8, 1), x = gen_random(256, 64, 8, 2);
  for (auto _ : state) benchmark::DoNotOptimize(reference_gemm(w, x));
}
BENCHMARK(BM_ReferenceGemm)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
