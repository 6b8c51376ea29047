#include <benchmark/benchmark.h>

#include <omp.h>

#include "bmips/evaluation.hpp"
#include "bmips/io.hpp"
#include "bmips/samplers.hpp"

namespace bmips {
namespace {

constexpr std::size_t kN = 20000, kD = 100, kQueries = 64, kK = 10;

const SyntheticData& data() {
  static const SyntheticData d =
      gen_synthetic(SyntheticModel::LowRankFactors, kN, kD, kQueries, 10, 7);
  return d;
}

const QuerySet& queries() {
  static const QuerySet q = rows_as_queries(data().queries);
  return q;
}

const MipsIndex& index() {
  static const MipsIndex idx = build_index(data().items);
  return idx;
}

void BM_BruteForceSerial(benchmark::State& state) {
  const auto& q = queries();
  std::size_t t = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(brute_force_topk_serial(data().items, q[t++ % q.size()], kK));
}
BENCHMARK(BM_BruteForceSerial)->Unit(benchmark::kMicrosecond);

void BM_BruteForceParallel(benchmark::State& state) {
  const auto& q = queries();
  std::size_t t = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(brute_force_topk(data().items, q[t++ % q.size()], kK));
  state.counters["threads"] = omp_get_max_threads();
}
BENCHMARK(BM_BruteForceParallel)->Unit(benchmark::kMicrosecond);

// Whole query batch through the dWedge pipeline; range(0) is the thread count
// (0 means all available).
void BM_Batch(benchmark::State& state) {
  const int threads = state.range(0) == 0 ? omp_get_max_threads() : int(state.range(0));
  const Pipeline p(data().items, AlgoSpec{Algorithm::DWedge, 2 * kN, 200, 0}, 42);
  for (auto _ : state) benchmark::DoNotOptimize(run_batch(p, queries(), kK, threads));
  state.counters["threads"] = threads;
  state.SetItemsProcessed(std::int64_t(state.iterations()) * std::int64_t(kQueries));
}
BENCHMARK(BM_Batch)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

void BM_Wedge(benchmark::State& state) {
  const auto S = std::uint64_t(state.range(0));
  const auto ctx = make_query_context(index(), queries()[0], S);
  SamplerRng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(wedge_sample(index(), ctx, S, rng));
}
BENCHMARK(BM_Wedge)->Arg(kN / 4)->Arg(2 * kN)->Unit(benchmark::kMicrosecond);

void BM_Diamond(benchmark::State& state) {
  const auto S = std::uint64_t(state.range(0));
  const auto ctx = make_query_context(index(), queries()[0], S);
  SamplerRng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(diamond_sample(index(), ctx, S, rng));
}
BENCHMARK(BM_Diamond)->Arg(kN / 4)->Arg(2 * kN)->Unit(benchmark::kMicrosecond);

void BM_DWedge(benchmark::State& state) {
  const auto ctx = make_query_context(index(), queries()[0], std::uint64_t(state.range(0)), false);
  for (auto _ : state) benchmark::DoNotOptimize(dwedge_sample(index(), ctx));
}
BENCHMARK(BM_DWedge)->Arg(kN / 4)->Arg(2 * kN)->Unit(benchmark::kMicrosecond);

void BM_DDiamond(benchmark::State& state) {
  const auto ctx = make_query_context(index(), queries()[0], std::uint64_t(state.range(0)));
  SamplerRng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(ddiamond_sample(index(), ctx, rng));
}
BENCHMARK(BM_DDiamond)->Arg(kN / 4)->Arg(2 * kN)->Unit(benchmark::kMicrosecond);

void BM_ExtractTopB(benchmark::State& state) {
  const auto ctx = make_query_context(index(), queries()[0], 2 * kN, false);
  const Histogram h = dwedge_sample(index(), ctx);
  for (auto _ : state) benchmark::DoNotOptimize(extract_top_b(h, std::size_t(state.range(0))));
}
BENCHMARK(BM_ExtractTopB)->Arg(100)->Arg(1000)->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace bmips

BENCHMARK_MAIN();
