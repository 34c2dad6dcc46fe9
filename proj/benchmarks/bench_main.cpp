#include <benchmark/benchmark.h>

#include "geodemo/cluster.hpp"
#include "geodemo/ingest.hpp"
#include "geodemo/kselect.hpp"
#include "geodemo/preprocess.hpp"
#include "geodemo/synthetic.hpp"

using namespace geodemo;

namespace {

const FeatureMatrix& fixture_features() {
  static const FeatureMatrix fm = [] {
    const auto data = planted_data(20200101);
    const auto files = fixture_files(data, 20200101);
    const RateTable rates =
        to_percentages(reconstruct_suppressed(parse_district_table(files.districts_csv, parse_schema(files.schema_ini))))
            .features_only();
    return zscore(rates, rates.variables);
  }();
  return fm;
}

void BM_KMeansOnce(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  KMeansWorkspace ws(fixture_features().z);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(ws.fit(k, seed++));
}
BENCHMARK(BM_KMeansOnce)->Arg(2)->Arg(7)->Arg(12);

void BM_KMeansRestarts(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(kmeans_restarts(fixture_features(), 7, static_cast<std::size_t>(state.range(0)), 1));
  }
}
BENCHMARK(BM_KMeansRestarts)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_GapOnce(benchmark::State& state) {
  GapOptions o;
  o.reference_sets = static_cast<std::size_t>(state.range(0));
  o.restarts = 1;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(gap_once(fixture_features().z, o, seed++));
}
BENCHMARK(BM_GapOnce)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_UniformReference(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(uniform_reference(fixture_features().z, seed++));
}
BENCHMARK(BM_UniformReference);

}  // namespace

BENCHMARK_MAIN();
