#include <string>

#include <benchmark/benchmark.h>
#include <nlohmann/json.hpp>

#include "hardylab/capacity.hpp"
#include "hardylab/cone.hpp"
#include "hardylab/dimension.hpp"
#include "hardylab/domain.hpp"
#include "hardylab/hardy.hpp"
#include "hardylab/whitney.hpp"

using namespace hardylab;

namespace {

GridDomain make(const std::string& kind, int level, const std::string& params = "{\"dim\":2}") {
  return rasterize(parse_domain_spec(nlohmann::json::parse(R"({"kind":")" + kind + R"(","level":)" +
                                                           std::to_string(level) + R"(,"parameters":)" +
                                                           params + "}")));
}

void BM_Rasterize(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(make("koch-polygon", st.range(0), "{\"iterations\":4}"));
}
BENCHMARK(BM_Rasterize)->DenseRange(7, 10)->Unit(benchmark::kMillisecond);

void BM_Decompose(benchmark::State& st) {
  GridDomain g = make("lshape", st.range(0), "{}");
  for (auto _ : st) benchmark::DoNotOptimize(decompose(g));
  st.counters["cells"] = static_cast<double>(g.shape().size());
}
BENCHMARK(BM_Decompose)->DenseRange(7, 10)->Unit(benchmark::kMillisecond);

void BM_Validate(benchmark::State& st) {
  GridDomain g = make("lshape", st.range(0), "{}");
  WhitneyDecomposition w = decompose(g);
  for (auto _ : st) benchmark::DoNotOptimize(validate(g, w));
}
BENCHMARK(BM_Validate)->DenseRange(7, 9)->Unit(benchmark::kMillisecond);

void BM_DimLoc(benchmark::State& st) {
  GridDomain g = make("halfspace", st.range(0));
  WhitneyDecomposition w = decompose(g);
  for (auto _ : st) benchmark::DoNotOptimize(dim_loc(g, w));
}
BENCHMARK(BM_DimLoc)->Arg(8)->Arg(9)->Unit(benchmark::kMillisecond);

void BM_GammaCapacity(benchmark::State& st) {
  ConstraintSet c = ConstraintSet::face_slab(2, st.range(0), 0, 0.25);
  for (auto _ : st) benchmark::DoNotOptimize(gamma_capacity(c, 2, 1, 2.0, 2.0));
}
BENCHMARK(BM_GammaCapacity)->DenseRange(3, 5)->Unit(benchmark::kMillisecond);

void BM_GammaCapacityDescent(benchmark::State& st) {
  ConstraintSet c = ConstraintSet::face_slab(2, 4, 0, 0.25);
  for (auto _ : st) benchmark::DoNotOptimize(gamma_capacity(c, 1, 0, 3.0, 3.0));
}
BENCHMARK(BM_GammaCapacityDescent)->Unit(benchmark::kMillisecond);

void BM_ConstructiveBound(benchmark::State& st) {
  GridDomain g = make("halfspace", st.range(0));
  WhitneyDecomposition w = decompose(g);
  HardyParams prm;
  prm.s = -1.0;
  for (auto _ : st) benchmark::DoNotOptimize(constructive_bound(g, w, prm));
}
BENCHMARK(BM_ConstructiveBound)->Arg(6)->Arg(7)->Unit(benchmark::kMillisecond);

void BM_DirectInterval(benchmark::State& st) {
  GridDomain g = make("interval", st.range(0), "{}");
  HardyParams prm;
  prm.s = 0.0;
  for (auto _ : st) benchmark::DoNotOptimize(direct_best_constant(g, prm));
}
BENCHMARK(BM_DirectInterval)->DenseRange(8, 12, 2)->Unit(benchmark::kMillisecond);

void BM_ConeSplit(benchmark::State& st) {
  GridDomain g = make("lshape", st.range(0), "{}");
  WhitneyDecomposition w = decompose(g);
  const auto probe = cone_probes(g, 1, 3).front();
  for (auto _ : st) benchmark::DoNotOptimize(cone_split(g, w, probe.values, 2, 2.0, 0.0));
}
BENCHMARK(BM_ConeSplit)->Arg(6)->Arg(7)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
