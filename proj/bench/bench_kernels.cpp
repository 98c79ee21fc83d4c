// Serial reference vs OpenMP path for the data-parallel kernels. Each pair
// runs on identical inputs; the Exec argument is the only difference.

#include <benchmark/benchmark.h>

#include <map>

#include "dwlab/cone.hpp"
#include "dwlab/rrt.hpp"
#include "dwlab/search.hpp"
#include "dwlab/weight_classes.hpp"

using namespace dwlab;

namespace {

const WeightedSpace& field(int n, int L) {
  static std::map<std::pair<int, int>, WeightedSpace> cache;
  auto it = cache.find({n, L});
  if (it == cache.end()) {
    GeneratorParams p;
    p.amplitude = 0.6;
    p.mu_amplitude = 0.3;
    it = cache.emplace(std::pair{n, L}, make_space(generate(p, n, 3, L).field)).first;
  }
  return it->second;
}

Exec exec_of(const benchmark::State& s) { return s.range(0) ? Exec::parallel : Exec::serial; }

void class_constants_bench(benchmark::State& state) {
  const WeightedSpace& s = field(2, 5);
  for (auto _ : state) benchmark::DoNotOptimize(class_constants(s, 9, exec_of(state)).b2_iv);
}
BENCHMARK(class_constants_bench)->ArgNames({"parallel"})->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void doubling_bench(benchmark::State& state) {
  const WeightedSpace& s = field(2, 6);
  for (auto _ : state) benchmark::DoNotOptimize(doubling_check(s.mu(), 9, exec_of(state)).constant);
}
BENCHMARK(doubling_bench)->ArgNames({"parallel"})->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void coverage_bench(benchmark::State& state) {
  static const ConeNet net = build_net(3, 0.3, 1);
  for (auto _ : state) benchmark::DoNotOptimize(coverage_check(net, 2000, 2, 8, exec_of(state)).failures);
}
BENCHMARK(coverage_bench)->ArgNames({"parallel"})->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void rrt_bench(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(worst_case_search(3, 0.1, 20000, 3, {}, exec_of(state)).epsilon_measured);
}
BENCHMARK(rrt_bench)->ArgNames({"parallel"})->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
