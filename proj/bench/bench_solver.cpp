// Optimized OpenMP solver vs the serial reference on a short horizon, plus
// thread scaling of the optimized solver and the simulator.
#include <benchmark/benchmark.h>

#include "retire/simulator.hpp"

using namespace retire;

namespace {

GridSpec bench_grid() {
  GridSpec g = grid_preset("test", PolicyRules{});
  g.first_age = 60;
  g.terminal_age = 66;
  return g;
}

void BM_SolveReference(benchmark::State& st) {
  const ModelParams p = baseline_estimates();
  const PolicyRules r;
  const GridSpec g = bench_grid();
  for (auto _ : st) benchmark::DoNotOptimize(solve_reference(p, r, g));
}
BENCHMARK(BM_SolveReference)->Unit(benchmark::kMillisecond);

void BM_Solve(benchmark::State& st) {
  const ModelParams p = baseline_estimates();
  const PolicyRules r;
  const GridSpec g = bench_grid();
  SolveOptions o;
  o.threads = int(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(solve(p, r, g, o));
}
BENCHMARK(BM_Solve)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_SolveReuse(benchmark::State& st) {
  const ModelParams p = baseline_estimates();
  const PolicyRules r;
  const GridSpec g = bench_grid();
  const DecisionTables base = solve(p, r, g);
  ModelParams q = p;
  q.prefs.lambda2[0] -= 0.05;
  SolveOptions o;
  o.reuse = &base;
  for (auto _ : st) benchmark::DoNotOptimize(solve(q, r, g, o));
}
BENCHMARK(BM_SolveReuse)->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& st) {
  const ModelParams p = baseline_estimates();
  const PolicyRules r;
  GridSpec g = grid_preset("test", r);
  const DecisionTables t = solve(p, r, g);
  const auto pop = generate_population(calibrated_population(5000), 1);
  SimOptions o;
  o.threads = int(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(simulate_lifecycle(pop, t, p, r, 2, o));
  st.SetItemsProcessed(st.iterations() * std::int64_t(pop.size()));
}
BENCHMARK(BM_Simulate)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
