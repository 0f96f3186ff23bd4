#include <benchmark/benchmark.h>

#include "tanglesim/confidence.hpp"
#include "tanglesim/simulation.hpp"
#include "tanglesim/tip_selection.hpp"

using namespace tanglesim;

namespace {

// About five txs per tick, as in the presets.
Tangle grown(std::size_t n, double alpha, std::uint64_t seed) {
  SimScenario s;
  s.duration = n / 5;
  s.reveal_delay = 1;
  s.walk.alpha = alpha;
  s.seed = seed;
  return run_scenario(s).tangle;
}

void BM_Append(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    Tangle t;
    t.append({0});
    Rng rng(7);
    while (t.size() < n) {
      const auto tips = t.tips();
      const TxId a = tips[rng.index(tips.size())];
      TxId b = static_cast<TxId>(rng.index(t.size()));
      if (a == b) b = t.parents(a).front();
      t.append({a, b});
    }
    benchmark::DoNotOptimize(t.size());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Append)->Arg(1000)->Arg(5000);

void BM_WeightedWalkSelect(benchmark::State& state) {
  const auto t = grown(static_cast<std::size_t>(state.range(0)), 0.7, 3);
  const auto cfg = WalkConfig::weighted(0.7);
  Rng rng(11);
  for (auto _ : state) benchmark::DoNotOptimize(weighted_walk_select(t, cfg, rng));
}
BENCHMARK(BM_WeightedWalkSelect)->Arg(500)->Arg(2000);

void BM_EstimateConfidence(benchmark::State& state) {
  const auto t = grown(2000, 0.5, 5);
  auto cfg = WalkConfig::weighted(0.5);
  cfg.lazy_max_steps.reset();
  const auto workers = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(estimate_confidence(t, cfg, 2000, 9, workers));
  state.SetItemsProcessed(state.iterations() * 2000);
}
BENCHMARK(BM_EstimateConfidence)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_RunScenario(benchmark::State& state) {
  SimScenario s;
  s.duration = 100;
  s.reveal_delay = 1;
  s.mix = state.range(0) ? AgentMix{0, 1, 0, 0} : AgentMix{1, 0, 0, 0};
  for (auto _ : state) benchmark::DoNotOptimize(run_scenario(s).tangle.size());
}
BENCHMARK(BM_RunScenario)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
