#include <benchmark/benchmark.h>

#include <string>

#include "monolink/extraction.hpp"
#include "monolink/kgdata.hpp"
#include "monolink/model.hpp"
#include "monolink/random.hpp"
#include "monolink/soundness.hpp"
#include "monolink/training.hpp"

namespace monolink {
namespace {

Signature bench_signature(std::size_t binary) {
  std::vector<std::string> names;
  for (std::size_t i = 1; i <= binary; ++i) names.push_back("P" + std::to_string(i));
  return Signature({}, names);
}

Model bench_model(const Signature& sig, AggregationBudget budget, std::size_t dim) {
  InitSpec init;
  init.hidden_dims = {dim, dim};
  init.budget = budget;
  Model m = random_model(sig, init, true, 17);
  m.scoring.threshold = 0.05;
  return m;
}

Dataset random_graph(const Signature& sig, std::size_t constants, std::size_t facts, std::uint64_t seed) {
  Rng rng = make_rng(seed, "bench-graph");
  std::uniform_int_distribution<std::size_t> node(0, constants - 1);
  std::uniform_int_distribution<std::size_t> pred(0, sig.binary_count() - 1);
  Dataset d;
  while (d.size() < facts) {
    d.add(sig, sig.binary_predicates()[pred(rng)], "c" + std::to_string(node(rng)), "c" + std::to_string(node(rng)));
  }
  return d;
}

// Full forward pass: encode, two layers, decode every pair.
void BM_ApplyModel(benchmark::State& state) {
  const auto constants = static_cast<std::size_t>(state.range(0));
  const Signature sig = bench_signature(4);
  const Model m = bench_model(sig, AggregationBudget::finite(2), 16);
  const Dataset d = random_graph(sig, constants, constants * 3, 1);
  for (auto _ : state) benchmark::DoNotOptimize(apply_model(m, d));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ApplyModel)->RangeMultiplier(2)->Range(16, 128)->Complexity();

void BM_CheckSoundness(benchmark::State& state) {
  const Signature sig = bench_signature(3);
  const Model m = bench_model(sig, AggregationBudget::finite(static_cast<std::uint64_t>(state.range(0))), 8);
  const Rule r = parse_rule("P1(x,z0), P2(z0,z1), P3(z1,y) -> P2(x,y)", sig);
  for (auto _ : state) benchmark::DoNotOptimize(check_soundness(m, r));
}
BENCHMARK(BM_CheckSoundness)->Arg(1)->Arg(3);

void BM_MineFlat(benchmark::State& state) {
  const Signature sig = bench_signature(static_cast<std::size_t>(state.range(0)));
  const Model m = bench_model(sig, AggregationBudget::finite(1), 8);
  const std::vector<Rule> space = enumerate_flat_rules(sig, 2);
  for (auto _ : state) benchmark::DoNotOptimize(mine_sound_rules(m, space));
  state.counters["rules"] = static_cast<double>(space.size());
}
BENCHMARK(BM_MineFlat)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_MineTreelike(benchmark::State& state) {
  const Signature sig = bench_signature(2);
  Model m = bench_model(sig, AggregationBudget::finite(1), 8);
  const TreeSpace space(sig, TreeBudget{2, 1, false, m.gnn.direction});
  for (auto _ : state) benchmark::DoNotOptimize(mine_treelike(m, space));
}
BENCHMARK(BM_MineTreelike)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace monolink

BENCHMARK_MAIN();
