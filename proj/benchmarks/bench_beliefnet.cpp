#include <benchmark/benchmark.h>

#include <fstream>
#include <sstream>

#include "beliefnet/canonical.hpp"
#include "beliefnet/inference.hpp"
#include "beliefnet/netlang.hpp"
#include "beliefnet/sensitivity.hpp"

using namespace beliefnet;

namespace {

Network orchard() {
  std::ifstream in(std::string(BELIEFNET_DATA_DIR) + "/orchard-mini.bn");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_network(ss.str(), "orchard-mini.bn");
}

Evidence lab_positive(const Network& net) {
  Evidence e;
  e.set(net, "LabTest", "positive");
  e.set(net, "CankerMargin", "present");
  return e;
}

// k parents with four levels each, four-level child, every entry filled.
NoisyMaxSpec max_spec(std::size_t k, std::vector<std::string>& parents, std::vector<std::size_t>& cards) {
  NoisyMaxSpec s;
  s.child_card = 4;
  for (std::size_t j = 0; j < k; ++j) {
    parents.push_back("P" + std::to_string(j));
    cards.push_back(4);
    for (std::size_t l = 1; l < 4; ++l) s.entries.push_back({parents.back(), l, {0.4, 0.3, 0.2, 0.1}});
  }
  s.leak = {0.9, 0.05, 0.03, 0.02};
  return s;
}

void BM_CompileNoisyMax(benchmark::State& state) {
  std::vector<std::string> parents;
  std::vector<std::size_t> cards;
  const auto spec = max_spec(static_cast<std::size_t>(state.range(0)), parents, cards);
  for (auto _ : state) benchmark::DoNotOptimize(compile_to_cpt(spec, parents, cards));
}
BENCHMARK(BM_CompileNoisyMax)->DenseRange(1, 6);

void BM_OrchardPosterior(benchmark::State& state) {
  const auto net = orchard();
  const Query q{{"Phytophthora"}, lab_positive(net)};
  const auto h = static_cast<EliminationHeuristic>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(posterior(net, q, {h, {}}));
}
BENCHMARK(BM_OrchardPosterior)
    ->Arg(static_cast<int>(EliminationHeuristic::min_degree))
    ->Arg(static_cast<int>(EliminationHeuristic::min_fill))
    ->Arg(static_cast<int>(EliminationHeuristic::declaration));

void BM_OrchardEnumerate(benchmark::State& state) {
  const auto net = orchard();
  const Query q{{"Phytophthora"}, lab_positive(net)};
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_joint(net, q));
}
BENCHMARK(BM_OrchardEnumerate)->Unit(benchmark::kMillisecond);

void BM_OrchardSweep(benchmark::State& state) {
  const auto net = orchard();
  const auto e = lab_positive(net);
  const auto grid = linear_grid(0.0, 1.0, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        cpt_parameter_sweep(net, e, {"Phytophthora", "beyond_recovery"}, {"PhytophthoraProgress", 3, 0}, grid));
  }
}
BENCHMARK(BM_OrchardSweep)->Arg(11)->Arg(101)->Unit(benchmark::kMillisecond);

void BM_RankIndicants(benchmark::State& state) {
  const auto net = orchard();
  Evidence e;
  e.set(net, "LabTest", "positive");
  std::vector<std::string> indicants;
  for (std::size_t i : net.tagged("indicant")) indicants.push_back(net.node(i).name());
  for (auto _ : state) {
    benchmark::DoNotOptimize(rank_indicants(net, e, {"Phytophthora", "beyond_recovery"}, indicants));
  }
}
BENCHMARK(BM_RankIndicants)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
