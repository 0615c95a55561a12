#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "beliefnet/inference.hpp"
#include "testing.hpp"

using namespace beliefnet;
using beliefnet::testing::chance;
using beliefnet::testing::two_node;

namespace {

Evidence observe(const Network& net, std::initializer_list<std::pair<const char*, const char*>> items) {
  Evidence e;
  for (const auto& [v, l] : items) e.set(net, v, l);
  return e;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Unobserved variable names, in declaration order.
std::vector<std::string> free_variables(const Network& net, const Evidence& e) {
  std::vector<std::string> out;
  for (const auto& n : net.nodes()) {
    if (!e.contains(n.name())) out.push_back(n.name());
  }
  return out;
}

}  // namespace

TEST_CASE("cold-stress posteriors") {
  const auto net = two_node(0.95, 0.025, 0.95);
  Query q{{"A"}, observe(net, {{"B", "yes"}})};
  const auto r = posterior(net, q);
  CHECK(r.distribution.marginal("A")[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(std::abs(r.distribution.marginal("A")[1] - 1.0 / 3.0) < 1e-9);
  CHECK(std::abs(r.evidence_probability - 0.07125) < 1e-15);

  const auto raised = two_node(0.95, 0.1, 0.95);
  const auto r2 = posterior(raised, Query{{"A"}, observe(raised, {{"B", "yes"}})});
  CHECK(std::abs(r2.distribution.marginal("A")[1] - 2.0 / 3.0) < 1e-9);

  const auto oracle = enumerate_joint(net, q);
  CHECK(std::abs(oracle.distribution.marginal("A")[1] - 1.0 / 3.0) < 1e-12);
}

TEST_CASE("cold-stress fixture file") {
  const auto net = beliefnet::testing::load_fixture("coldstress.bn");
  const auto e = load_evidence(beliefnet::testing::read_text(beliefnet::testing::data_dir() / "noreports.ev"), net);
  const auto r = posterior(net, Query{{"ColdStressRegion"}, e});
  CHECK(std::abs(r.distribution.probabilities[1] - 1.0 / 3.0) < 1e-9);
  CHECK(std::abs(prob_of_evidence(net, e) - 0.07125) < 1e-15);
}

TEST_CASE("prob_of_evidence") {
  const auto net = two_node(0.95, 0.025, 0.95);
  CHECK(prob_of_evidence(net, {}) == 1.0);

  // B=yes is impossible when both conditionals put zero mass on it.
  const auto blocked = two_node(0.3, 0.0, 0.0);
  const auto e = observe(blocked, {{"B", "yes"}});
  CHECK(prob_of_evidence(blocked, e) == 0.0);
  const auto r = posterior(blocked, Query{{"A"}, e});
  CHECK(r.impossible());
  CHECK(r.distribution.probabilities.empty());
  CHECK(enumerate_joint(blocked, Query{{"A"}, e}).impossible());
}

TEST_CASE("empty evidence gives the prior marginal") {
  const auto net = two_node(0.95, 0.025, 0.95);
  const auto r = posterior(net, Query{{"A"}, {}});
  CHECK(std::abs(r.distribution.probabilities[1] - 0.95) < 1e-15);
  const auto b = posterior(net, Query{{"B"}, {}});
  CHECK(std::abs(b.distribution.probabilities[1] - 0.07125) < 1e-15);
}

TEST_CASE("three-node chain against a hand sum") {
  // A -> B -> C, seeded values written out so the eight-state sum is checkable.
  Network net({chance("A", {"a0", "a1"}, {}, Cpt({}, 2, {0.3, 0.7})),
               chance("B", {"b0", "b1"}, {"A"}, Cpt({2}, 2, {0.6, 0.4, 0.1, 0.9})),
               chance("C", {"c0", "c1"}, {"B"}, Cpt({2}, 2, {0.8, 0.2, 0.25, 0.75}))});
  // P(C=c1) = sum_a sum_b P(a) P(b|a) P(c1|b)
  double pc1 = 0.0;
  const double pa[2] = {0.3, 0.7};
  const double pb[2][2] = {{0.6, 0.4}, {0.1, 0.9}};
  const double pc[2] = {0.2, 0.75};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) pc1 += pa[a] * pb[a][b] * pc[b];
  CHECK(std::abs(pc1 - 0.6125) < 1e-14);

  const Query q{{"C"}, {}};
  CHECK(std::abs(enumerate_joint(net, q).distribution.probabilities[1] - 0.6125) < 1e-15);
  CHECK(std::abs(posterior(net, q).distribution.probabilities[1] - 0.6125) < 1e-15);

  // P(A=a1 | C=c1) = 0.7 (0.1*0.2 + 0.9*0.75) / 0.6125
  const auto e = observe(net, {{"C", "c1"}});
  const double expected = 0.7 * (0.1 * 0.2 + 0.9 * 0.75) / 0.6125;
  CHECK(std::abs(posterior(net, Query{{"A"}, e}).distribution.probabilities[1] - expected) < 1e-14);
  CHECK(std::abs(enumerate_joint(net, Query{{"A"}, e}).distribution.probabilities[1] - expected) < 1e-14);
}

TEST_CASE("joint targets come back in odometer order") {
  Network net({chance("A", {"a0", "a1"}, {}, Cpt({}, 2, {0.3, 0.7})),
               chance("B", {"b0", "b1", "b2"}, {"A"}, Cpt({2}, 3, {0.2, 0.3, 0.5, 0.6, 0.3, 0.1}))});
  const auto r = posterior(net, Query{{"A", "B"}, {}});
  const std::vector<double> expected{0.06, 0.09, 0.15, 0.42, 0.21, 0.07};
  CHECK(max_abs_diff(r.distribution.probabilities, expected) < 1e-15);
  CHECK(r.distribution.levels[1] == std::vector<std::string>{"b0", "b1", "b2"});
  CHECK(max_abs_diff(r.distribution.marginal("B"), {0.48, 0.3, 0.22}) < 1e-15);
}

TEST_CASE("oracle equivalence on random networks") {
  std::mt19937_64 rng(4);
  std::size_t compared = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const auto net = beliefnet::testing::random_network(rng, {2, 8, 2, 4, 3, 0.4});
    for (std::size_t pattern = 0; pattern < 3; ++pattern) {
      // 0, 1 and 2 observed variables.
      const auto e = beliefnet::testing::random_evidence(rng, net, std::min(pattern, net.size() - 1));
      for (const auto& target : free_variables(net, e)) {
        const Query q{{target}, e};
        const auto fast = posterior(net, q);
        const auto slow = enumerate_joint(net, q);
        CHECK(std::abs(fast.evidence_probability - slow.evidence_probability) < 1e-10);
        if (slow.impossible()) {
          CHECK(fast.impossible());
          continue;
        }
        CHECK(max_abs_diff(fast.distribution.probabilities, slow.distribution.probabilities) < 1e-10);
        CHECK(std::abs(fast.distribution.sum() - 1.0) < 1e-9);
        ++compared;
      }
    }
  }
  CHECK(compared > 300);
}

TEST_CASE("elimination order does not change the answer") {
  std::mt19937_64 rng(5);
  const EliminationHeuristic heuristics[] = {EliminationHeuristic::min_degree, EliminationHeuristic::min_fill,
                                             EliminationHeuristic::declaration,
                                             EliminationHeuristic::reverse_declaration};
  for (int trial = 0; trial < 60; ++trial) {
    const auto net = beliefnet::testing::random_network(rng, {4, 8, 2, 3, 3, 0.5});
    const auto e = beliefnet::testing::random_evidence(rng, net, 2);
    const auto vars = free_variables(net, e);
    const Query q{{vars.front()}, e};
    const auto reference = posterior(net, q);
    for (auto h : heuristics) {
      const auto r = posterior(net, q, InferenceOptions{h, {}});
      CHECK(std::abs(r.evidence_probability - reference.evidence_probability) < 1e-10);
      if (!reference.impossible()) {
        CHECK(max_abs_diff(r.distribution.probabilities, reference.distribution.probabilities) < 1e-10);
      }
    }
    std::vector<std::string> shuffled(vars.begin() + 1, vars.end());
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto r = posterior(net, q, InferenceOptions{EliminationHeuristic::min_degree, shuffled});
    if (!reference.impossible()) {
      CHECK(max_abs_diff(r.distribution.probabilities, reference.distribution.probabilities) < 1e-10);
    }
  }
}

TEST_CASE("observed variables are one-hot in marginals") {
  const auto net = beliefnet::testing::load_fixture("orchard-mini.bn");
  const auto e = observe(net, {{"LabTest", "positive"}, {"WaterloggedSoil", "yes"}, {"FungicideTreatment", "treat"}});
  const auto m = marginals(net, e, {"LabTest", "WaterloggedSoil", "Phytophthora", "TreeDamage"});
  CHECK(m.of("LabTest") == std::vector<double>{0.0, 1.0});
  CHECK(m.of("WaterloggedSoil") == std::vector<double>{0.0, 1.0});
  for (const auto* v : {"Phytophthora", "TreeDamage"}) {
    double s = 0.0;
    for (double p : m.of(v)) s += p;
    CHECK(std::abs(s - 1.0) < 1e-9);
  }
  // Marginals agree with single-target posteriors.
  const auto p = posterior(net, Query{{"Phytophthora"}, e});
  CHECK(max_abs_diff(m.of("Phytophthora"), p.distribution.probabilities) < 1e-12);
  CHECK(std::abs(m.evidence_probability - p.evidence_probability) < 1e-15);
}

TEST_CASE("orchard fixture against the oracle") {
  const auto net = beliefnet::testing::load_fixture("orchard-mini.bn");
  const auto e = observe(net, {{"TissueDamage", "moderate"}, {"CankerMargin", "present"}, {"RecentRain", "yes"}});
  for (const auto* target : {"Phytophthora", "AbioticStress", "OtherRootProblems", "LateSeasonGrowth"}) {
    const Query q{{target}, e};
    const auto fast = posterior(net, q);
    const auto slow = enumerate_joint(net, q);
    CHECK(max_abs_diff(fast.distribution.probabilities, slow.distribution.probabilities) < 1e-10);
    CHECK(std::abs(fast.evidence_probability - slow.evidence_probability) < 1e-12);
  }
}

TEST_CASE("chain rule on pure chains") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    std::uniform_int_distribution<std::size_t> len(3, 7);
    const std::size_t n = len(rng);
    std::vector<Node> nodes;
    std::vector<std::vector<std::vector<double>>> links;  // links[i][parent level] = row
    for (std::size_t i = 0; i < n; ++i) {
      const std::string name = "X" + std::to_string(i);
      if (i == 0) {
        nodes.push_back(chance(name, {"l0", "l1"}, {}, Cpt({}, 2, beliefnet::testing::random_distribution(rng, 2))));
        continue;
      }
      std::vector<std::vector<double>> rows;
      std::vector<double> entries;
      for (int r = 0; r < 2; ++r) {
        rows.push_back(beliefnet::testing::random_distribution(rng, 2));
        entries.insert(entries.end(), rows.back().begin(), rows.back().end());
      }
      links.push_back(rows);
      nodes.push_back(chance(name, {"l0", "l1"}, {"X" + std::to_string(i - 1)}, Cpt({2}, 2, entries)));
    }
    Network net(nodes);
    Evidence e;
    e.set(net, "X0", "l1");
    std::vector<double> belief{0.0, 1.0};
    for (const auto& rows : links) {
      std::vector<double> next{0.0, 0.0};
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b) next[b] += belief[a] * rows[a][b];
      belief = next;
    }
    const auto r = posterior(net, Query{{"X" + std::to_string(n - 1)}, e});
    CHECK(max_abs_diff(r.distribution.probabilities, belief) < 1e-12);
  }
}

TEST_CASE("malformed queries") {
  const auto net = beliefnet::testing::load_fixture("orchard-mini.bn");
  CHECK_THROWS_AS(posterior(net, Query{{"Nope"}, {}}), QueryError);
  CHECK_THROWS_AS(posterior(net, Query{{"TotalCost"}, {}}), QueryError);
  const auto e = observe(net, {{"LabTest", "positive"}});
  CHECK_THROWS_AS(posterior(net, Query{{"LabTest"}, e}), QueryError);
  // TreeDamage depends on the open fungicide decision.
  CHECK_THROWS_AS(posterior(net, Query{{"TreeDamage"}, e}), QueryError);
  CHECK_THROWS_AS(enumerate_joint(net, Query{{"TreeDamage"}, e}), QueryError);
  auto fixed = e;
  fixed.set(net, "FungicideTreatment", "dont_treat");
  CHECK_NOTHROW(posterior(net, Query{{"TreeDamage"}, fixed}));
  // Diagnoses do not descend from the decision, so it may stay open.
  CHECK_NOTHROW(posterior(net, Query{{"Phytophthora"}, e}));
}

TEST_CASE("state-space guard") {
  std::vector<Node> nodes;
  for (int i = 0; i < 12; ++i) {
    nodes.push_back(chance("V" + std::to_string(i), beliefnet::testing::numbered_levels(4), {},
                           Cpt({}, 4, {0.25, 0.25, 0.25, 0.25})));
  }
  std::vector<std::string> all;
  for (const auto& n : nodes) all.push_back(n.name());
  nodes.push_back(chance("Sink", {"l0", "l1"}, {}, Cpt({}, 2, {0.5, 0.5})));
  Network net(nodes);
  // 4^12 ~ 1.7e7 joint states over the targets.
  CHECK_THROWS_AS(enumerate_joint(net, Query{all, {}}), StateSpaceError);
  CHECK_NOTHROW(enumerate_joint(net, Query{{"V0"}, {}}));
  CHECK_NOTHROW(enumerate_joint(net, Query{{"V0", "V1"}, {}}, 16));
  CHECK_THROWS_AS(enumerate_joint(net, Query{{"V0", "V1"}, {}}, 15), StateSpaceError);
}

TEST_CASE("d-separation") {
  const auto net = beliefnet::testing::load_fixture("orchard-mini.bn");
  auto idx = [&](const char* name) { return net.index_of(name); };
  // Independent roots.
  CHECK(d_separated(net, {idx("LatePruning")}, {idx("RecentRain")}, {}));
  // Common effect opens the path.
  CHECK_FALSE(d_separated(net, {idx("LatePruning")}, {idx("WarmFall")}, {idx("LateSeasonGrowth")}));
  CHECK(d_separated(net, {idx("LatePruning")}, {idx("WarmFall")}, {}));
  // Chain blocked by its middle.
  CHECK_FALSE(d_separated(net, {idx("RecordedColdEpisodes")}, {idx("ReportsOfColdStress")}, {}));
  CHECK(d_separated(net, {idx("RecordedColdEpisodes")}, {idx("ReportsOfColdStress")}, {idx("ColdStressRegion")}));
  // Descendant of a collider also opens it.
  CHECK_FALSE(d_separated(net, {idx("LatePruning")}, {idx("WarmFall")}, {idx("WinterStress")}));

  const auto anc = ancestral_set(net, {idx("ColdStressRegion")});
  CHECK(anc[idx("ColdStressRegion")]);
  CHECK(anc[idx("RecordedColdEpisodes")]);
  CHECK_FALSE(anc[idx("LatePruning")]);
}

TEST_CASE("d-separated evidence leaves a posterior unchanged") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const auto net = beliefnet::testing::random_network(rng, {3, 8, 2, 3, 2, 0.3});
    const auto e = beliefnet::testing::random_evidence(rng, net, 1);
    const auto& [var, level] = *e.assignments().begin();
    for (std::size_t t = 0; t < net.size(); ++t) {
      if (net.node(t).name() == var) continue;
      if (!d_separated(net, {t}, {net.index_of(var)}, {})) continue;
      const auto before = posterior(net, Query{{net.node(t).name()}, {}});
      const auto after = posterior(net, Query{{net.node(t).name()}, e});
      if (after.impossible()) continue;
      CHECK(max_abs_diff(before.distribution.probabilities, after.distribution.probabilities) < 1e-12);
    }
  }
}
