#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "beliefnet/decision.hpp"
#include "testing.hpp"

using namespace beliefnet;
using beliefnet::testing::chance;

namespace {

// X {lo, hi} with P(hi) = p, decision D {a, b}, utility over (X, D).
Network gamble(double p, std::vector<double> utilities) {
  Node d;
  d.variable = VariableSpec{"D", {"a", "b"}};
  d.kind = NodeKind::decision;
  Node u;
  u.variable = VariableSpec{"U", {}};
  u.kind = NodeKind::utility;
  u.parents = {"X", "D"};
  u.cpd = UtilityTable{{2, 2}, std::move(utilities)};
  return Network({chance("X", {"lo", "hi"}, {}, Cpt({}, 2, {1 - p, p})), d, u});
}

Evidence choose(const Network& net, const char* variable, const char* level) {
  Evidence e;
  e.set(net, variable, level);
  return e;
}

void transform_utilities(Network& net, double a, double b) {
  const auto u = *net.utility_node();
  auto& table = std::get<UtilityTable>(net.mutable_node(net.node(u).name()).cpd);
  for (auto& v : table.values) v = a * v + b;
}

std::vector<Evidence> orchard_cases(const Network& net) {
  std::vector<Evidence> out(1);
  auto add = [&](std::initializer_list<std::pair<const char*, const char*>> items) {
    Evidence e;
    for (const auto& [v, l] : items) e.set(net, v, l);
    out.push_back(e);
  };
  add({{"LabTest", "positive"}});
  add({{"LabTest", "positive"}, {"CankerMargin", "present"}, {"WaterloggedSoil", "yes"}});
  add({{"LabTest", "negative"}, {"TissueDamage", "none"}});
  add({{"TissueDamage", "severe"}, {"ReportsOfColdStress", "reported"}});
  add({{"Phytophthora", "beyond_recovery"}});
  add({{"Phytophthora", "recoverable"}});
  add({{"CankerMargin", "present"}, {"ResistantRootstock", "yes"}});
  return out;
}

// Weighted sum over the joint posterior of the utility parents, computed by
// the enumeration oracle.
double oracle_eu(const Network& net, const Evidence& e, const std::string& alternative) {
  const auto& d = net.node(net.decision_nodes().front());
  const auto& u = net.node(*net.utility_node());
  const auto& table = std::get<UtilityTable>(u.cpd);
  Evidence fixed = e;
  fixed.set(net, d.name(), alternative);
  std::vector<std::string> targets;
  for (const auto& p : u.parents) {
    if (!fixed.contains(p)) targets.push_back(p);
  }
  const auto joint = enumerate_joint(net, Query{targets, fixed});
  std::vector<std::size_t> cards;
  for (const auto& p : u.parents) cards.push_back(net.node(p).variable.cardinality());
  double eu = 0.0;
  std::size_t k = 0;
  std::vector<std::size_t> levels(targets.size(), 0);
  do {
    std::vector<std::size_t> row;
    std::size_t t = 0;
    for (const auto& p : u.parents) row.push_back(fixed.contains(p) ? *fixed.get(p) : levels[t++]);
    std::size_t index = 0;
    for (std::size_t i = 0; i < row.size(); ++i) index = index * cards[i] + row[i];
    eu += joint.distribution.probabilities[k++] * table.values[index];
    std::vector<std::size_t> tc;
    for (const auto& name : targets) tc.push_back(net.node(name).variable.cardinality());
    if (!next_assignment(levels, tc)) break;
  } while (true);
  return eu;
}

}  // namespace

TEST_CASE("two-term mixture") {
  const auto net = gamble(0.75, {0, 0, -100, -100});
  CHECK(expected_utility(net, {}, choose(net, "D", "a")) == doctest::Approx(-75.0).epsilon(1e-15));
  CHECK(std::abs(expected_utility(net, {}, choose(net, "D", "b")) + 75.0) < 1e-12);
}

TEST_CASE("identical alternatives tie to the first declared") {
  const auto net = gamble(0.4, {-10, -10, -50, -50});
  const auto rec = recommend(net, {});
  CHECK(rec.tie);
  CHECK(rec.best == 0);
  CHECK(rec.recommended() == "a");
  CHECK(rec.decision == "D");
  CHECK(rec.alternatives == std::vector<std::string>{"a", "b"});
}

TEST_CASE("near ties use the absolute tolerance") {
  auto rec = recommend(gamble(0.5, {0, 5e-10, 0, 5e-10}), {});
  CHECK(rec.tie);
  CHECK(rec.recommended() == "a");
  rec = recommend(gamble(0.5, {0, 1e-6, 0, 1e-6}), {});
  CHECK_FALSE(rec.tie);
  CHECK(rec.recommended() == "b");
}

TEST_CASE("a dominant alternative wins") {
  const auto net = gamble(0.3, {-20, -5, -80, -60});
  const auto rec = recommend(net, {});
  CHECK(rec.recommended() == "b");
  CHECK_FALSE(rec.tie);
  CHECK(rec.expected_utilities[1] > rec.expected_utilities[0]);
}

TEST_CASE("utility of an observed parent is a table lookup") {
  const auto net = gamble(0.3, {-20, -5, -80, -60});
  auto e = choose(net, "X", "hi");
  CHECK(expected_utility(net, e, choose(net, "D", "a")) == -80.0);
  CHECK(expected_utility(net, e, choose(net, "D", "b")) == -60.0);

  const auto orchard = beliefnet::testing::load_fixture("orchard-mini.bn");
  const auto& levels = orchard.node("TreeDamage").variable.levels;
  const double table[4][2] = {{0, -30}, {-40, -70}, {-150, -180}, {-400, -430}};
  for (std::size_t td = 0; td < levels.size(); ++td) {
    auto ev = choose(orchard, "TreeDamage", levels[td].c_str());
    CHECK(expected_utility(orchard, ev, choose(orchard, "FungicideTreatment", "dont_treat")) == table[td][0]);
    CHECK(expected_utility(orchard, ev, choose(orchard, "FungicideTreatment", "treat")) == table[td][1]);
  }
}

TEST_CASE("errors") {
  const auto net = gamble(0.3, {-20, -5, -80, -60});
  CHECK_THROWS_AS(expected_utility(net, {}, {}), QueryError);
  Network plain({chance("X", {"lo", "hi"}, {}, Cpt({}, 2, {0.5, 0.5}))});
  CHECK_THROWS_AS(expected_utility(plain, {}, {}), ModelError);
  CHECK_THROWS_AS(recommend(plain, {}), ModelError);

  // Evidence with probability zero.
  auto certain = gamble(1.0, {-20, -5, -80, -60});
  auto impossible = choose(certain, "X", "lo");
  CHECK_THROWS_AS(expected_utility(certain, impossible, choose(certain, "D", "a")), EvidenceConflict);
  CHECK_THROWS_AS(recommend(certain, impossible), EvidenceConflict);
}

TEST_CASE("alternative overrides decision evidence") {
  const auto net = gamble(0.3, {-20, -5, -80, -60});
  auto e = choose(net, "D", "a");
  CHECK(expected_utility(net, e, choose(net, "D", "b")) == expected_utility(net, {}, choose(net, "D", "b")));
  const auto rec = recommend(net, e);
  CHECK(rec.recommended() == "b");
}

TEST_CASE("orchard: near-certain infection recommends treatment") {
  const auto net = beliefnet::testing::load_fixture("orchard-mini.bn");
  Evidence e;
  e.set(net, "LabTest", "positive");
  e.set(net, "CankerMargin", "present");
  e.set(net, "WaterloggedSoil", "yes");
  const auto p = posterior(net, Query{{"Phytophthora"}, e});
  CHECK(p.distribution.probabilities[0] < 0.1);
  const auto rec = recommend(net, e);
  CHECK(rec.recommended() == "treat");
  CHECK_FALSE(rec.tie);

  // With no evidence the $30 treatment is not worth it.
  CHECK(recommend(net, {}).recommended() == "dont_treat");
}

TEST_CASE("orchard expected utilities match the enumeration oracle") {
  const auto net = beliefnet::testing::load_fixture("orchard-mini.bn");
  for (const auto& e : orchard_cases(net)) {
    for (const auto* alt : {"dont_treat", "treat"}) {
      const double fast = expected_utility(net, e, choose(net, "FungicideTreatment", alt));
      CHECK(std::abs(fast - oracle_eu(net, e, alt)) < 1e-10);
    }
  }
}

TEST_CASE("argmax is invariant under positive affine transforms") {
  const auto base = beliefnet::testing::load_fixture("orchard-mini.bn");
  const auto cases = orchard_cases(base);
  std::vector<DecisionRecommendation> reference;
  for (const auto& e : cases) reference.push_back(recommend(base, e));
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  std::uniform_real_distribution<double> shift(-1000.0, 1000.0);
  for (int trial = 0; trial < 100; ++trial) {
    auto net = base;
    const double a = scale(rng);
    const double b = shift(rng);
    transform_utilities(net, a, b);
    for (std::size_t c = 0; c < cases.size(); ++c) {
      const auto rec = recommend(net, cases[c]);
      CHECK(rec.best == reference[c].best);
      CHECK(rec.tie == reference[c].tie);
      for (std::size_t k = 0; k < rec.expected_utilities.size(); ++k) {
        const double expected = a * reference[c].expected_utilities[k] + b;
        CHECK(std::abs(rec.expected_utilities[k] - expected) < 1e-9 * std::max(1.0, std::abs(expected)));
      }
    }
  }
}

TEST_CASE("expected utility is linear in the utility table") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> value(-500.0, 0.0);
  std::uniform_real_distribution<double> weight(-3.0, 3.0);
  const auto base = beliefnet::testing::load_fixture("orchard-mini.bn");
  const auto cases = orchard_cases(base);
  const auto uname = base.node(*base.utility_node()).name();
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> u1(8), u2(8), mix(8);
    const double alpha = weight(rng), beta = weight(rng);
    for (std::size_t i = 0; i < 8; ++i) {
      u1[i] = value(rng);
      u2[i] = value(rng);
      mix[i] = alpha * u1[i] + beta * u2[i];
    }
    auto with = [&](const std::vector<double>& values) {
      auto net = base;
      std::get<UtilityTable>(net.mutable_node(uname).cpd).values = values;
      return net;
    };
    const auto n1 = with(u1), n2 = with(u2), nm = with(mix);
    const auto& e = cases[static_cast<std::size_t>(trial) % cases.size()];
    for (const auto* alt : {"dont_treat", "treat"}) {
      const auto pick = choose(base, "FungicideTreatment", alt);
      const double lhs = expected_utility(nm, e, pick);
      const double rhs = alpha * expected_utility(n1, e, pick) + beta * expected_utility(n2, e, pick);
      CHECK(std::abs(lhs - rhs) < 1e-9);
    }
  }
}

TEST_CASE("single_decision") {
  const auto net = beliefnet::testing::load_fixture("orchard-mini.bn");
  CHECK(net.node(single_decision(net)).name() == "FungicideTreatment");
  Network none({chance("X", {"lo", "hi"}, {}, Cpt({}, 2, {0.5, 0.5}))});
  CHECK_THROWS_AS(single_decision(none), ModelError);
}
