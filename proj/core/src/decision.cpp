#include "beliefnet/decision.hpp"

#include <cmath>

namespace beliefnet {

double expected_utility(const Network& net, const Evidence& evidence, const Evidence& alternative,
                        const InferenceOptions& opts) {
  const auto u = net.utility_node();
  if (!u) throw ModelError("network has no utility node");

  Evidence merged = evidence;
  for (const auto& [name, level] : alternative.assignments()) {
    if (net.node(name).kind != NodeKind::decision) {
      throw QueryError("'" + name + "' is not a decision variable");
    }
    merged.set(net, name, level);
  }
  for (auto d : net.decision_nodes()) {
    if (!merged.contains(net.node(d).name())) {
      throw QueryError("decision '" + net.node(d).name() + "' has no alternative selected");
    }
  }

  const auto& unode = net.node(*u);
  const auto& table = std::get<UtilityTable>(unode.cpd);
  std::vector<std::string> open;
  for (const auto& p : unode.parents) {
    if (!merged.contains(p)) open.push_back(p);
  }

  auto result = posterior(net, Query{open, merged}, opts);
  if (result.impossible()) throw EvidenceConflict();

  // Walk every utility-parent assignment consistent with the fixed parents.
  const auto parents = net.parent_indices(*u);
  std::vector<std::size_t> cards;
  for (auto p : parents) cards.push_back(net.node(p).variable.cardinality());
  std::vector<std::size_t> open_cards;
  for (const auto& name : open) open_cards.push_back(net.node(name).variable.cardinality());

  double eu = 0.0;
  std::vector<std::size_t> open_levels(open.size(), 0);
  std::size_t k = 0;
  do {
    std::size_t row = 0;
    std::size_t next_open = 0;
    for (std::size_t i = 0; i < parents.size(); ++i) {
      const auto& name = unode.parents[i];
      std::size_t level = 0;
      if (auto fixed = merged.get(name)) {
        level = *fixed;
      } else {
        level = open_levels[next_open++];
      }
      row = row * cards[i] + level;
    }
    eu += result.distribution.probabilities[k++] * table.values[row];
  } while (next_assignment(open_levels, open_cards));
  return eu;
}

std::size_t single_decision(const Network& net) {
  auto decisions = net.decision_nodes();
  if (decisions.size() != 1) {
    throw ModelError("expected exactly one decision node, found " + std::to_string(decisions.size()));
  }
  return decisions.front();
}

DecisionRecommendation recommend(const Network& net, const Evidence& evidence,
                                 const InferenceOptions& opts) {
  const auto d = single_decision(net);
  const auto& node = net.node(d);
  Evidence base = evidence;
  base.erase(node.name());

  DecisionRecommendation rec;
  rec.decision = node.name();
  rec.alternatives = node.variable.levels;
  for (std::size_t a = 0; a < rec.alternatives.size(); ++a) {
    Evidence alt;
    alt.set(net, node.name(), a);
    rec.expected_utilities.push_back(expected_utility(net, base, alt, opts));
  }
  for (std::size_t a = 1; a < rec.expected_utilities.size(); ++a) {
    if (rec.expected_utilities[a] > rec.expected_utilities[rec.best] + kTieTolerance) rec.best = a;
  }
  for (std::size_t a = 0; a < rec.expected_utilities.size(); ++a) {
    if (a != rec.best &&
        std::abs(rec.expected_utilities[a] - rec.expected_utilities[rec.best]) <= kTieTolerance) {
      rec.tie = true;
    }
  }
  return rec;
}

}  // namespace beliefnet
