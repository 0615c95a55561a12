#include "beliefnet/inference.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <numeric>
#include <set>

#include "beliefnet/factor.hpp"

namespace beliefnet {
namespace {

struct PreparedQuery {
  std::vector<std::size_t> targets;
  std::vector<std::pair<std::size_t, std::size_t>> observed;  // node, level
  std::vector<bool> relevant;
  std::vector<std::optional<std::size_t>> fixed;  // per node, observed level
};

PreparedQuery prepare(const Network& net, const Query& q) {
  PreparedQuery p;
  p.fixed.assign(net.size(), std::nullopt);
  for (const auto& [name, level] : q.evidence.assignments()) {
    auto i = net.find(name);
    if (!i) throw QueryError("evidence names unknown variable '" + name + "'");
    const auto& node = net.node(*i);
    if (node.kind == NodeKind::utility) {
      throw QueryError("utility variable '" + name + "' cannot be observed");
    }
    if (level >= node.variable.cardinality()) {
      throw QueryError("evidence level out of range for '" + name + "'");
    }
    p.observed.emplace_back(*i, level);
    p.fixed[*i] = level;
  }
  std::set<std::size_t> seen;
  for (const auto& name : q.targets) {
    auto i = net.find(name);
    if (!i) throw QueryError("unknown target variable '" + name + "'");
    if (net.node(*i).kind == NodeKind::utility) {
      throw QueryError("utility variable '" + name + "' cannot be a query target");
    }
    if (p.fixed[*i]) throw QueryError("target '" + name + "' is also observed");
    if (!seen.insert(*i).second) throw QueryError("target '" + name + "' listed twice");
    p.targets.push_back(*i);
  }
  std::vector<std::size_t> seeds = p.targets;
  for (const auto& [i, level] : p.observed) seeds.push_back(i);
  p.relevant = ancestral_set(net, seeds);
  for (std::size_t i = 0; i < net.size(); ++i) {
    if (p.relevant[i] && net.node(i).kind == NodeKind::decision && !p.fixed[i]) {
      throw QueryError("decision '" + net.node(i).name() +
                       "' influences the query and must be fixed by evidence");
    }
  }
  return p;
}

Factor node_factor(const Network& net, std::size_t i, const PreparedQuery& p) {
  const auto& node = net.node(i);
  if (node.kind == NodeKind::decision) {
    Factor f{{i}, {node.variable.cardinality()}, std::vector<double>(node.variable.cardinality(), 0.0)};
    f.table[*p.fixed[i]] = 1.0;
    return f;
  }
  Cpt cpt = compiled_cpt(net, i);
  Factor f;
  f.scope = net.parent_indices(i);
  f.cards = cpt.parent_cards();
  f.scope.push_back(i);
  f.cards.push_back(cpt.child_card());
  f.table = cpt.entries();
  return f;
}

std::set<std::size_t> neighbours(const std::vector<Factor>& factors, std::size_t var) {
  std::set<std::size_t> out;
  for (const auto& f : factors) {
    if (!f.contains(var)) continue;
    for (auto v : f.scope) {
      if (v != var) out.insert(v);
    }
  }
  return out;
}

std::size_t fill_in(const std::vector<Factor>& factors, const std::set<std::size_t>& nbrs) {
  std::size_t missing = 0;
  for (auto a = nbrs.begin(); a != nbrs.end(); ++a) {
    for (auto b = std::next(a); b != nbrs.end(); ++b) {
      bool linked = std::any_of(factors.begin(), factors.end(), [&](const Factor& f) {
        return f.contains(*a) && f.contains(*b);
      });
      if (!linked) ++missing;
    }
  }
  return missing;
}

std::size_t pick_next(const std::vector<Factor>& factors, const std::vector<std::size_t>& pending,
                      EliminationHeuristic heuristic) {
  switch (heuristic) {
    case EliminationHeuristic::declaration:
      return *std::min_element(pending.begin(), pending.end());
    case EliminationHeuristic::reverse_declaration:
      return *std::max_element(pending.begin(), pending.end());
    case EliminationHeuristic::min_degree:
    case EliminationHeuristic::min_fill:
      break;
  }
  std::size_t best = pending.front();
  std::size_t best_score = std::numeric_limits<std::size_t>::max();
  for (auto v : pending) {
    auto nbrs = neighbours(factors, v);
    std::size_t score = heuristic == EliminationHeuristic::min_fill ? fill_in(factors, nbrs) : nbrs.size();
    if (score < best_score || (score == best_score && v < best)) {
      best = v;
      best_score = score;
    }
  }
  return best;
}

void eliminate(std::vector<Factor>& factors, std::size_t var) {
  Factor joint = Factor::constant(1.0);
  std::vector<Factor> rest;
  for (auto& f : factors) {
    if (f.contains(var)) {
      joint = multiply(joint, f);
    } else {
      rest.push_back(std::move(f));
    }
  }
  rest.push_back(sum_out(joint, var));
  factors = std::move(rest);
}

PosteriorResult finish(const Network& net, const PreparedQuery& p, Factor joint) {
  PosteriorResult result;
  joint = permute(joint, p.targets);
  result.evidence_probability = joint.sum();
  if (result.impossible()) return result;
  auto& dist = result.distribution;
  for (auto t : p.targets) {
    dist.variables.push_back(net.node(t).name());
    dist.levels.push_back(net.node(t).variable.levels);
  }
  dist.probabilities = std::move(joint.table);
  for (auto& v : dist.probabilities) v /= result.evidence_probability;
  return result;
}

}  // namespace

std::vector<double> Distribution::marginal(std::string_view variable) const {
  auto it = std::find(variables.begin(), variables.end(), variable);
  if (it == variables.end()) throw QueryError("'" + std::string(variable) + "' is not in the distribution");
  const std::size_t pos = static_cast<std::size_t>(it - variables.begin());
  std::vector<std::size_t> cards;
  for (const auto& l : levels) cards.push_back(l.size());
  std::vector<double> out(cards[pos], 0.0);
  std::vector<std::size_t> digits(cards.size(), 0);
  std::size_t k = 0;
  do {
    out[digits[pos]] += probabilities[k++];
  } while (next_assignment(digits, cards));
  return out;
}

double Distribution::sum() const {
  return std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
}

std::vector<bool> ancestral_set(const Network& net, const std::vector<std::size_t>& nodes) {
  std::vector<bool> in(net.size(), false);
  std::vector<std::size_t> stack(nodes.begin(), nodes.end());
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    if (in[v]) continue;
    in[v] = true;
    for (auto p : net.parent_indices(v)) stack.push_back(p);
  }
  return in;
}

bool d_separated(const Network& net, const std::vector<std::size_t>& xs,
                 const std::vector<std::size_t>& ys, const std::vector<std::size_t>& given) {
  std::vector<bool> observed(net.size(), false);
  for (auto z : given) observed[z] = true;
  const auto observed_or_ancestor = ancestral_set(net, given);

  std::vector<std::vector<std::size_t>> children(net.size());
  for (std::size_t i = 0; i < net.size(); ++i) {
    for (auto p : net.parent_indices(i)) children[p].push_back(i);
  }

  // Reachability over (node, arrived-from-child) states.
  enum Dir { up = 0, down = 1 };
  std::vector<std::array<bool, 2>> visited(net.size(), {false, false});
  std::vector<bool> reachable(net.size(), false);
  std::vector<std::pair<std::size_t, Dir>> work;
  for (auto x : xs) work.emplace_back(x, up);
  while (!work.empty()) {
    auto [v, dir] = work.back();
    work.pop_back();
    if (visited[v][dir]) continue;
    visited[v][dir] = true;
    if (!observed[v]) reachable[v] = true;
    if (dir == up && !observed[v]) {
      for (auto p : net.parent_indices(v)) work.emplace_back(p, up);
      for (auto c : children[v]) work.emplace_back(c, down);
    } else if (dir == down) {
      if (!observed[v]) {
        for (auto c : children[v]) work.emplace_back(c, down);
      }
      if (observed_or_ancestor[v]) {
        for (auto p : net.parent_indices(v)) work.emplace_back(p, up);
      }
    }
  }
  return std::none_of(ys.begin(), ys.end(), [&](std::size_t y) { return reachable[y]; });
}

PosteriorResult posterior(const Network& net, const Query& q, const InferenceOptions& opts) {
  const auto p = prepare(net, q);

  std::vector<Factor> factors;
  for (std::size_t i = 0; i < net.size(); ++i) {
    if (!p.relevant[i]) continue;
    Factor f = node_factor(net, i, p);
    for (const auto& [var, level] : p.observed) f = reduce(f, var, level);
    factors.push_back(std::move(f));
  }

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < net.size(); ++i) {
    if (p.relevant[i] && !p.fixed[i] &&
        std::find(p.targets.begin(), p.targets.end(), i) == p.targets.end()) {
      pending.push_back(i);
    }
  }
  for (const auto& name : opts.order) {
    auto i = net.find(name);
    if (!i) throw QueryError("elimination order names unknown variable '" + name + "'");
    auto it = std::find(pending.begin(), pending.end(), *i);
    if (it == pending.end()) continue;
    pending.erase(it);
    eliminate(factors, *i);
  }
  while (!pending.empty()) {
    auto v = pick_next(factors, pending, opts.heuristic);
    pending.erase(std::find(pending.begin(), pending.end(), v));
    eliminate(factors, v);
  }

  Factor joint = Factor::constant(1.0);
  for (const auto& f : factors) joint = multiply(joint, f);
  return finish(net, p, std::move(joint));
}

PosteriorResult enumerate_joint(const Network& net, const Query& q, std::size_t max_states) {
  const auto p = prepare(net, q);
  const std::size_t n = net.size();

  // Nodes outside the ancestral closure of targets and evidence are barren:
  // their tables sum to one and drop out of the joint.
  std::vector<bool> keep(n, false);
  std::vector<std::size_t> stack(p.targets);
  for (const auto& [node, level] : p.observed) stack.push_back(node);
  while (!stack.empty()) {
    const auto i = stack.back();
    stack.pop_back();
    if (keep[i]) continue;
    keep[i] = true;
    for (auto pi : net.parent_indices(i)) stack.push_back(pi);
  }

  std::vector<std::size_t> free_vars;
  std::vector<std::size_t> free_cards;
  std::vector<std::size_t> levels(n, 0);
  std::size_t states = 1;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& node = net.node(i);
    if (node.kind == NodeKind::utility || !keep[i]) continue;
    if (p.fixed[i]) {
      levels[i] = *p.fixed[i];
      continue;
    }
    if (node.kind == NodeKind::decision) continue;  // irrelevant: pinned at level 0
    free_vars.push_back(i);
    free_cards.push_back(node.variable.cardinality());
    if (states > max_states / free_cards.back()) {
      throw StateSpaceError("joint state space exceeds " + std::to_string(max_states));
    }
    states *= free_cards.back();
  }

  struct Term {
    std::size_t node;
    std::vector<std::size_t> parents;
    Cpt cpt;
  };
  std::vector<Term> terms;
  for (std::size_t i = 0; i < n; ++i) {
    const auto kind = net.node(i).kind;
    if (keep[i] && (kind == NodeKind::chance || kind == NodeKind::deterministic)) {
      terms.push_back({i, net.parent_indices(i), compiled_cpt(net, i)});
    }
  }

  std::vector<std::size_t> target_cards;
  for (auto t : p.targets) target_cards.push_back(net.node(t).variable.cardinality());
  Factor joint{p.targets, target_cards, std::vector<double>(product_of(target_cards), 0.0)};

  std::vector<std::size_t> digits(free_vars.size(), 0);
  std::vector<std::size_t> parent_levels;
  do {
    for (std::size_t k = 0; k < free_vars.size(); ++k) levels[free_vars[k]] = digits[k];
    double w = 1.0;
    for (const auto& t : terms) {
      parent_levels.clear();
      for (auto pi : t.parents) parent_levels.push_back(levels[pi]);
      w *= t.cpt.at(t.cpt.row_index(parent_levels), levels[t.node]);
      if (w == 0.0) break;
    }
    std::size_t idx = 0;
    for (std::size_t k = 0; k < p.targets.size(); ++k) idx = idx * target_cards[k] + levels[p.targets[k]];
    joint.table[idx] += w;
  } while (next_assignment(digits, free_cards));

  return finish(net, p, std::move(joint));
}

double prob_of_evidence(const Network& net, const Evidence& e, const InferenceOptions& opts) {
  return posterior(net, Query{{}, e}, opts).evidence_probability;
}

const std::vector<double>& Marginals::of(std::string_view variable) const {
  auto it = std::find(variables.begin(), variables.end(), variable);
  if (it == variables.end()) throw QueryError("no marginal for '" + std::string(variable) + "'");
  return probabilities[static_cast<std::size_t>(it - variables.begin())];
}

Marginals marginals(const Network& net, const Evidence& e, const std::vector<std::string>& variables,
                    const InferenceOptions& opts) {
  Marginals out;
  out.evidence_probability = prob_of_evidence(net, e, opts);
  if (out.impossible()) return out;
  for (const auto& v : variables) {
    out.variables.push_back(v);
    if (auto level = e.get(v)) {
      std::vector<double> one_hot(net.node(v).variable.cardinality(), 0.0);
      one_hot[*level] = 1.0;
      out.probabilities.push_back(std::move(one_hot));
    } else {
      auto r = posterior(net, Query{{v}, e}, opts);
      out.probabilities.push_back(r.distribution.probabilities);
    }
  }
  return out;
}

}  // namespace beliefnet
