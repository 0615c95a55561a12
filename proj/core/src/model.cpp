#include "beliefnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <set>
#include <sstream>

namespace beliefnet {
namespace {

constexpr double kRowTolerance = 1e-9;
constexpr double kPaletteTolerance = 1e-12;

std::string join(const std::vector<std::string>& items, const char* sep = ", ") {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

std::optional<std::size_t> VariableSpec::level_index(std::string_view level) const {
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] == level) return i;
  }
  return std::nullopt;
}

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::chance: return "chance";
    case NodeKind::deterministic: return "deterministic";
    case NodeKind::decision: return "decision";
    case NodeKind::utility: return "utility";
  }
  return "?";
}

std::optional<NodeKind> parse_node_kind(std::string_view text) {
  if (text == "chance") return NodeKind::chance;
  if (text == "deterministic") return NodeKind::deterministic;
  if (text == "decision") return NodeKind::decision;
  if (text == "utility") return NodeKind::utility;
  return std::nullopt;
}

bool Node::has_tag(std::string_view tag) const {
  return std::find(tags.begin(), tags.end(), tag) != tags.end();
}

CycleError::CycleError(std::vector<std::string> members)
    : ModelError("cycle among {" + join(members) + "}"), members_(std::move(members)) {}

Network::Network(std::vector<Node> nodes) {
  for (auto& n : nodes) add_node(std::move(n));
}

void Network::add_node(Node node) {
  if (index_.count(node.name())) throw ModelError("duplicate node '" + node.name() + "'");
  index_.emplace(node.name(), nodes_.size());
  nodes_.push_back(std::move(node));
}

std::optional<std::size_t> Network::find(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Network::index_of(std::string_view name) const {
  auto i = find(name);
  if (!i) throw ModelError("unknown variable '" + std::string(name) + "'");
  return *i;
}

std::vector<std::size_t> Network::parent_indices(std::size_t index) const {
  std::vector<std::size_t> out;
  out.reserve(nodes_[index].parents.size());
  for (const auto& p : nodes_[index].parents) {
    auto i = find(p);
    if (!i) {
      throw ModelError("node '" + nodes_[index].name() + "' names unknown parent '" + p + "'");
    }
    out.push_back(*i);
  }
  return out;
}

std::vector<std::size_t> Network::children_of(std::size_t index) const {
  std::vector<std::size_t> out;
  const auto& name = nodes_[index].name();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& ps = nodes_[i].parents;
    if (std::find(ps.begin(), ps.end(), name) != ps.end()) out.push_back(i);
  }
  return out;
}

std::optional<std::size_t> Network::utility_node() const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].kind == NodeKind::utility) return i;
  }
  return std::nullopt;
}

std::vector<std::size_t> Network::decision_nodes() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].kind == NodeKind::decision) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> Network::tagged(std::string_view tag) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].has_tag(tag)) out.push_back(i);
  }
  return out;
}

void Evidence::set(const Network& net, std::string_view variable, std::string_view level) {
  const auto& node = net.node(variable);
  auto idx = node.variable.level_index(level);
  if (!idx) {
    throw ModelError("variable '" + std::string(variable) + "' has no level '" +
                     std::string(level) + "'");
  }
  set(net, variable, *idx);
}

void Evidence::set(const Network& net, std::string_view variable, std::size_t level) {
  const auto& node = net.node(variable);
  if (node.kind == NodeKind::utility) {
    throw ModelError("utility variable '" + std::string(variable) + "' cannot be observed");
  }
  if (level >= node.variable.cardinality()) {
    throw ModelError("level index out of range for '" + std::string(variable) + "'");
  }
  assignments_[std::string(variable)] = level;
}

void Evidence::set_unchecked(std::string variable, std::size_t level) {
  assignments_[std::move(variable)] = level;
}

bool Evidence::erase(std::string_view variable) {
  auto it = assignments_.find(variable);
  if (it == assignments_.end()) return false;
  assignments_.erase(it);
  return true;
}

bool Evidence::contains(std::string_view variable) const {
  return assignments_.find(variable) != assignments_.end();
}

std::optional<std::size_t> Evidence::get(std::string_view variable) const {
  auto it = assignments_.find(variable);
  if (it == assignments_.end()) return std::nullopt;
  return it->second;
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::cycle: return "cycle";
    case ViolationKind::dangling_parent: return "dangling-parent";
    case ViolationKind::duplicate_parent: return "duplicate-parent";
    case ViolationKind::bad_levels: return "bad-levels";
    case ViolationKind::missing_cpd: return "missing-cpd";
    case ViolationKind::unexpected_cpd: return "unexpected-cpd";
    case ViolationKind::shape_mismatch: return "shape-mismatch";
    case ViolationKind::row_sum: return "row-sum";
    case ViolationKind::entry_range: return "entry-range";
    case ViolationKind::bad_parameter: return "bad-parameter";
    case ViolationKind::level_set_mismatch: return "level-set-mismatch";
    case ViolationKind::utility_structure: return "utility-structure";
    case ViolationKind::palette: return "palette";
  }
  return "?";
}

bool ValidationReport::ok() const { return error_count() == 0; }

std::size_t ValidationReport::error_count() const {
  return static_cast<std::size_t>(std::count_if(violations.begin(), violations.end(),
                                                [](const Violation& v) { return !v.is_lint(); }));
}

std::size_t ValidationReport::lint_count() const { return violations.size() - error_count(); }

const std::vector<double>& probability_palette() {
  static const std::vector<double> palette{0.0, 0.01, 0.05, 0.1, 0.2, 0.3, 0.5,
                                           0.7, 0.8,  0.9,  0.95, 0.99, 1.0};
  return palette;
}

bool on_palette(double p) {
  for (double q : probability_palette()) {
    if (std::abs(p - q) <= kPaletteTolerance) return true;
  }
  return false;
}

std::vector<std::vector<std::string>> find_cycles(const Network& net) {
  // Tarjan's algorithm over resolvable edges parent -> child.
  const std::size_t n = net.size();
  std::vector<std::vector<std::size_t>> children(n);
  std::vector<bool> self_loop(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& p : net.node(i).parents) {
      if (auto j = net.find(p)) {
        children[*j].push_back(i);
        if (*j == i) self_loop[i] = true;
      }
    }
  }
  std::vector<int> index(n, -1), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> sccs;
  int counter = 0;

  std::function<void(std::size_t)> strongconnect = [&](std::size_t v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (auto w : children[v]) {
      if (index[w] < 0) {
        strongconnect(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<std::size_t> scc;
      std::size_t w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        scc.push_back(w);
      } while (w != v);
      if (scc.size() > 1 || self_loop[v]) sccs.push_back(std::move(scc));
    }
  };
  for (std::size_t v = 0; v < n; ++v) {
    if (index[v] < 0) strongconnect(v);
  }

  std::vector<std::vector<std::string>> out;
  for (auto& scc : sccs) std::sort(scc.begin(), scc.end());
  std::sort(sccs.begin(), sccs.end());
  for (const auto& scc : sccs) {
    std::vector<std::string> names;
    for (auto i : scc) names.push_back(net.node(i).name());
    out.push_back(std::move(names));
  }
  return out;
}

std::vector<std::size_t> topological_indices(const Network& net) {
  const std::size_t n = net.size();
  std::vector<std::size_t> pending(n, 0);
  std::vector<std::vector<std::size_t>> children(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto p : net.parent_indices(i)) {
      children[p].push_back(i);
      ++pending[i];
    }
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (pending[i] == 0) ready.push(i);
  }
  std::vector<std::size_t> order;
  order.reserve(n);
  while (!ready.empty()) {
    auto v = ready.top();
    ready.pop();
    order.push_back(v);
    for (auto c : children[v]) {
      if (--pending[c] == 0) ready.push(c);
    }
  }
  if (order.size() != n) {
    auto cycles = find_cycles(net);
    throw CycleError(cycles.empty() ? std::vector<std::string>{} : cycles.front());
  }
  return order;
}

std::vector<std::string> topological_order(const Network& net) {
  std::vector<std::string> out;
  for (auto i : topological_indices(net)) out.push_back(net.node(i).name());
  return out;
}

Cpt expand_deterministic_max(const std::vector<VariableSpec>& parents, const VariableSpec& child) {
  for (const auto& p : parents) {
    if (p.levels != child.levels) {
      throw ModelError("deterministic max: level set of '" + p.name +
                       "' does not match child '" + child.name + "'");
    }
  }
  std::vector<std::size_t> cards(parents.size(), child.cardinality());
  Cpt cpt(cards, child.cardinality());
  std::vector<std::size_t> levels(parents.size(), 0);
  std::size_t r = 0;
  do {
    std::size_t m = 0;
    for (auto l : levels) m = std::max(m, l);
    cpt.at(r, m) = 1.0;
    ++r;
  } while (next_assignment(levels, cards));
  return cpt;
}

Cpt compiled_cpt(const Network& net, std::size_t index) {
  const auto& node = net.node(index);
  auto parents = net.parent_indices(index);
  std::vector<std::size_t> cards;
  for (auto p : parents) cards.push_back(net.node(p).variable.cardinality());

  return std::visit(
      [&](const auto& cpd) -> Cpt {
        using T = std::decay_t<decltype(cpd)>;
        if constexpr (std::is_same_v<T, Cpt>) {
          return cpd;
        } else if constexpr (std::is_same_v<T, NoisyOrSpec> || std::is_same_v<T, NoisyMaxSpec>) {
          return compile_to_cpt(cpd, node.parents, cards);
        } else if constexpr (std::is_same_v<T, DeterministicMax>) {
          std::vector<VariableSpec> specs;
          for (auto p : parents) specs.push_back(net.node(p).variable);
          return expand_deterministic_max(specs, node.variable);
        } else {
          throw ModelError("node '" + node.name() + "' has no probability distribution");
        }
      },
      node.cpd);
}

namespace {

void check_cpt(const Node& node, const Cpt& cpt, const std::vector<std::size_t>& cards,
               std::vector<Violation>& out) {
  if (cpt.parent_cards() != cards || cpt.child_card() != node.variable.cardinality() ||
      cpt.entry_count() != product_of(cards) * node.variable.cardinality()) {
    out.push_back({ViolationKind::shape_mismatch, node.name(),
                   "table shape does not match parents/levels of '" + node.name() + "' (expected " +
                       std::to_string(product_of(cards)) + " rows of " +
                       std::to_string(node.variable.cardinality()) + ")",
                   std::nullopt, std::nullopt, {}});
    return;
  }
  for (std::size_t r = 0; r < cpt.row_count(); ++r) {
    double sum = 0.0;
    bool range_ok = true;
    for (std::size_t k = 0; k < cpt.child_card(); ++k) {
      double p = cpt.at(r, k);
      sum += p;
      if (!(p >= 0.0 && p <= 1.0)) {
        range_ok = false;
        out.push_back({ViolationKind::entry_range, node.name(),
                       "entry " + format_double(p) + " of row " + std::to_string(r) +
                           " lies outside [0, 1]",
                       r, p, {}});
      } else if (!on_palette(p)) {
        out.push_back({ViolationKind::palette, node.name(),
                       "value " + format_double(p) + " in row " + std::to_string(r) +
                           " is not on the assessment palette",
                       r, p, {}});
      }
    }
    if (range_ok && std::abs(sum - 1.0) > kRowTolerance) {
      out.push_back({ViolationKind::row_sum, node.name(),
                     "row " + std::to_string(r) + " sums to " + format_double(sum), r, sum, {}});
    }
  }
}

void lint_value(const Node& node, double p, std::vector<Violation>& out) {
  if (p >= 0.0 && p <= 1.0 && !on_palette(p)) {
    out.push_back({ViolationKind::palette, node.name(),
                   "value " + format_double(p) + " is not on the assessment palette", std::nullopt,
                   p, {}});
  }
}

}  // namespace

ValidationReport validate(const Network& net) {
  ValidationReport report;
  auto& out = report.violations;
  bool parents_resolve = true;
  std::size_t utility_count = 0;

  for (std::size_t i = 0; i < net.size(); ++i) {
    const auto& node = net.node(i);
    const bool needs_levels = node.kind != NodeKind::utility;
    if (needs_levels) {
      std::set<std::string> seen(node.variable.levels.begin(), node.variable.levels.end());
      if (node.variable.levels.size() < 2 || seen.size() != node.variable.levels.size()) {
        out.push_back({ViolationKind::bad_levels, node.name(),
                       "variable '" + node.name() + "' needs at least 2 distinct levels",
                       std::nullopt, std::nullopt, {}});
      }
    }
    std::set<std::string> seen_parents;
    for (const auto& p : node.parents) {
      if (!net.find(p)) {
        parents_resolve = false;
        out.push_back({ViolationKind::dangling_parent, node.name(),
                       "node '" + node.name() + "' names unknown parent '" + p + "'", std::nullopt,
                       std::nullopt, {p}});
      } else if (net.node(p).kind == NodeKind::utility) {
        out.push_back({ViolationKind::utility_structure, node.name(),
                       "utility node '" + p + "' cannot have children", std::nullopt,
                       std::nullopt, {p}});
      }
      if (!seen_parents.insert(p).second) {
        out.push_back({ViolationKind::duplicate_parent, node.name(),
                       "parent '" + p + "' listed twice", std::nullopt, std::nullopt, {p}});
      }
    }
    if (node.kind == NodeKind::utility) ++utility_count;
  }
  if (utility_count > 1) {
    out.push_back({ViolationKind::utility_structure, "",
                   "at most one utility node is supported, found " + std::to_string(utility_count),
                   std::nullopt, std::nullopt, {}});
  }

  for (const auto& cycle : find_cycles(net)) {
    std::string msg = "cycle among {";
    for (std::size_t k = 0; k < cycle.size(); ++k) msg += (k ? ", " : "") + cycle[k];
    out.push_back({ViolationKind::cycle, cycle.front(), msg + "}", std::nullopt, std::nullopt, cycle});
  }

  if (!parents_resolve) return report;

  for (std::size_t i = 0; i < net.size(); ++i) {
    const auto& node = net.node(i);
    auto parents = net.parent_indices(i);
    std::vector<std::size_t> cards;
    for (auto p : parents) cards.push_back(net.node(p).variable.cardinality());
    const Cpd& cpd = node.cpd;

    auto fail = [&](ViolationKind kind, std::string msg) {
      out.push_back({kind, node.name(), std::move(msg), std::nullopt, std::nullopt, {}});
    };

    switch (node.kind) {
      case NodeKind::decision:
        if (!std::holds_alternative<std::monostate>(cpd)) {
          fail(ViolationKind::unexpected_cpd, "decision node '" + node.name() + "' carries a distribution");
        }
        continue;
      case NodeKind::utility:
        if (const auto* u = std::get_if<UtilityTable>(&cpd)) {
          if (u->parent_cards != cards || u->values.size() != product_of(cards)) {
            fail(ViolationKind::shape_mismatch, "utility table of '" + node.name() +
                                                    "' needs " + std::to_string(product_of(cards)) +
                                                    " values");
          }
          for (double v : u->values) {
            if (!std::isfinite(v)) {
              fail(ViolationKind::bad_parameter, "utility table of '" + node.name() + "' has a non-finite value");
              break;
            }
          }
        } else {
          fail(ViolationKind::missing_cpd, "utility node '" + node.name() + "' needs a utility table");
        }
        continue;
      case NodeKind::deterministic:
        if (!std::holds_alternative<DeterministicMax>(cpd)) {
          fail(ViolationKind::missing_cpd, "deterministic node '" + node.name() + "' needs a max rule");
          continue;
        }
        for (auto p : parents) {
          if (net.node(p).variable.levels != node.variable.levels) {
            fail(ViolationKind::level_set_mismatch, "parent '" + net.node(p).name() +
                                                        "' of max node '" + node.name() +
                                                        "' has a different level set");
          }
        }
        continue;
      case NodeKind::chance:
        break;
    }

    if (const auto* cpt = std::get_if<Cpt>(&cpd)) {
      check_cpt(node, *cpt, cards, out);
    } else if (const auto* nor = std::get_if<NoisyOrSpec>(&cpd)) {
      if (node.variable.cardinality() != 2) {
        fail(ViolationKind::shape_mismatch, "noisy-OR child '" + node.name() + "' must be binary");
        continue;
      }
      try {
        check_spec(*nor, node.parents, cards);
        if (nor->leak != 0.0) lint_value(node, nor->leak, out);
        for (const auto& c : nor->causes) lint_value(node, c.probability, out);
      } catch (const ParameterError& e) {
        fail(ViolationKind::bad_parameter, e.what());
      }
    } else if (const auto* nmax = std::get_if<NoisyMaxSpec>(&cpd)) {
      if (nmax->child_card != node.variable.cardinality()) {
        fail(ViolationKind::shape_mismatch, "noisy-MAX spec of '" + node.name() +
                                                "' does not match the child's level count");
        continue;
      }
      try {
        check_spec(*nmax, node.parents, cards);
        for (double p : nmax->leak) lint_value(node, p, out);
        for (const auto& e : nmax->entries) {
          for (double p : e.distribution) lint_value(node, p, out);
        }
      } catch (const ParameterError& e) {
        fail(ViolationKind::bad_parameter, e.what());
      }
    } else if (std::holds_alternative<std::monostate>(cpd)) {
      fail(ViolationKind::missing_cpd, "chance node '" + node.name() + "' has no distribution");
    } else {
      fail(ViolationKind::unexpected_cpd, "chance node '" + node.name() + "' has an unsupported distribution");
    }
  }
  return report;
}

}  // namespace beliefnet
