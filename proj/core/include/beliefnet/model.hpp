#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "beliefnet/canonical.hpp"
#include "beliefnet/cpt.hpp"

namespace beliefnet {

/// A discrete variable with ordered, named levels. Level 0 is the "absent"
/// state for causal variables; later levels are increasingly severe.
struct VariableSpec {
  std::string name;
  std::vector<std::string> levels;

  std::size_t cardinality() const { return levels.size(); }
  std::optional<std::size_t> level_index(std::string_view level) const;

  bool operator==(const VariableSpec&) const = default;
};

enum class NodeKind { chance, deterministic, decision, utility };

std::string_view to_string(NodeKind kind);
std::optional<NodeKind> parse_node_kind(std::string_view text);

/// Child level is the maximum of the parent level indices.
struct DeterministicMax {
  bool operator==(const DeterministicMax&) const = default;
};

/// Utility (negated dollar cost) per parent assignment, odometer order with
/// the last parent fastest.
struct UtilityTable {
  std::vector<std::size_t> parent_cards;
  std::vector<double> values;

  bool operator==(const UtilityTable&) const = default;
};

using Cpd = std::variant<std::monostate, Cpt, NoisyOrSpec, NoisyMaxSpec,
                         DeterministicMax, UtilityTable>;

struct Node {
  VariableSpec variable;
  NodeKind kind = NodeKind::chance;
  std::vector<std::string> parents;
  Cpd cpd;
  std::vector<std::string> tags;

  const std::string& name() const { return variable.name; }
  bool has_tag(std::string_view tag) const;

  bool operator==(const Node&) const = default;
};

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CycleError : public ModelError {
 public:
  explicit CycleError(std::vector<std::string> members);
  const std::vector<std::string>& members() const { return members_; }

 private:
  std::vector<std::string> members_;
};

/// Nodes in declaration order. Edges are implied by parent lists. A network
/// is mutable only while being built; after validation it is treated as an
/// immutable value.
class Network {
 public:
  Network() = default;
  explicit Network(std::vector<Node> nodes);

  /// Appends a node. Throws ModelError on a duplicate name.
  void add_node(Node node);

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }

  std::optional<std::size_t> find(std::string_view name) const;
  /// Throws ModelError when the name is unknown.
  std::size_t index_of(std::string_view name) const;
  const Node& node(std::string_view name) const { return nodes_[index_of(name)]; }
  const Node& node(std::size_t index) const { return nodes_[index]; }
  Node& mutable_node(std::string_view name) { return nodes_[index_of(name)]; }

  /// Parent indices of a node; throws on a dangling parent.
  std::vector<std::size_t> parent_indices(std::size_t index) const;
  std::vector<std::size_t> children_of(std::size_t index) const;

  std::optional<std::size_t> utility_node() const;
  std::vector<std::size_t> decision_nodes() const;
  std::vector<std::size_t> tagged(std::string_view tag) const;

  bool operator==(const Network& other) const { return nodes_ == other.nodes_; }

 private:
  std::vector<Node> nodes_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// Observed level per variable, stored as level indices.
class Evidence {
 public:
  Evidence() = default;

  /// Throws ModelError for unknown variables, unknown levels, and
  /// utility variables.
  void set(const Network& net, std::string_view variable, std::string_view level);
  void set(const Network& net, std::string_view variable, std::size_t level);
  void set_unchecked(std::string variable, std::size_t level);
  bool erase(std::string_view variable);
  void clear() { assignments_.clear(); }

  bool contains(std::string_view variable) const;
  std::optional<std::size_t> get(std::string_view variable) const;
  bool empty() const { return assignments_.empty(); }
  std::size_t size() const { return assignments_.size(); }

  const std::map<std::string, std::size_t, std::less<>>& assignments() const {
    return assignments_;
  }

  bool operator==(const Evidence&) const = default;

 private:
  std::map<std::string, std::size_t, std::less<>> assignments_;
};

enum class ViolationKind {
  cycle,
  dangling_parent,
  duplicate_parent,
  bad_levels,
  missing_cpd,
  unexpected_cpd,
  shape_mismatch,
  row_sum,
  entry_range,
  bad_parameter,
  level_set_mismatch,
  utility_structure,
  palette,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string node;
  std::string message;
  std::optional<std::size_t> row;
  std::optional<double> value;
  std::vector<std::string> members;

  /// Palette findings are lints; everything else prevents use of the network.
  bool is_lint() const { return kind == ViolationKind::palette; }
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const;  // no non-lint violations
  std::size_t error_count() const;
  std::size_t lint_count() const;
};

/// The assessment palette: approximate numbers experts commonly map verbal
/// phrases onto.
const std::vector<double>& probability_palette();
bool on_palette(double p);

ValidationReport validate(const Network& net);

/// Every node after all its parents; ties broken by declaration order.
/// Throws CycleError naming a strongly connected set, or ModelError on a
/// dangling parent.
std::vector<std::string> topological_order(const Network& net);
std::vector<std::size_t> topological_indices(const Network& net);

/// One-hot Cpt selecting the maximum parent level. All variables must share
/// the same ordered level set.
Cpt expand_deterministic_max(const std::vector<VariableSpec>& parents,
                             const VariableSpec& child);

/// Full Cpt of a chance or deterministic node, expanding canonical and
/// deterministic specs.
Cpt compiled_cpt(const Network& net, std::size_t index);

/// Strongly connected sets of size > 1 (or self-loops), each in declaration order.
std::vector<std::vector<std::string>> find_cycles(const Network& net);

}  // namespace beliefnet
