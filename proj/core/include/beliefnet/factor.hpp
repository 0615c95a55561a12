#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace beliefnet {

/// Non-negative table over a set of variables (identified by network node
/// index). Entries are laid out in odometer order over `scope`, last
/// variable fastest.
struct Factor {
  std::vector<std::size_t> scope;
  std::vector<std::size_t> cards;
  std::vector<double> table;

  static Factor constant(double value) { return {{}, {}, {value}}; }

  std::size_t size() const { return table.size(); }
  bool contains(std::size_t var) const;
  /// Position of a variable in the scope; scope.size() when absent.
  std::size_t position(std::size_t var) const;
  double sum() const;
};

Factor multiply(const Factor& a, const Factor& b);
/// Sums a variable out of the factor.
Factor sum_out(const Factor& f, std::size_t var);
/// Restricts a variable to one level and drops it from the scope.
Factor reduce(const Factor& f, std::size_t var, std::size_t level);
/// Reorders the scope; `order` must be a permutation of f.scope.
Factor permute(const Factor& f, std::span<const std::size_t> order);

}  // namespace beliefnet
