#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace beliefnet {

/// Full conditional probability table. Rows enumerate parent assignments in
/// odometer order (last parent fastest); each row is a distribution over the
/// child's levels.
class Cpt {
 public:
  Cpt() = default;
  Cpt(std::vector<std::size_t> parent_cards, std::size_t child_card);
  Cpt(std::vector<std::size_t> parent_cards, std::size_t child_card,
      std::vector<double> entries);

  const std::vector<std::size_t>& parent_cards() const { return parent_cards_; }
  std::size_t child_card() const { return child_card_; }
  std::size_t row_count() const;
  std::size_t entry_count() const { return entries_.size(); }

  std::span<const double> row(std::size_t r) const;
  std::span<double> row(std::size_t r);
  double at(std::size_t r, std::size_t level) const { return entries_[r * child_card_ + level]; }
  double& at(std::size_t r, std::size_t level) { return entries_[r * child_card_ + level]; }

  const std::vector<double>& entries() const { return entries_; }

  /// Row index of a parent assignment (one level index per parent).
  std::size_t row_index(std::span<const std::size_t> parent_levels) const;
  /// Inverse of row_index.
  std::vector<std::size_t> parent_levels(std::size_t r) const;

  bool operator==(const Cpt&) const = default;

 private:
  std::vector<std::size_t> parent_cards_;
  std::size_t child_card_ = 0;
  std::vector<double> entries_;
};

/// Product of cardinalities (1 for an empty list).
std::size_t product_of(std::span<const std::size_t> cards);

/// Advances an odometer (last digit fastest). Returns false after wrapping.
bool next_assignment(std::vector<std::size_t>& digits, std::span<const std::size_t> cards);

}  // namespace beliefnet
