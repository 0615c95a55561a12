#include "beliefnet/cpt.hpp"

#include <stdexcept>

namespace beliefnet {

std::size_t product_of(std::span<const std::size_t> cards) {
  std::size_t n = 1;
  for (auto c : cards) n *= c;
  return n;
}

bool next_assignment(std::vector<std::size_t>& digits, std::span<const std::size_t> cards) {
  for (std::size_t i = digits.size(); i-- > 0;) {
    if (++digits[i] < cards[i]) return true;
    digits[i] = 0;
  }
  return false;
}

Cpt::Cpt(std::vector<std::size_t> parent_cards, std::size_t child_card)
    : parent_cards_(std::move(parent_cards)), child_card_(child_card) {
  entries_.assign(row_count() * child_card_, 0.0);
}

Cpt::Cpt(std::vector<std::size_t> parent_cards, std::size_t child_card,
         std::vector<double> entries)
    : parent_cards_(std::move(parent_cards)), child_card_(child_card), entries_(std::move(entries)) {
  if (entries_.size() != row_count() * child_card_) {
    throw std::invalid_argument("Cpt: expected " + std::to_string(row_count() * child_card_) +
                                " entries, got " + std::to_string(entries_.size()));
  }
}

std::size_t Cpt::row_count() const { return product_of(parent_cards_); }

std::span<const double> Cpt::row(std::size_t r) const {
  return std::span<const double>(entries_).subspan(r * child_card_, child_card_);
}

std::span<double> Cpt::row(std::size_t r) {
  return std::span<double>(entries_).subspan(r * child_card_, child_card_);
}

std::size_t Cpt::row_index(std::span<const std::size_t> parent_levels) const {
  if (parent_levels.size() != parent_cards_.size()) {
    throw std::invalid_argument("Cpt::row_index: wrong number of parent levels");
  }
  std::size_t r = 0;
  for (std::size_t i = 0; i < parent_cards_.size(); ++i) {
    if (parent_levels[i] >= parent_cards_[i]) {
      throw std::out_of_range("Cpt::row_index: parent level out of range");
    }
    r = r * parent_cards_[i] + parent_levels[i];
  }
  return r;
}

std::vector<std::size_t> Cpt::parent_levels(std::size_t r) const {
  std::vector<std::size_t> levels(parent_cards_.size());
  for (std::size_t i = parent_cards_.size(); i-- > 0;) {
    levels[i] = r % parent_cards_[i];
    r /= parent_cards_[i];
  }
  return levels;
}

}  // namespace beliefnet
