#include "beliefnet/factor.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "beliefnet/cpt.hpp"

namespace beliefnet {
namespace {

std::vector<std::size_t> strides_of(const std::vector<std::size_t>& cards) {
  std::vector<std::size_t> strides(cards.size(), 1);
  for (std::size_t i = cards.size(); i-- > 1;) strides[i - 1] = strides[i] * cards[i];
  return strides;
}

// Stride of each `target` variable inside `f`, zero when absent.
std::vector<std::size_t> projected_strides(const Factor& f, const std::vector<std::size_t>& target) {
  auto own = strides_of(f.cards);
  std::vector<std::size_t> out(target.size(), 0);
  for (std::size_t i = 0; i < target.size(); ++i) {
    auto p = f.position(target[i]);
    if (p < f.scope.size()) out[i] = own[p];
  }
  return out;
}

}  // namespace

bool Factor::contains(std::size_t var) const { return position(var) < scope.size(); }

std::size_t Factor::position(std::size_t var) const {
  return static_cast<std::size_t>(std::find(scope.begin(), scope.end(), var) - scope.begin());
}

double Factor::sum() const { return std::accumulate(table.begin(), table.end(), 0.0); }

Factor multiply(const Factor& a, const Factor& b) {
  Factor out;
  out.scope = a.scope;
  out.cards = a.cards;
  for (std::size_t i = 0; i < b.scope.size(); ++i) {
    if (!a.contains(b.scope[i])) {
      out.scope.push_back(b.scope[i]);
      out.cards.push_back(b.cards[i]);
    } else if (a.cards[a.position(b.scope[i])] != b.cards[i]) {
      throw std::invalid_argument("multiply: cardinality mismatch");
    }
  }
  out.table.assign(product_of(out.cards), 0.0);
  const auto sa = projected_strides(a, out.scope);
  const auto sb = projected_strides(b, out.scope);

  std::vector<std::size_t> digits(out.scope.size(), 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t k = 0; k < out.table.size(); ++k) {
    out.table[k] = a.table[ia] * b.table[ib];
    // Odometer step with incremental index updates.
    for (std::size_t i = digits.size(); i-- > 0;) {
      if (++digits[i] < out.cards[i]) {
        ia += sa[i];
        ib += sb[i];
        break;
      }
      ia -= sa[i] * (out.cards[i] - 1);
      ib -= sb[i] * (out.cards[i] - 1);
      digits[i] = 0;
    }
  }
  return out;
}

Factor sum_out(const Factor& f, std::size_t var) {
  const auto p = f.position(var);
  if (p == f.scope.size()) return f;
  Factor out;
  for (std::size_t i = 0; i < f.scope.size(); ++i) {
    if (i == p) continue;
    out.scope.push_back(f.scope[i]);
    out.cards.push_back(f.cards[i]);
  }
  out.table.assign(product_of(out.cards), 0.0);
  const auto strides = strides_of(f.cards);
  const std::size_t inner = strides[p];
  const std::size_t card = f.cards[p];
  const std::size_t outer = f.table.size() / (inner * card);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t l = 0; l < card; ++l) {
      const double* src = f.table.data() + (o * card + l) * inner;
      double* dst = out.table.data() + o * inner;
      for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
    }
  }
  return out;
}

Factor reduce(const Factor& f, std::size_t var, std::size_t level) {
  const auto p = f.position(var);
  if (p == f.scope.size()) return f;
  if (level >= f.cards[p]) throw std::out_of_range("reduce: level out of range");
  Factor out;
  for (std::size_t i = 0; i < f.scope.size(); ++i) {
    if (i == p) continue;
    out.scope.push_back(f.scope[i]);
    out.cards.push_back(f.cards[i]);
  }
  out.table.resize(product_of(out.cards));
  const auto strides = strides_of(f.cards);
  const std::size_t inner = strides[p];
  const std::size_t card = f.cards[p];
  const std::size_t outer = f.table.size() / (inner * card);
  for (std::size_t o = 0; o < outer; ++o) {
    const double* src = f.table.data() + (o * card + level) * inner;
    std::copy(src, src + inner, out.table.data() + o * inner);
  }
  return out;
}

Factor permute(const Factor& f, std::span<const std::size_t> order) {
  if (order.size() != f.scope.size()) throw std::invalid_argument("permute: scope size mismatch");
  Factor out;
  out.scope.assign(order.begin(), order.end());
  for (auto v : order) {
    auto p = f.position(v);
    if (p == f.scope.size()) throw std::invalid_argument("permute: variable not in scope");
    out.cards.push_back(f.cards[p]);
  }
  out.table.resize(f.table.size());
  const auto src_strides = projected_strides(f, out.scope);
  std::vector<std::size_t> digits(out.scope.size(), 0);
  std::size_t k = 0;
  do {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < digits.size(); ++i) idx += digits[i] * src_strides[i];
    out.table[k++] = f.table[idx];
  } while (next_assignment(digits, out.cards));
  return out;
}

}  // namespace beliefnet
