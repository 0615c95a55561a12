#include "beliefnet/canonical.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace beliefnet {
namespace {

constexpr double kSumTolerance = 1e-9;

const NoisyOrCause& find_cause(const NoisyOrSpec& spec, const std::string& name) {
  for (const auto& c : spec.causes) {
    if (c.parent == name) return c;
  }
  throw ParameterError("noisy-OR: unknown cause '" + name + "'");
}

void check_probability(double p, const std::string& what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ParameterError(what + " must lie in [0, 1], got " + std::to_string(p));
  }
}

void check_distribution(std::span<const double> dist, std::size_t card, const std::string& what) {
  if (dist.size() != card) {
    throw ParameterError(what + " has " + std::to_string(dist.size()) + " entries, expected " +
                         std::to_string(card));
  }
  double sum = 0.0;
  for (double p : dist) {
    check_probability(p, what + " entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw ParameterError(what + " sums to " + std::to_string(sum));
  }
}

std::size_t parent_position(std::span<const std::string> parents, const std::string& name) {
  auto it = std::find(parents.begin(), parents.end(), name);
  if (it == parents.end()) {
    throw ParameterError("canonical spec names '" + name + "', which is not a parent");
  }
  return static_cast<std::size_t>(it - parents.begin());
}

// Folds one independent draw into the running cumulative product.
void fold_cdf(std::vector<double>& cdf, std::span<const double> dist) {
  double acc = 0.0;
  for (std::size_t k = 0; k < cdf.size(); ++k) {
    acc += dist[k];
    cdf[k] *= std::min(acc, 1.0);
  }
}

}  // namespace

double expand_noisy_or(const NoisyOrSpec& spec, std::span<const std::string> present) {
  if (spec.leak != 0.0) {
    throw ParameterError("expand_noisy_or requires a zero leak; use expand_leaky_noisy_or");
  }
  double none = 1.0;
  for (const auto& name : present) {
    const auto& cause = find_cause(spec, name);
    check_probability(cause.probability, "noisy-OR probability for '" + name + "'");
    none *= 1.0 - cause.probability;
  }
  return 1.0 - none;
}

double expand_leaky_noisy_or(const NoisyOrSpec& spec, std::span<const std::string> present) {
  const double p0 = spec.leak;
  if (!(p0 >= 0.0 && p0 < 1.0)) {
    throw ParameterError("noisy-OR leak must lie in [0, 1), got " + std::to_string(p0));
  }
  double none = 1.0 - p0;
  for (const auto& name : present) {
    const auto& cause = find_cause(spec, name);
    check_probability(cause.probability, "noisy-OR probability for '" + name + "'");
    if (spec.convention == LeakConvention::marginal) {
      if (cause.probability < p0) {
        throw ParameterError("noisy-OR probability for '" + name + "' (" +
                             std::to_string(cause.probability) + ") is below the leak (" +
                             std::to_string(p0) + ")");
      }
      none *= (1.0 - cause.probability) / (1.0 - p0);
    } else {
      none *= 1.0 - cause.probability;
    }
  }
  return 1.0 - none;
}

void check_spec(const NoisyOrSpec& spec, std::span<const std::string> parents,
                std::span<const std::size_t> parent_cards) {
  if (!(spec.leak >= 0.0 && spec.leak < 1.0)) {
    throw ParameterError("noisy-OR leak must lie in [0, 1), got " + std::to_string(spec.leak));
  }
  for (std::size_t i = 0; i < spec.causes.size(); ++i) {
    const auto& c = spec.causes[i];
    auto pos = parent_position(parents, c.parent);
    if (parent_cards[pos] != 2) {
      throw ParameterError("noisy-OR cause '" + c.parent + "' is not binary");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (spec.causes[j].parent == c.parent) {
        throw ParameterError("noisy-OR cause '" + c.parent + "' listed twice");
      }
    }
    check_probability(c.probability, "noisy-OR probability for '" + c.parent + "'");
    if (spec.convention == LeakConvention::marginal && c.probability < spec.leak) {
      throw ParameterError("noisy-OR probability for '" + c.parent + "' (" +
                           std::to_string(c.probability) + ") is below the leak (" +
                           std::to_string(spec.leak) + ")");
    }
  }
}

void check_spec(const NoisyMaxSpec& spec, std::span<const std::string> parents,
                std::span<const std::size_t> parent_cards) {
  if (spec.child_card < 2) throw ParameterError("noisy-MAX child needs at least 2 levels");
  if (!spec.leak.empty()) check_distribution(spec.leak, spec.child_card, "noisy-MAX leak");
  for (std::size_t i = 0; i < spec.entries.size(); ++i) {
    const auto& e = spec.entries[i];
    auto pos = parent_position(parents, e.parent);
    if (e.level == 0 || e.level >= parent_cards[pos]) {
      throw ParameterError("noisy-MAX entry for '" + e.parent + "' uses level " +
                           std::to_string(e.level) + ", which is not an active level");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (spec.entries[j].parent == e.parent && spec.entries[j].level == e.level) {
        throw ParameterError("noisy-MAX entry for '" + e.parent + ":" + std::to_string(e.level) +
                             "' listed twice");
      }
    }
    check_distribution(e.distribution, spec.child_card,
                       "noisy-MAX distribution for '" + e.parent + ":" + std::to_string(e.level) + "'");
  }
}

std::vector<double> expand_noisy_max(const NoisyMaxSpec& spec,
                                     std::span<const std::string> parents,
                                     std::span<const std::size_t> parent_cards,
                                     std::span<const std::size_t> assignment) {
  if (assignment.size() != parents.size() || parent_cards.size() != parents.size()) {
    throw ParameterError("noisy-MAX: assignment does not match the parent list");
  }
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] >= parent_cards[i]) {
      throw ParameterError("noisy-MAX: level out of range for '" + parents[i] + "'");
    }
  }
  std::vector<double> cdf(spec.child_card, 1.0);
  if (!spec.leak.empty()) fold_cdf(cdf, spec.leak);
  for (const auto& e : spec.entries) {
    auto pos = parent_position(parents, e.parent);
    if (assignment[pos] == e.level) fold_cdf(cdf, e.distribution);
  }
  cdf.back() = 1.0;
  std::vector<double> dist(spec.child_card);
  double prev = 0.0;
  for (std::size_t k = 0; k < cdf.size(); ++k) {
    dist[k] = std::max(cdf[k] - prev, 0.0);
    prev = cdf[k];
  }
  return dist;
}

Cpt compile_to_cpt(const NoisyOrSpec& spec, std::span<const std::string> parents,
                   std::span<const std::size_t> parent_cards) {
  check_spec(spec, parents, parent_cards);
  std::vector<std::size_t> cards(parent_cards.begin(), parent_cards.end());
  Cpt cpt(cards, 2);
  std::vector<bool> is_cause(parents.size(), false);
  for (const auto& c : spec.causes) is_cause[parent_position(parents, c.parent)] = true;

  std::vector<std::size_t> levels(parents.size(), 0);
  std::size_t r = 0;
  do {
    std::vector<std::string> present;
    for (std::size_t i = 0; i < parents.size(); ++i) {
      if (is_cause[i] && levels[i] == 1) present.push_back(parents[i]);
    }
    const double p = spec.leak == 0.0 ? expand_noisy_or(spec, present)
                                      : expand_leaky_noisy_or(spec, present);
    cpt.at(r, 0) = 1.0 - p;
    cpt.at(r, 1) = p;
    ++r;
  } while (next_assignment(levels, cards));
  return cpt;
}

Cpt compile_to_cpt(const NoisyMaxSpec& spec, std::span<const std::string> parents,
                   std::span<const std::size_t> parent_cards) {
  check_spec(spec, parents, parent_cards);
  std::vector<std::size_t> cards(parent_cards.begin(), parent_cards.end());
  Cpt cpt(cards, spec.child_card);
  std::vector<std::size_t> levels(parents.size(), 0);
  std::size_t r = 0;
  do {
    auto dist = expand_noisy_max(spec, parents, parent_cards, levels);
    std::copy(dist.begin(), dist.end(), cpt.row(r).begin());
    ++r;
  } while (next_assignment(levels, cards));
  return cpt;
}

NoisyMaxSpec to_noisy_max(const NoisyOrSpec& spec) {
  NoisyMaxSpec out;
  out.child_card = 2;
  for (const auto& c : spec.causes) {
    double q = c.probability;
    if (spec.convention == LeakConvention::marginal && spec.leak != 0.0) {
      q = 1.0 - (1.0 - c.probability) / (1.0 - spec.leak);
    }
    out.entries.push_back({c.parent, 1, {1.0 - q, q}});
  }
  if (spec.leak != 0.0) out.leak = {1.0 - spec.leak, spec.leak};
  return out;
}

ParameterCounts parameter_counts(std::span<const std::size_t> parent_cards,
                                 std::size_t child_card, bool has_leak) {
  if (child_card < 2) throw ParameterError("parameter_counts: child cardinality must be >= 2");
  ParameterCounts counts;
  const std::size_t free_per_row = child_card - 1;
  counts.full = product_of(parent_cards) * free_per_row;
  std::size_t active = 0;
  for (auto c : parent_cards) {
    if (c < 2) throw ParameterError("parameter_counts: parent cardinality must be >= 2");
    active += c - 1;
  }
  counts.canonical = active * free_per_row + (has_leak ? free_per_row : 0);
  return counts;
}

CountDiscrepancy compare_counts(const ParameterCounts& computed, const ParameterCounts& reported) {
  return {computed, reported, computed.full != reported.full,
          computed.canonical != reported.canonical};
}

CptDiff diff_cpts(const Cpt& a, const Cpt& b) {
  if (a.parent_cards() != b.parent_cards() || a.child_card() != b.child_card()) {
    throw ParameterError("diff_cpts: tables have different shapes");
  }
  const auto& ea = a.entries();
  const auto& eb = b.entries();
  CptDiff out;
  if (ea.empty()) return out;
  std::vector<double> diffs(ea.size());
  for (std::size_t i = 0; i < ea.size(); ++i) {
    diffs[i] = ea[i] - eb[i];
    out.max_abs_diff = std::max(out.max_abs_diff, std::abs(diffs[i]));
  }
  const double n = static_cast<double>(diffs.size());
  const double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / n;
  double ss = 0.0;
  for (double d : diffs) ss += (d - mean) * (d - mean);
  out.stdev_of_diffs = std::sqrt(ss / n);
  return out;
}

}  // namespace beliefnet
