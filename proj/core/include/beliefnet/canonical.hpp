#pragma once

// Noisy-OR family: compact parameterizations of independent multi-cause
// influences and their compilation to full conditional tables.

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "beliefnet/cpt.hpp"

namespace beliefnet {

class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// How the per-cause probabilities of a leaky noisy-OR were assessed.
enum class LeakConvention {
  /// p_i is P(effect | cause i alone), background causes included.
  marginal,
  /// p_i is the sufficiency of cause i net of the leak.
  net,
};

struct NoisyOrCause {
  std::string parent;
  double probability = 0.0;

  bool operator==(const NoisyOrCause&) const = default;
};

/// Binary effect, binary causes (level 1 = present).
struct NoisyOrSpec {
  std::vector<NoisyOrCause> causes;
  double leak = 0.0;
  LeakConvention convention = LeakConvention::marginal;

  bool operator==(const NoisyOrSpec&) const = default;
};

/// Sufficiency distribution for one parent at one active level (>= 1).
struct NoisyMaxEntry {
  std::string parent;
  std::size_t level = 1;
  std::vector<double> distribution;

  bool operator==(const NoisyMaxEntry&) const = default;
};

/// Multi-level effect: the realized child level is the maximum of the levels
/// drawn independently for each active cause and for the leak. Missing
/// entries and parent level 0 draw "none".
struct NoisyMaxSpec {
  std::size_t child_card = 2;
  std::vector<NoisyMaxEntry> entries;
  /// Empty means no leak (degenerate at level 0).
  std::vector<double> leak;

  bool operator==(const NoisyMaxSpec&) const = default;
};

/// Plain gate: 1 - prod_{i in present}(1 - p_i). Requires a zero leak.
double expand_noisy_or(const NoisyOrSpec& spec, std::span<const std::string> present);

/// Leaky gate. Under the marginal convention
/// 1 - (1 - p0) * prod_{i in present} (1 - p_i) / (1 - p0), so a single
/// present cause reproduces its assessed p_i; under the net convention
/// 1 - (1 - p0) * prod (1 - p_i).
double expand_leaky_noisy_or(const NoisyOrSpec& spec, std::span<const std::string> present);

/// Distribution of the child for one parent assignment (level per parent in
/// `parents` order), via P(child <= k) = prod_j P_j(child <= k).
std::vector<double> expand_noisy_max(const NoisyMaxSpec& spec,
                                     std::span<const std::string> parents,
                                     std::span<const std::size_t> parent_cards,
                                     std::span<const std::size_t> assignment);

/// Throws ParameterError when a spec is malformed for these parents.
void check_spec(const NoisyOrSpec& spec, std::span<const std::string> parents,
                std::span<const std::size_t> parent_cards);
void check_spec(const NoisyMaxSpec& spec, std::span<const std::string> parents,
                std::span<const std::size_t> parent_cards);

/// Binary rows are (1 - p, p) over (absent, present).
Cpt compile_to_cpt(const NoisyOrSpec& spec, std::span<const std::string> parents,
                   std::span<const std::size_t> parent_cards);
Cpt compile_to_cpt(const NoisyMaxSpec& spec, std::span<const std::string> parents,
                   std::span<const std::size_t> parent_cards);

/// Equivalent noisy-MAX form of a binary noisy-OR. The marginal convention
/// is rewritten into net sufficiencies first.
NoisyMaxSpec to_noisy_max(const NoisyOrSpec& spec);

struct ParameterCounts {
  std::size_t full = 0;       // prod(parent cards) * (child card - 1)
  std::size_t canonical = 0;  // sum(card_j - 1) * (child card - 1) [+ leak]

  bool operator==(const ParameterCounts&) const = default;
};

ParameterCounts parameter_counts(std::span<const std::size_t> parent_cards,
                                 std::size_t child_card, bool has_leak = false);

/// Comparison of computed counts against independently reported ones.
struct CountDiscrepancy {
  ParameterCounts computed;
  ParameterCounts reported;
  bool full_mismatch = false;
  bool canonical_mismatch = false;

  bool flagged() const { return full_mismatch || canonical_mismatch; }
};

CountDiscrepancy compare_counts(const ParameterCounts& computed, const ParameterCounts& reported);

struct CptDiff {
  double max_abs_diff = 0.0;
  /// Population standard deviation of the signed element-wise differences.
  double stdev_of_diffs = 0.0;
};

/// Element-wise statistics over every probability entry. Throws
/// ParameterError on a shape mismatch.
CptDiff diff_cpts(const Cpt& a, const Cpt& b);

}  // namespace beliefnet
