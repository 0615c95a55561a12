#pragma once

// Sensitivity of posteriors and decisions to errors in assessed
// probabilities: link sensitivity ranges, chain attenuation, the
// odds-likelihood form of Bayes' rule, and one-parameter sweeps.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "beliefnet/decision.hpp"
#include "beliefnet/inference.hpp"
#include "beliefnet/model.hpp"

namespace beliefnet {

/// A variable at one level, written "Variable=level".
struct Event {
  std::string variable;
  std::string level;

  bool operator==(const Event&) const = default;
};

/// Parses "Variable=level"; throws QueryError on malformed text.
Event parse_event(std::string_view text);
std::string to_string(const Event& e);

struct LinkSensitivity {
  Event target;
  Event pivot;
  /// P(target | pivot) - P(target | not pivot).
  double range = 0.0;
  double given_pivot = 0.0;
  double given_not_pivot = 0.0;
  /// False when the target is not d-separated from the pivot's parents given
  /// the pivot and the evidence, so the linear-mixture premise may fail.
  bool premise_holds = true;
  std::vector<std::string> warnings;
};

/// Sensitivity range of `target` with respect to the binary event `pivot`
/// under background evidence. Throws QueryError when the pivot has zero
/// probability in either polarity, EvidenceConflict for impossible evidence.
LinkSensitivity sensitivity_range(const Network& net, const Evidence& evidence, const Event& target,
                                  const Event& pivot);

struct ChainSensitivity {
  std::vector<LinkSensitivity> links;
  double product = 1.0;
  std::vector<std::string> warnings;
};

/// Product of link ranges along x1 -> x2 -> ... -> xn. Each consecutive pair
/// must be a directed edge; throws QueryError otherwise.
ChainSensitivity chain_sensitivity(const Network& net, const Evidence& evidence,
                                   const std::vector<Event>& chain);

/// O(a) = p / (1 - p); infinite at p = 1.
double odds(double p);
/// L(b, a) = p(b|a) / p(b|not a).
double likelihood_ratio(double p_b_given_a, double p_b_given_not_a);

/// p(a|b) = L*O / (L*O + 1), with L*O = infinity mapped to 1. Throws
/// std::invalid_argument for negative inputs or an infinite times zero product.
double posterior_from_odds(double prior_odds, double likelihood);

/// d p(a|b) / d L = O / (L*O + 1)^2.
double likelihood_sensitivity(double prior_odds, double likelihood);

struct LogOdds {
  double prior = 0.0;
  double log_likelihood = 0.0;
  double posterior = 0.0;
  /// Set when a zero or infinite input forced an infinite log-odds.
  bool saturated = false;

  double posterior_probability() const;
};

/// (ln O, ln L, ln O + ln L).
LogOdds log_odds_decomposition(double prior_odds, double likelihood);

/// One entry of a conditional table: row per parent assignment (odometer
/// order), column per child level.
struct CellRef {
  std::string node;
  std::size_t row = 0;
  std::size_t column = 0;
};

/// Parses "node/row/col".
CellRef parse_cell(std::string_view text);

/// Copy of the network where the node's compiled table has the cell set to
/// `value` and the rest of its row rescaled proportionally. Throws
/// QueryError when the remaining mass is zero.
Network with_cell(const Network& net, const CellRef& cell, double value);

struct SweepPoint {
  double value = 0.0;
  bool impossible = false;
  double posterior = 0.0;
  std::vector<double> expected_utilities;
  std::optional<std::size_t> recommended;
};

struct ThresholdCrossing {
  double lower = 0.0;
  double upper = 0.0;
  /// Linear interpolation of the expected-utility difference between the grid points.
  double estimate = 0.0;
  std::string from;
  std::string to;
};

struct SweepResult {
  Event target;
  CellRef cell;
  std::vector<std::string> alternatives;
  std::vector<SweepPoint> points;
  std::vector<ThresholdCrossing> crossings;
};

/// Traces P(target | evidence) and, when the network has a single decision
/// and a utility node, per-alternative expected utility across the grid.
SweepResult cpt_parameter_sweep(const Network& net, const Evidence& evidence, const Event& target,
                                const CellRef& cell, std::span<const double> grid);

struct IndicantRank {
  std::string variable;
  /// Level whose pivot gives the largest |range|.
  std::string level;
  double range = 0.0;
  bool premise_holds = true;
};

/// Sensitivity of `target` to each unobserved indicant, ordered by
/// decreasing |range| (ties keep the given order). Indicant levels with zero
/// probability in either polarity are skipped; an indicant with no usable
/// level is left out.
std::vector<IndicantRank> rank_indicants(const Network& net, const Evidence& evidence,
                                         const Event& target,
                                         const std::vector<std::string>& indicants);

/// n evenly spaced points from a to b inclusive.
std::vector<double> linear_grid(double a, double b, std::size_t n);
/// Parses "a:b:n".
std::vector<double> parse_grid(std::string_view text);

}  // namespace beliefnet
