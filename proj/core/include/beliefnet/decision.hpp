#pragma once

#include <string>
#include <vector>

#include "beliefnet/inference.hpp"
#include "beliefnet/model.hpp"

namespace beliefnet {

/// Absolute tolerance under which two expected utilities count as tied.
inline constexpr double kTieTolerance = 1e-9;

/// Sum over utility-parent assignments of P(assignment | evidence, decision)
/// times the utility. `alternative` fixes every decision node and overrides
/// any evidence on them. Throws ModelError without a utility node,
/// QueryError when a decision is left open, EvidenceConflict when the
/// evidence is impossible.
double expected_utility(const Network& net, const Evidence& evidence, const Evidence& alternative,
                        const InferenceOptions& opts = {});

struct DecisionRecommendation {
  std::string decision;
  std::vector<std::string> alternatives;
  std::vector<double> expected_utilities;
  std::size_t best = 0;
  bool tie = false;

  const std::string& recommended() const { return alternatives[best]; }
};

/// Evaluates every alternative of the network's single decision node. Ties
/// within kTieTolerance go to the first-declared alternative with `tie` set.
DecisionRecommendation recommend(const Network& net, const Evidence& evidence,
                                 const InferenceOptions& opts = {});

/// The decision node of a single-decision network; throws otherwise.
std::size_t single_decision(const Network& net);

}  // namespace beliefnet
