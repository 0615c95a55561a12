#pragma once

// Exact inference by variable elimination, plus a brute-force joint
// enumeration used as an independent oracle.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "beliefnet/model.hpp"

namespace beliefnet {

class QueryError : public ModelError {
 public:
  using ModelError::ModelError;
};

class StateSpaceError : public ModelError {
 public:
  using ModelError::ModelError;
};

/// Raised by operations that must return a number when the evidence has
/// probability zero.
class EvidenceConflict : public ModelError {
 public:
  EvidenceConflict() : ModelError("evidence has probability zero") {}
};

struct Query {
  std::vector<std::string> targets;
  Evidence evidence;
};

/// Joint distribution over target variables, odometer order (last target
/// fastest).
struct Distribution {
  std::vector<std::string> variables;
  std::vector<std::vector<std::string>> levels;
  std::vector<double> probabilities;

  /// Marginal over one of the variables.
  std::vector<double> marginal(std::string_view variable) const;
  double sum() const;
};

struct PosteriorResult {
  /// Empty when the evidence is impossible.
  Distribution distribution;
  double evidence_probability = 0.0;

  bool impossible() const { return !(evidence_probability > 0.0); }
};

enum class EliminationHeuristic { min_degree, min_fill, declaration, reverse_declaration };

struct InferenceOptions {
  EliminationHeuristic heuristic = EliminationHeuristic::min_degree;
  /// Explicit elimination order; variables it omits are eliminated afterwards
  /// by the heuristic.
  std::vector<std::string> order;
};

/// Throws QueryError for malformed queries (unknown or utility targets,
/// targets that are also observed, unassigned decision ancestors).
PosteriorResult posterior(const Network& net, const Query& q, const InferenceOptions& opts = {});

/// Oracle with the same contract as posterior: sums the product of every
/// table over all joint states of the ancestors of the targets and evidence.
/// Throws StateSpaceError when that space exceeds `max_states`.
PosteriorResult enumerate_joint(const Network& net, const Query& q,
                                std::size_t max_states = 10'000'000);

/// P(evidence); 1 for empty evidence.
double prob_of_evidence(const Network& net, const Evidence& e, const InferenceOptions& opts = {});

/// Per-variable posteriors. Observed variables come back one-hot.
struct Marginals {
  std::vector<std::string> variables;
  std::vector<std::vector<double>> probabilities;
  double evidence_probability = 0.0;

  bool impossible() const { return !(evidence_probability > 0.0); }
  const std::vector<double>& of(std::string_view variable) const;
};

Marginals marginals(const Network& net, const Evidence& e, const std::vector<std::string>& variables,
                    const InferenceOptions& opts = {});

/// Ancestors of the given nodes, the nodes themselves included.
std::vector<bool> ancestral_set(const Network& net, const std::vector<std::size_t>& nodes);

/// True when every x is d-separated from every y given `given`.
bool d_separated(const Network& net, const std::vector<std::size_t>& xs,
                 const std::vector<std::size_t>& ys, const std::vector<std::size_t>& given);

}  // namespace beliefnet
