#pragma once

// Structured (JSON) renderings shared by the command line and the HTTP
// service, so both surfaces emit identical numbers for identical inputs.

#include <nlohmann/json.hpp>

#include "beliefnet/canonical.hpp"
#include "beliefnet/decision.hpp"
#include "beliefnet/inference.hpp"
#include "beliefnet/model.hpp"
#include "beliefnet/netlang.hpp"
#include "beliefnet/sensitivity.hpp"

namespace beliefnet::report {

using nlohmann::json;

json diagnostic(const ParseDiagnostic& d);
json diagnostics(const std::vector<ParseDiagnostic>& ds);

/// Variables, kinds, levels, parents and tags.
json catalog(const Network& net);

json evidence(const Network& net, const Evidence& e);

/// Joint posterior over the query targets.
json posterior(const PosteriorResult& r);

/// {Variable: {levels, probabilities}} for each requested variable.
json marginals(const Network& net, const Marginals& m);

json decision(const DecisionRecommendation& rec);

json cpt(const Network& net, const std::string& node, const Cpt& table);

json link(const LinkSensitivity& s);
json chain(const ChainSensitivity& s);
json sweep(const SweepResult& s);
json ranking(const std::vector<IndicantRank>& ranks);

/// Variables summarized in every consultation response: nodes tagged
/// `diagnosis`.
std::vector<std::string> diagnosis_variables(const Network& net);
/// Observable variables: nodes tagged `indicant`, or when none are tagged,
/// every chance node not tagged `diagnosis`.
std::vector<std::string> indicant_variables(const Network& net);

/// Disorder posteriors, evidence probability and (when the network has a
/// decision and a utility node) per-alternative expected utilities.
json consultation(const Network& net, const Evidence& e);

}  // namespace beliefnet::report
