#include "beliefnet/report.hpp"

namespace beliefnet::report {

json diagnostic(const ParseDiagnostic& d) {
  json j{{"severity", to_string(d.severity)},
         {"message", d.message},
         {"span",
          {{"file", d.span.file}, {"line", d.span.line}, {"column", d.span.column}, {"length", d.span.length}}}};
  j["hint"] = d.hint ? json(*d.hint) : json(nullptr);
  return j;
}

json diagnostics(const std::vector<ParseDiagnostic>& ds) {
  json arr = json::array();
  for (const auto& d : ds) arr.push_back(diagnostic(d));
  return arr;
}

json catalog(const Network& net) {
  json nodes = json::array();
  for (const auto& n : net.nodes()) {
    nodes.push_back({{"name", n.name()},
                     {"kind", to_string(n.kind)},
                     {"levels", n.variable.levels},
                     {"parents", n.parents},
                     {"tags", n.tags}});
  }
  json j{{"nodes", nodes},
         {"diagnosis", diagnosis_variables(net)},
         {"indicants", indicant_variables(net)}};
  auto decisions = net.decision_nodes();
  j["decision"] = decisions.size() == 1 ? json(net.node(decisions.front()).name()) : json(nullptr);
  auto u = net.utility_node();
  j["utility"] = u ? json(net.node(*u).name()) : json(nullptr);
  return j;
}

json evidence(const Network& net, const Evidence& e) {
  json j = json::object();
  for (const auto& [name, level] : e.assignments()) j[name] = net.node(name).variable.levels.at(level);
  return j;
}

json posterior(const PosteriorResult& r) {
  json j{{"evidence_probability", r.evidence_probability}, {"conflict", r.impossible()}};
  if (r.impossible()) {
    j["variables"] = json::array();
    j["levels"] = json::array();
    j["probabilities"] = json::array();
    return j;
  }
  j["variables"] = r.distribution.variables;
  j["levels"] = r.distribution.levels;
  j["probabilities"] = r.distribution.probabilities;
  return j;
}

json marginals(const Network& net, const Marginals& m) {
  json j = json::object();
  for (std::size_t i = 0; i < m.variables.size(); ++i) {
    j[m.variables[i]] = {{"levels", net.node(m.variables[i]).variable.levels},
                         {"probabilities", m.probabilities[i]}};
  }
  return j;
}

json decision(const DecisionRecommendation& rec) {
  json alts = json::array();
  for (std::size_t a = 0; a < rec.alternatives.size(); ++a) {
    alts.push_back({{"alternative", rec.alternatives[a]}, {"expected_utility", rec.expected_utilities[a]}});
  }
  return {{"decision", rec.decision}, {"alternatives", alts}, {"recommended", rec.recommended()}, {"tie", rec.tie}};
}

json cpt(const Network& net, const std::string& node, const Cpt& table) {
  const auto& n = net.node(node);
  json rows = json::array();
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    json parents = json::object();
    auto levels = table.parent_levels(r);
    for (std::size_t i = 0; i < n.parents.size(); ++i) {
      parents[n.parents[i]] = net.node(n.parents[i]).variable.levels.at(levels[i]);
    }
    auto row = table.row(r);
    rows.push_back({{"parents", parents}, {"probabilities", std::vector<double>(row.begin(), row.end())}});
  }
  return {{"node", node}, {"parents", n.parents}, {"levels", n.variable.levels}, {"rows", rows}};
}

json link(const LinkSensitivity& s) {
  return {{"target", to_string(s.target)},
          {"pivot", to_string(s.pivot)},
          {"range", s.range},
          {"given_pivot", s.given_pivot},
          {"given_not_pivot", s.given_not_pivot},
          {"premise_holds", s.premise_holds},
          {"warnings", s.warnings}};
}

json chain(const ChainSensitivity& s) {
  json links = json::array();
  for (const auto& l : s.links) links.push_back(link(l));
  return {{"links", links}, {"product", s.product}, {"warnings", s.warnings}};
}

json sweep(const SweepResult& s) {
  json points = json::array();
  for (const auto& p : s.points) {
    json pt{{"value", p.value}, {"impossible", p.impossible}};
    pt["posterior"] = p.impossible ? json(nullptr) : json(p.posterior);
    pt["expected_utilities"] = p.expected_utilities;
    pt["recommended"] = p.recommended ? json(s.alternatives[*p.recommended]) : json(nullptr);
    points.push_back(std::move(pt));
  }
  json crossings = json::array();
  for (const auto& c : s.crossings) {
    crossings.push_back({{"lower", c.lower}, {"upper", c.upper}, {"estimate", c.estimate},
                         {"from", c.from}, {"to", c.to}});
  }
  return {{"target", to_string(s.target)},
          {"cell", {{"node", s.cell.node}, {"row", s.cell.row}, {"column", s.cell.column}}},
          {"alternatives", s.alternatives},
          {"points", points},
          {"crossings", crossings}};
}

json ranking(const std::vector<IndicantRank>& ranks) {
  json arr = json::array();
  for (const auto& r : ranks) {
    arr.push_back({{"variable", r.variable}, {"level", r.level}, {"range", r.range},
                   {"premise_holds", r.premise_holds}});
  }
  return arr;
}

std::vector<std::string> diagnosis_variables(const Network& net) {
  std::vector<std::string> out;
  for (auto i : net.tagged("diagnosis")) out.push_back(net.node(i).name());
  return out;
}

std::vector<std::string> indicant_variables(const Network& net) {
  std::vector<std::string> out;
  for (auto i : net.tagged("indicant")) out.push_back(net.node(i).name());
  if (!out.empty()) return out;
  for (const auto& n : net.nodes()) {
    if (n.kind == NodeKind::chance && !n.has_tag("diagnosis")) out.push_back(n.name());
  }
  return out;
}

json consultation(const Network& net, const Evidence& e) {
  auto m = beliefnet::marginals(net, e, diagnosis_variables(net));
  json j{{"evidence", evidence(net, e)},
         {"evidence_probability", m.evidence_probability},
         {"conflict", m.impossible()}};
  if (m.impossible()) {
    j["posteriors"] = json::object();
    j["decision"] = nullptr;
    return j;
  }
  j["posteriors"] = marginals(net, m);
  if (net.utility_node() && net.decision_nodes().size() == 1) {
    j["decision"] = decision(recommend(net, e));
  } else {
    j["decision"] = nullptr;
  }
  return j;
}

}  // namespace beliefnet::report
