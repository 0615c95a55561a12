#include "beliefnet/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <toml.hpp>

#include "beliefnet/decision.hpp"
#include "beliefnet/inference.hpp"
#include "beliefnet/netlang.hpp"

namespace beliefnet {
namespace {

std::string where(const toml::node& n, const std::string& source) {
  const auto& src = n.source();
  return source + ":" + std::to_string(src.begin.line) + ":" + std::to_string(src.begin.column);
}

template <typename T>
std::optional<T> get(const toml::table& t, std::string_view key, const std::string& source) {
  const toml::node* n = t.get(key);
  if (!n) return std::nullopt;
  if (auto v = n->value<T>()) return *v;
  throw SuiteError(where(*n, source) + ": '" + std::string(key) + "' has the wrong type");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SuiteError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t level_index(const Network& net, const std::string& variable, const std::string& level,
                        const std::string& context) {
  auto found = net.find(variable);
  if (!found) throw SuiteError(context + ": unknown variable '" + variable + "'");
  const Node& node = net.node(*found);
  if (node.kind == NodeKind::utility) throw SuiteError(context + ": '" + variable + "' is the utility node");
  auto idx = node.variable.level_index(level);
  if (!idx) throw SuiteError(context + ": '" + variable + "' has no level '" + level + "'");
  return *idx;
}

}  // namespace

ScenarioSuite parse_suite(std::string_view toml_text, const std::filesystem::path& base_dir,
                          const Network& net, const std::string& source_name) {
  toml::table root;
  try {
    root = toml::parse(toml_text, source_name);
  } catch (const toml::parse_error& e) {
    const auto& b = e.source().begin;
    throw SuiteError(source_name + ":" + std::to_string(b.line) + ":" + std::to_string(b.column) + ": " +
                     std::string(e.description()));
  }

  ScenarioSuite suite;
  const toml::array* list = root["scenario"].as_array();
  if (!list) throw SuiteError(source_name + ": no [[scenario]] entries");
  for (const toml::node& entry : *list) {
    const toml::table* t = entry.as_table();
    if (!t) throw SuiteError(where(entry, source_name) + ": scenario must be a table");
    const std::string here = where(entry, source_name);

    Scenario s;
    auto name = get<std::string>(*t, "name", source_name);
    if (!name) throw SuiteError(here + ": scenario without a name");
    s.name = *name;
    s.description = get<std::string>(*t, "description", source_name).value_or("");
    const std::string context = source_name + " [" + s.name + "]";

    if (auto ev = get<std::string>(*t, "evidence", source_name)) {
      s.evidence_file = base_dir / *ev;
      auto parsed = parse_evidence(read_file(s.evidence_file), net, s.evidence_file.string());
      if (!parsed.ok()) {
        std::string msg = context + ": evidence file has errors";
        for (const auto& d : parsed.diagnostics) msg += "\n  " + format_diagnostic(d);
        throw SuiteError(msg);
      }
      s.evidence = std::move(*parsed.evidence);
    }

    if (auto rec = get<std::string>(*t, "recommendation", source_name)) {
      if (net.decision_nodes().size() != 1 || !net.utility_node()) {
        throw SuiteError(context + ": recommendation given but the network has no single decision");
      }
      const auto& decision = net.node(net.decision_nodes().front());
      level_index(net, decision.name(), *rec, context);
      s.recommendation = *rec;
    }
    s.conflict = get<bool>(*t, "conflict", source_name);

    if (const toml::node* ex = t->get("expect")) {
      const toml::array* arr = ex->as_array();
      if (!arr) throw SuiteError(where(*ex, source_name) + ": 'expect' must be an array of tables");
      for (const toml::node& item : *arr) {
        const toml::table* et = item.as_table();
        if (!et) throw SuiteError(where(item, source_name) + ": expectation must be a table");
        Expectation e;
        auto var = get<std::string>(*et, "variable", source_name);
        auto lvl = get<std::string>(*et, "level", source_name);
        auto p = get<double>(*et, "probability", source_name);
        if (!var || !lvl || !p) {
          throw SuiteError(where(item, source_name) + ": expectation needs variable, level and probability");
        }
        e.variable = *var;
        e.level = *lvl;
        e.probability = *p;
        e.tolerance = get<double>(*et, "tolerance", source_name).value_or(1e-3);
        level_index(net, e.variable, e.level, context);
        s.expectations.push_back(std::move(e));
      }
    }
    suite.scenarios.push_back(std::move(s));
  }
  return suite;
}

ScenarioSuite load_suite(const std::filesystem::path& path, const Network& net) {
  return parse_suite(read_file(path), path.parent_path(), net, path.string());
}

ScenarioOutcome run_scenario(const Network& net, const Scenario& s) {
  ScenarioOutcome out;
  out.name = s.name;
  out.expected_recommendation = s.recommendation;

  std::vector<std::string> vars;
  for (const auto& e : s.expectations) {
    if (std::find(vars.begin(), vars.end(), e.variable) == vars.end()) vars.push_back(e.variable);
  }
  auto m = marginals(net, s.evidence, vars);
  out.evidence_probability = m.evidence_probability;

  if (s.conflict && *s.conflict != m.impossible()) {
    out.failures.push_back(m.impossible() ? "evidence unexpectedly impossible" : "expected impossible evidence");
  }
  if (m.impossible()) {
    if (!s.conflict || !*s.conflict) out.failures.push_back("evidence has probability zero");
    return out;
  }

  for (const auto& e : s.expectations) {
    ExpectationOutcome r;
    r.expected = e;
    r.actual = m.of(e.variable).at(*net.node(e.variable).variable.level_index(e.level));
    r.passed = std::abs(r.actual - e.probability) <= e.tolerance;
    if (!r.passed) {
      std::ostringstream msg;
      msg.precision(6);
      msg << "P(" << e.variable << "=" << e.level << ") = " << r.actual << ", expected " << e.probability
          << " +/- " << e.tolerance;
      out.failures.push_back(msg.str());
    }
    out.expectations.push_back(std::move(r));
  }

  if (s.recommendation) {
    auto rec = recommend(net, s.evidence);
    out.recommendation = rec.recommended();
    if (*out.recommendation != *s.recommendation) {
      out.failures.push_back("recommended " + *out.recommendation + ", expected " + *s.recommendation);
    }
  }
  return out;
}

std::vector<ScenarioOutcome> run_suite(const Network& net, const ScenarioSuite& suite) {
  std::vector<ScenarioOutcome> out;
  out.reserve(suite.scenarios.size());
  for (const auto& s : suite.scenarios) out.push_back(run_scenario(net, s));
  return out;
}

}  // namespace beliefnet
