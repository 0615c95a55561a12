#include "beliefnet/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "beliefnet/netlang.hpp"
#include "beliefnet/report.hpp"
#include "beliefnet/scenario.hpp"
#include "beliefnet/service.hpp"

namespace beliefnet::cli {
namespace {

using nlohmann::json;

// Usage problems detected after argument parsing (bad files, unknown names).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input that failed to parse or validate; diagnostics already printed.
struct InputFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_diagnostics(const std::vector<ParseDiagnostic>& ds, std::ostream& err, bool lints = true) {
  for (const auto& d : ds) {
    if (lints || d.severity != Severity::lint) err << format_diagnostic(d) << '\n';
  }
}

Network read_network(const std::string& path, std::ostream& err) {
  auto parsed = parse_network(read_file(path), path);
  print_diagnostics(parsed.diagnostics, err, false);  // lints are for validate
  if (!parsed.ok()) throw InputFailure(path + ": network has errors");
  return std::move(*parsed.network);
}

Evidence read_evidence(const std::string& path, const Network& net, std::ostream& err) {
  if (path.empty()) return {};
  auto parsed = parse_evidence(read_file(path), net, path);
  print_diagnostics(parsed.diagnostics, err);
  if (!parsed.ok()) throw InputFailure(path + ": evidence has errors");
  return std::move(*parsed.evidence);
}

std::size_t width_of(const std::vector<std::string>& names) {
  std::size_t w = 0;
  for (const auto& n : names) w = std::max(w, n.size());
  return w;
}

std::string pad(const std::string& s, std::size_t w) { return s + std::string(w > s.size() ? w - s.size() : 0, ' '); }

struct Options {
  std::string format = "text";
  std::string network;
  std::string evidence;
  std::vector<std::string> targets;
  std::string node;
  std::string target_event;
  std::string pivot;
  std::vector<std::string> chain;
  std::string sweep;
  std::string grid = "0:1:11";
  bool rank = false;
  std::string suite;
  std::string host = "127.0.0.1";
  int port = 8080;

  bool json() const { return format == "json"; }
};

int cmd_validate(const Options& o, std::ostream& out, std::ostream& err) {
  auto parsed = parse_network(read_file(o.network), o.network);
  print_diagnostics(parsed.diagnostics, err);
  std::size_t errors = 0, warnings = 0, lints = 0;
  for (const auto& d : parsed.diagnostics) {
    (d.severity == Severity::error ? errors : d.severity == Severity::warning ? warnings : lints)++;
  }
  if (o.json()) {
    json j{{"ok", parsed.ok()},
           {"nodes", parsed.ok() ? parsed.network->size() : 0},
           {"errors", errors},
           {"warnings", warnings},
           {"lints", lints},
           {"diagnostics", report::diagnostics(parsed.diagnostics)}};
    out << j.dump(2) << '\n';
  } else {
    out << o.network << ": " << (parsed.ok() ? "ok" : "invalid");
    if (parsed.ok()) out << ", " << parsed.network->size() << " nodes";
    out << ", " << errors << " errors, " << warnings << " warnings, " << lints << " lints\n";
  }
  return parsed.ok() ? ok : failure;
}

std::optional<ParameterCounts> counts_for(const Network& net, const Node& n) {
  std::vector<std::size_t> cards;
  for (const auto& p : n.parents) cards.push_back(net.node(p).variable.cardinality());
  if (const auto* s = std::get_if<NoisyOrSpec>(&n.cpd)) {
    return parameter_counts(cards, n.variable.cardinality(), s->leak > 0.0);
  }
  if (const auto* s = std::get_if<NoisyMaxSpec>(&n.cpd)) {
    return parameter_counts(cards, n.variable.cardinality(), !s->leak.empty());
  }
  return std::nullopt;
}

int cmd_expand(const Options& o, std::ostream& out, std::ostream& err) {
  auto net = read_network(o.network, err);
  auto idx = net.find(o.node);
  if (!idx) throw UsageError("unknown node '" + o.node + "'");
  const Node& n = net.node(*idx);
  if (n.kind == NodeKind::decision || n.kind == NodeKind::utility) {
    throw UsageError("node '" + o.node + "' is a " + std::string(to_string(n.kind)) + " node and has no table");
  }
  Cpt table = compiled_cpt(net, *idx);
  auto counts = counts_for(net, n);
  std::vector<std::size_t> cards;
  for (const auto& p : n.parents) cards.push_back(net.node(p).variable.cardinality());
  auto full = parameter_counts(cards, n.variable.cardinality());

  if (o.json()) {
    json j = report::cpt(net, n.name(), table);
    j["parameters"] = {{"full", full.full},
                       {"canonical", counts ? json(counts->canonical) : json(nullptr)}};
    out << j.dump(2) << '\n';
    return ok;
  }

  std::vector<std::size_t> widths;
  for (const auto& p : n.parents) {
    widths.push_back(std::max(p.size(), width_of(net.node(p).variable.levels)));
  }
  std::vector<std::size_t> level_widths;
  for (const auto& l : n.variable.levels) level_widths.push_back(std::max<std::size_t>(l.size(), 6));

  for (std::size_t i = 0; i < n.parents.size(); ++i) out << pad(n.parents[i], widths[i]) << "  ";
  if (!n.parents.empty()) out << "| ";
  for (std::size_t k = 0; k < n.variable.levels.size(); ++k) {
    const auto& l = n.variable.levels[k];
    out << (k + 1 < n.variable.levels.size() ? pad(l, level_widths[k]) + "  " : l);
  }
  out << '\n';
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    auto levels = table.parent_levels(r);
    for (std::size_t i = 0; i < n.parents.size(); ++i) {
      out << pad(net.node(n.parents[i]).variable.levels[levels[i]], widths[i]) << "  ";
    }
    if (!n.parents.empty()) out << "| ";
    auto row = table.row(r);
    for (std::size_t k = 0; k < row.size(); ++k) {
      out << (k + 1 < row.size() ? pad(fixed4(row[k]), level_widths[k]) + "  " : fixed4(row[k]));
    }
    out << '\n';
  }
  out << "parameters: full " << full.full;
  if (counts) out << ", canonical " << counts->canonical;
  out << '\n';
  return ok;
}

int cmd_infer(const Options& o, std::ostream& out, std::ostream& err) {
  auto net = read_network(o.network, err);
  auto ev = read_evidence(o.evidence, net, err);
  for (const auto& t : o.targets) {
    if (!net.find(t)) throw UsageError("unknown target '" + t + "'");
  }
  Query q{o.targets, ev};
  auto r = posterior(net, q);
  if (o.json()) {
    json j = report::posterior(r);
    j["evidence"] = report::evidence(net, ev);
    out << j.dump(2) << '\n';
  } else if (r.impossible()) {
    out << "evidence is impossible: P(evidence) = " << fixed4(r.evidence_probability) << '\n';
  } else {
    const auto& d = r.distribution;
    std::string head = "P(";
    for (std::size_t i = 0; i < d.variables.size(); ++i) head += (i ? ", " : "") + d.variables[i];
    if (!ev.empty()) head += " | evidence";
    out << head << ")\n";
    std::vector<std::size_t> digits(d.variables.size(), 0);
    std::vector<std::size_t> cards;
    for (const auto& ls : d.levels) cards.push_back(ls.size());
    std::vector<std::string> labels;
    do {
      std::string label;
      for (std::size_t i = 0; i < digits.size(); ++i) label += (i ? " " : "") + d.levels[i][digits[i]];
      labels.push_back(label);
    } while (next_assignment(digits, cards));
    const auto w = width_of(labels);
    for (std::size_t s = 0; s < labels.size(); ++s) {
      out << "  " << pad(labels[s], w) << "  " << fixed4(d.probabilities[s]) << '\n';
    }
    out << "P(evidence) = " << fixed4(r.evidence_probability) << '\n';
  }
  return r.impossible() ? failure : ok;
}

int cmd_decide(const Options& o, std::ostream& out, std::ostream& err) {
  auto net = read_network(o.network, err);
  auto ev = read_evidence(o.evidence, net, err);
  if (!net.utility_node() || net.decision_nodes().size() != 1) {
    throw UsageError(o.network + ": network needs exactly one decision node and a utility node");
  }
  const double pe = prob_of_evidence(net, ev);
  if (!(pe > 0.0)) {
    if (o.json()) {
      out << json{{"conflict", true}, {"evidence_probability", pe}}.dump(2) << '\n';
    } else {
      out << "evidence is impossible: P(evidence) = " << fixed4(pe) << '\n';
    }
    return failure;
  }
  auto rec = recommend(net, ev);
  if (o.json()) {
    json j = report::decision(rec);
    j["evidence_probability"] = pe;
    out << j.dump(2) << '\n';
    return ok;
  }
  out << "decision " << rec.decision << '\n';
  const auto w = width_of(rec.alternatives);
  for (std::size_t a = 0; a < rec.alternatives.size(); ++a) {
    out << "  " << pad(rec.alternatives[a], w) << "  EU = " << fixed4(rec.expected_utilities[a])
        << (a == rec.best ? "  *" : "") << '\n';
  }
  out << "recommended: " << rec.recommended() << (rec.tie ? " (tie)" : "") << '\n';
  return ok;
}

void print_link(const LinkSensitivity& s, std::ostream& out) {
  out << "SR(" << to_string(s.target) << ", " << to_string(s.pivot) << ") = " << fixed4(s.range)
      << "  [P(y|x) = " << fixed4(s.given_pivot) << ", P(y|not x) = " << fixed4(s.given_not_pivot) << "]\n";
}

void print_warnings(const std::vector<std::string>& ws, std::ostream& err) {
  for (const auto& w : ws) err << "warning: " << w << '\n';
}

Event checked_event(const Network& net, const std::string& text) {
  Event e = parse_event(text);
  auto idx = net.find(e.variable);
  if (!idx) throw UsageError("unknown variable '" + e.variable + "'");
  if (!net.node(*idx).variable.level_index(e.level)) {
    throw UsageError("'" + e.variable + "' has no level '" + e.level + "'");
  }
  return e;
}

int cmd_sense(const Options& o, std::ostream& out, std::ostream& err) {
  auto net = read_network(o.network, err);
  auto ev = read_evidence(o.evidence, net, err);
  const Event target = checked_event(net, o.target_event);

  if (!o.sweep.empty()) {
    auto grid = parse_grid(o.grid);
    auto cell = parse_cell(o.sweep);
    auto result = cpt_parameter_sweep(net, ev, target, cell, grid);
    if (o.json()) {
      out << report::sweep(result).dump(2) << '\n';
      return ok;
    }
    out << "sweep " << cell.node << "/" << cell.row << "/" << cell.column << " -> P(" << to_string(target)
        << ")\n";
    for (const auto& p : result.points) {
      out << "  " << fixed4(p.value) << "  ";
      if (p.impossible) {
        out << "impossible\n";
        continue;
      }
      out << fixed4(p.posterior);
      for (std::size_t a = 0; a < p.expected_utilities.size(); ++a) {
        out << "  EU(" << result.alternatives[a] << ") = " << fixed4(p.expected_utilities[a]);
      }
      if (p.recommended) out << "  -> " << result.alternatives[*p.recommended];
      out << '\n';
    }
    for (const auto& c : result.crossings) {
      out << "threshold: " << c.from << " -> " << c.to << " near " << fixed4(c.estimate) << " (between "
          << fixed4(c.lower) << " and " << fixed4(c.upper) << ")\n";
    }
    return ok;
  }

  if (o.rank) {
    auto ranks = rank_indicants(net, ev, target, report::indicant_variables(net));
    if (o.json()) {
      out << json{{"target", to_string(target)}, {"indicants", report::ranking(ranks)}}.dump(2) << '\n';
      return ok;
    }
    for (const auto& r : ranks) {
      out << "  " << r.variable << "=" << r.level << "  SR = " << fixed4(r.range)
          << (r.premise_holds ? "" : "  (premise fails)") << '\n';
    }
    return ok;
  }

  if (o.pivot.empty()) throw UsageError("sense needs --pivot, --sweep or --rank");
  const Event pivot = checked_event(net, o.pivot);

  if (!o.chain.empty()) {
    std::vector<Event> path{pivot};
    for (const auto& c : o.chain) path.push_back(checked_event(net, c));
    path.push_back(target);
    auto result = chain_sensitivity(net, ev, path);
    print_warnings(result.warnings, err);
    if (o.json()) {
      out << report::chain(result).dump(2) << '\n';
      return ok;
    }
    for (const auto& l : result.links) print_link(l, out);
    out << "chain product = " << fixed4(result.product) << '\n';
    return ok;
  }

  auto s = sensitivity_range(net, ev, target, pivot);
  print_warnings(s.warnings, err);
  if (o.json()) {
    out << report::link(s).dump(2) << '\n';
  } else {
    print_link(s, out);
  }
  return ok;
}

int cmd_scenario(const Options& o, std::ostream& out, std::ostream& err) {
  auto net = read_network(o.network, err);
  ScenarioSuite suite;
  try {
    suite = load_suite(o.suite, net);
  } catch (const SuiteError& e) {
    err << e.what() << '\n';
    return failure;
  }
  auto outcomes = run_suite(net, suite);
  std::size_t passed = 0;
  for (const auto& r : outcomes) passed += r.passed() ? 1 : 0;

  if (o.json()) {
    json arr = json::array();
    for (const auto& r : outcomes) {
      json ex = json::array();
      for (const auto& e : r.expectations) {
        ex.push_back({{"variable", e.expected.variable},
                      {"level", e.expected.level},
                      {"expected", e.expected.probability},
                      {"tolerance", e.expected.tolerance},
                      {"actual", e.actual},
                      {"passed", e.passed}});
      }
      arr.push_back({{"name", r.name},
                     {"passed", r.passed()},
                     {"evidence_probability", r.evidence_probability},
                     {"expectations", ex},
                     {"recommendation", r.recommendation ? json(*r.recommendation) : json(nullptr)},
                     {"expected_recommendation",
                      r.expected_recommendation ? json(*r.expected_recommendation) : json(nullptr)},
                     {"failures", r.failures}});
    }
    out << json{{"scenarios", arr}, {"passed", passed}, {"total", outcomes.size()}}.dump(2) << '\n';
  } else {
    for (const auto& r : outcomes) {
      out << (r.passed() ? "PASS " : "FAIL ") << r.name << "  P(evidence) = " << fixed4(r.evidence_probability);
      if (r.recommendation) out << "  recommended " << *r.recommendation;
      out << '\n';
      for (const auto& f : r.failures) out << "    " << f << '\n';
    }
    out << passed << "/" << outcomes.size() << " scenarios passed\n";
  }
  return passed == outcomes.size() ? ok : failure;
}

int cmd_serve(const Options& o, std::ostream& out, std::ostream& err) {
  Service service;
  std::string id;
  try {
    id = service.load(read_file(o.network));
  } catch (const ParseFailure& e) {
    print_diagnostics(e.diagnostics(), err);
    return failure;
  }
  out << "network " << id << " loaded; listening on http://" << o.host << ":" << o.port << std::endl;
  if (!service.listen(o.host, o.port)) {
    err << "cannot listen on " << o.host << ":" << o.port << '\n';
    return failure;
  }
  return ok;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Discrete belief networks and influence diagrams", "beliefnet"};
  app.require_subcommand(1);
  app.fallthrough();  // --format may follow the subcommand
  Options o;
  app.add_option("--format", o.format, "Output format")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();

  auto* validate = app.add_subcommand("validate", "Parse and check a network file");
  validate->add_option("network", o.network, "Network file (.bn)")->required();

  auto* expand = app.add_subcommand("expand", "Print the compiled table of one node");
  expand->add_option("network", o.network, "Network file (.bn)")->required();
  expand->add_option("--node", o.node, "Node name")->required();

  auto* infer = app.add_subcommand("infer", "Posterior over target variables");
  infer->add_option("network", o.network, "Network file (.bn)")->required();
  infer->add_option("--evidence", o.evidence, "Evidence file (.ev)");
  infer->add_option("--target", o.targets, "Target variable (repeat for a joint posterior)")->required();

  auto* decide = app.add_subcommand("decide", "Expected utility of each alternative");
  decide->add_option("network", o.network, "Network file (.bn)")->required();
  decide->add_option("--evidence", o.evidence, "Evidence file (.ev)");

  auto* sense = app.add_subcommand("sense", "Sensitivity ranges, chains and parameter sweeps");
  sense->add_option("network", o.network, "Network file (.bn)")->required();
  sense->add_option("--evidence", o.evidence, "Evidence file (.ev)");
  sense->add_option("--target", o.target_event, "Target event Variable=level")->required();
  sense->add_option("--pivot", o.pivot, "Pivot event Variable=level");
  auto* chain = sense->add_option("--chain", o.chain, "Intermediate events between pivot and target")
                    ->delimiter(',');
  auto* sweep = sense->add_option("--sweep", o.sweep, "Table cell node/row/column to sweep");
  sense->add_option("--grid", o.grid, "Sweep grid a:b:n")->capture_default_str();
  auto* rank = sense->add_flag("--rank", o.rank, "Rank indicants by sensitivity range");
  chain->excludes(sweep);
  rank->excludes(chain)->excludes(sweep);

  auto* scenario = app.add_subcommand("scenario", "Run a scenario suite");
  scenario->add_option("network", o.network, "Network file (.bn)")->required();
  scenario->add_option("suite", o.suite, "Scenario suite (.toml)")->required();

  auto* serve = app.add_subcommand("serve", "Serve the HTTP consultation API");
  serve->add_option("network", o.network, "Network file (.bn)")->required();
  serve->add_option("--port", o.port, "TCP port")->capture_default_str();
  serve->add_option("--host", o.host, "Bind address")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return ok;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return ok;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return usage;
  }

  try {
    if (validate->parsed()) return cmd_validate(o, out, err);
    if (expand->parsed()) return cmd_expand(o, out, err);
    if (infer->parsed()) return cmd_infer(o, out, err);
    if (decide->parsed()) return cmd_decide(o, out, err);
    if (sense->parsed()) return cmd_sense(o, out, err);
    if (scenario->parsed()) return cmd_scenario(o, out, err);
    if (serve->parsed()) return cmd_serve(o, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return usage;
  } catch (const InputFailure& e) {
    err << "error: " << e.what() << '\n';
    return failure;
  } catch (const QueryError& e) {
    err << "error: " << e.what() << '\n';
    return usage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return failure;
  }
  return usage;
}

}  // namespace beliefnet::cli
