#pragma once

// Declarative scenario suites: evidence files plus expected posteriors and
// recommendations, checked against a network.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "beliefnet/model.hpp"

namespace beliefnet {

struct Expectation {
  std::string variable;
  std::string level;
  double probability = 0.0;
  double tolerance = 1e-3;
};

struct Scenario {
  std::string name;
  std::string description;
  std::filesystem::path evidence_file;
  Evidence evidence;
  std::optional<std::string> recommendation;
  /// When set, the scenario asserts whether the evidence is impossible.
  std::optional<bool> conflict;
  std::vector<Expectation> expectations;
};

struct ScenarioSuite {
  std::vector<Scenario> scenarios;
};

/// Raised for unreadable suites or references to unknown variables/levels.
class SuiteError : public ModelError {
 public:
  using ModelError::ModelError;
};

/// Reads a TOML suite. Evidence paths are resolved against the suite file's
/// directory and parsed against `net`.
ScenarioSuite load_suite(const std::filesystem::path& path, const Network& net);
ScenarioSuite parse_suite(std::string_view toml_text, const std::filesystem::path& base_dir,
                          const Network& net, const std::string& source_name = "<suite>");

struct ExpectationOutcome {
  Expectation expected;
  double actual = 0.0;
  bool passed = false;
};

struct ScenarioOutcome {
  std::string name;
  double evidence_probability = 0.0;
  std::vector<ExpectationOutcome> expectations;
  std::optional<std::string> expected_recommendation;
  std::optional<std::string> recommendation;
  std::vector<std::string> failures;

  bool passed() const { return failures.empty(); }
};

ScenarioOutcome run_scenario(const Network& net, const Scenario& s);
std::vector<ScenarioOutcome> run_suite(const Network& net, const ScenarioSuite& suite);

}  // namespace beliefnet
