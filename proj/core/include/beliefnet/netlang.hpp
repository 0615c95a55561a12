#pragma once

// Text formats: network descriptions (.bn) and evidence files (.ev).
//
//   # comment
//   variable LateSeasonGrowth { levels no yes }
//   node LateSeasonGrowth {
//     kind chance
//     parents LateFertilization LatePruning WarmFall
//     tag diagnosis
//     cpd noisy_or {
//       leak 0.1
//       LatePruning 0.8
//       ...
//     }
//   }
//
// Statements end at a newline, ';' or '}'. Table rows enumerate parent
// assignments in odometer order (last parent fastest).

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "beliefnet/model.hpp"

namespace beliefnet {

/// 1-based line and column; `length` in bytes.
struct SourceSpan {
  std::string file;
  std::size_t line = 1;
  std::size_t column = 1;
  std::size_t length = 0;

  bool operator==(const SourceSpan&) const = default;
};

enum class Severity { error, warning, lint };

std::string_view to_string(Severity s);

struct ParseDiagnostic {
  Severity severity = Severity::error;
  std::string message;
  SourceSpan span;
  std::optional<std::string> hint;

  bool operator==(const ParseDiagnostic&) const = default;
};

/// "file:line:col: severity: message [hint]".
std::string format_diagnostic(const ParseDiagnostic& d);

struct NetworkParseResult {
  /// Present iff there are no error diagnostics.
  std::optional<Network> network;
  std::vector<ParseDiagnostic> diagnostics;

  bool ok() const { return network.has_value(); }
  std::size_t error_count() const;
};

NetworkParseResult parse_network(std::string_view text, const std::string& file = "<input>");

struct EvidenceParseResult {
  std::optional<Evidence> evidence;
  std::vector<ParseDiagnostic> diagnostics;

  bool ok() const { return evidence.has_value(); }
};

/// One `Variable = level` per line, checked against the network.
EvidenceParseResult parse_evidence(std::string_view text, const Network& net,
                                   const std::string& file = "<input>");

/// Canonical text for a network. Canonical specs stay unexpanded and
/// numbers are written in shortest round-trip form.
std::string serialize_network(const Network& net);

std::string serialize_evidence(const Network& net, const Evidence& e);

/// Shortest decimal text that parses back to the same double.
std::string format_number(double v);

class ParseFailure : public ModelError {
 public:
  explicit ParseFailure(std::vector<ParseDiagnostic> diagnostics);
  const std::vector<ParseDiagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<ParseDiagnostic> diagnostics_;
};

/// Convenience wrappers that throw ParseFailure on error diagnostics.
Network load_network(std::string_view text, const std::string& file = "<input>");
Evidence load_evidence(std::string_view text, const Network& net, const std::string& file = "<input>");

}  // namespace beliefnet
