#include "beliefnet/sensitivity.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace beliefnet {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t level_of(const Network& net, const Event& e) {
  const auto& node = net.node(e.variable);
  auto level = node.variable.level_index(e.level);
  if (!level) throw QueryError("variable '" + e.variable + "' has no level '" + e.level + "'");
  return *level;
}

template <typename T>
T parse_number(std::string_view text, const char* what) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw QueryError(std::string("malformed ") + what + " '" + std::string(text) + "'");
  }
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Fields are trimmed of surrounding whitespace.
std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == sep) {
      out.push_back(trim(text.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace

Event parse_event(std::string_view text) {
  auto parts = split(text, '=');
  if (parts.size() != 2 || parts[0].empty() || parts[1].empty()) {
    throw QueryError("expected Variable=level, got '" + std::string(text) + "'");
  }
  return {std::string(parts[0]), std::string(parts[1])};
}

std::string to_string(const Event& e) { return e.variable + "=" + e.level; }

LinkSensitivity sensitivity_range(const Network& net, const Evidence& evidence, const Event& target,
                                  const Event& pivot) {
  const auto y_level = level_of(net, target);
  const auto x_level = level_of(net, pivot);
  if (target.variable == pivot.variable) {
    throw QueryError("target and pivot must be different variables");
  }

  auto joint = posterior(net, Query{{target.variable, pivot.variable}, evidence});
  if (joint.impossible()) throw EvidenceConflict();

  const auto& dist = joint.distribution;
  const std::size_t x_card = dist.levels[1].size();
  const std::size_t y_card = dist.levels[0].size();
  double p_x = 0.0, p_yx = 0.0, p_y = 0.0;
  for (std::size_t y = 0; y < y_card; ++y) {
    for (std::size_t x = 0; x < x_card; ++x) {
      const double p = dist.probabilities[y * x_card + x];
      if (x == x_level) p_x += p;
      if (y == y_level) {
        p_y += p;
        if (x == x_level) p_yx += p;
      }
    }
  }
  const double p_not_x = 1.0 - p_x;
  if (!(p_x > 0.0) || !(p_not_x > 0.0)) {
    throw QueryError("pivot " + to_string(pivot) + " has zero probability in one polarity");
  }

  LinkSensitivity out;
  out.target = target;
  out.pivot = pivot;
  out.given_pivot = p_yx / p_x;
  out.given_not_pivot = (p_y - p_yx) / p_not_x;
  out.range = out.given_pivot - out.given_not_pivot;

  const auto x = net.index_of(pivot.variable);
  auto sources = net.parent_indices(x);
  if (!sources.empty()) {
    std::vector<std::size_t> given{x};
    for (const auto& [name, level] : evidence.assignments()) given.push_back(net.index_of(name));
    if (!d_separated(net, {net.index_of(target.variable)}, sources, given)) {
      out.premise_holds = false;
      out.warnings.push_back(target.variable + " is not d-separated from the parents of " +
                             pivot.variable + " given " + pivot.variable +
                             " and the evidence; the range may not bound the effect of an error in P(" +
                             to_string(pivot) + ")");
    }
  }
  return out;
}

ChainSensitivity chain_sensitivity(const Network& net, const Evidence& evidence,
                                   const std::vector<Event>& chain) {
  if (chain.size() < 2) throw QueryError("a chain needs at least two events");
  ChainSensitivity out;
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
    const auto& from = chain[i];
    const auto& to = chain[i + 1];
    const auto& parents = net.node(to.variable).parents;
    if (std::find(parents.begin(), parents.end(), from.variable) == parents.end()) {
      throw QueryError("chain is not a directed path: " + from.variable + " is not a parent of " +
                       to.variable);
    }
    auto link = sensitivity_range(net, evidence, to, from);
    for (const auto& w : link.warnings) out.warnings.push_back(w);
    out.product *= link.range;
    out.links.push_back(std::move(link));
  }
  return out;
}

double odds(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("odds: probability outside [0, 1]");
  return p == 1.0 ? kInf : p / (1.0 - p);
}

double likelihood_ratio(double p_b_given_a, double p_b_given_not_a) {
  if (p_b_given_not_a == 0.0) return p_b_given_a == 0.0 ? std::nan("") : kInf;
  return p_b_given_a / p_b_given_not_a;
}

double posterior_from_odds(double prior_odds, double likelihood) {
  if (!(prior_odds >= 0.0) || !(likelihood >= 0.0)) {
    throw std::invalid_argument("posterior_from_odds: odds and likelihood must be non-negative");
  }
  if ((std::isinf(prior_odds) && likelihood == 0.0) || (std::isinf(likelihood) && prior_odds == 0.0)) {
    throw std::invalid_argument("posterior_from_odds: infinite times zero is undefined");
  }
  const double lo = likelihood * prior_odds;
  if (std::isinf(lo)) return 1.0;
  return lo / (lo + 1.0);
}

double likelihood_sensitivity(double prior_odds, double likelihood) {
  if (!(prior_odds >= 0.0) || !(likelihood >= 0.0)) {
    throw std::invalid_argument("likelihood_sensitivity: odds and likelihood must be non-negative");
  }
  const double denom = likelihood * prior_odds + 1.0;
  return prior_odds / (denom * denom);
}

double LogOdds::posterior_probability() const {
  if (posterior == kInf) return 1.0;
  if (posterior == -kInf) return 0.0;
  // Logistic in a form that stays accurate for large |posterior|.
  return posterior >= 0.0 ? 1.0 / (1.0 + std::exp(-posterior))
                          : std::exp(posterior) / (1.0 + std::exp(posterior));
}

LogOdds log_odds_decomposition(double prior_odds, double likelihood) {
  if (!(prior_odds >= 0.0) || !(likelihood >= 0.0)) {
    throw std::invalid_argument("log_odds_decomposition: odds and likelihood must be non-negative");
  }
  LogOdds out;
  out.prior = std::log(prior_odds);
  out.log_likelihood = std::log(likelihood);
  out.saturated = std::isinf(out.prior) || std::isinf(out.log_likelihood);
  if (std::isinf(out.prior) && std::isinf(out.log_likelihood) && out.prior != out.log_likelihood) {
    throw std::invalid_argument("log_odds_decomposition: opposite saturations are undefined");
  }
  out.posterior = out.prior + out.log_likelihood;
  return out;
}

CellRef parse_cell(std::string_view text) {
  auto parts = split(text, '/');
  if (parts.size() != 3 || parts[0].empty()) {
    throw QueryError("expected node/row/col, got '" + std::string(text) + "'");
  }
  return {std::string(parts[0]), parse_number<std::size_t>(parts[1], "row"),
          parse_number<std::size_t>(parts[2], "column")};
}

Network with_cell(const Network& net, const CellRef& cell, double value) {
  if (!(value >= 0.0 && value <= 1.0)) throw QueryError("swept value must lie in [0, 1]");
  const auto i = net.index_of(cell.node);
  const auto kind = net.node(i).kind;
  if (kind != NodeKind::chance && kind != NodeKind::deterministic) {
    throw QueryError("'" + cell.node + "' has no probability table");
  }
  Cpt cpt = compiled_cpt(net, i);
  if (cell.row >= cpt.row_count() || cell.column >= cpt.child_card()) {
    throw QueryError("cell " + cell.node + "/" + std::to_string(cell.row) + "/" +
                     std::to_string(cell.column) + " is outside the table");
  }
  auto row = cpt.row(cell.row);
  double rest_sum = 0.0;
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (k != cell.column) rest_sum += row[k];
  }
  if (!(rest_sum > 0.0) && value < 1.0) {
    throw QueryError("row " + std::to_string(cell.row) + " of '" + cell.node +
                     "' has no remaining mass to rescale");
  }
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (k == cell.column) {
      row[k] = value;
    } else {
      row[k] = rest_sum > 0.0 ? row[k] / rest_sum * (1.0 - value) : 0.0;
    }
  }

  std::vector<Node> nodes = net.nodes();
  nodes[i].cpd = std::move(cpt);
  nodes[i].kind = NodeKind::chance;
  return Network(std::move(nodes));
}

SweepResult cpt_parameter_sweep(const Network& net, const Evidence& evidence, const Event& target,
                                const CellRef& cell, std::span<const double> grid) {
  SweepResult out;
  out.target = target;
  out.cell = cell;
  const auto y_level = level_of(net, target);
  const bool with_decision = net.utility_node() && net.decision_nodes().size() == 1;
  if (with_decision) out.alternatives = net.node(single_decision(net)).variable.levels;

  for (double v : grid) {
    const Network swept = with_cell(net, cell, v);
    SweepPoint point;
    point.value = v;
    auto r = posterior(swept, Query{{target.variable}, evidence});
    if (r.impossible()) {
      point.impossible = true;
      out.points.push_back(std::move(point));
      continue;
    }
    point.posterior = r.distribution.probabilities[y_level];
    if (with_decision) {
      auto rec = recommend(swept, evidence);
      point.expected_utilities = rec.expected_utilities;
      point.recommended = rec.best;
    }
    out.points.push_back(std::move(point));
  }

  const SweepPoint* prev = nullptr;
  for (const auto& p : out.points) {
    if (!p.recommended) continue;
    if (prev && *prev->recommended != *p.recommended) {
      const auto from = *prev->recommended;
      const auto to = *p.recommended;
      const double d0 = prev->expected_utilities[to] - prev->expected_utilities[from];
      const double d1 = p.expected_utilities[to] - p.expected_utilities[from];
      const double t = d1 != d0 ? -d0 / (d1 - d0) : 0.5;
      out.crossings.push_back({prev->value, p.value, prev->value + t * (p.value - prev->value),
                               out.alternatives[from], out.alternatives[to]});
    }
    prev = &p;
  }
  return out;
}

std::vector<IndicantRank> rank_indicants(const Network& net, const Evidence& evidence,
                                         const Event& target,
                                         const std::vector<std::string>& indicants) {
  std::vector<IndicantRank> out;
  for (const auto& name : indicants) {
    if (name == target.variable || evidence.contains(name)) continue;
    std::optional<IndicantRank> best;
    for (const auto& level : net.node(name).variable.levels) {
      LinkSensitivity s;
      try {
        s = sensitivity_range(net, evidence, target, {name, level});
      } catch (const EvidenceConflict&) {
        throw;
      } catch (const QueryError&) {
        continue;
      }
      if (!best || std::abs(s.range) > std::abs(best->range)) {
        best = IndicantRank{name, level, s.range, s.premise_holds};
      }
    }
    if (best) out.push_back(*best);
  }
  std::stable_sort(out.begin(), out.end(), [](const IndicantRank& a, const IndicantRank& b) {
    return std::abs(a.range) > std::abs(b.range);
  });
  return out;
}

std::vector<double> linear_grid(double a, double b, std::size_t n) {
  if (n == 0) throw QueryError("grid needs at least one point");
  if (n == 1) return {a};
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  out.back() = b;
  return out;
}

std::vector<double> parse_grid(std::string_view text) {
  auto parts = split(text, ':');
  if (parts.size() != 3) throw QueryError("expected a:b:n, got '" + std::string(text) + "'");
  return linear_grid(parse_number<double>(parts[0], "grid start"),
                     parse_number<double>(parts[1], "grid end"),
                     parse_number<std::size_t>(parts[2], "grid size"));
}

}  // namespace beliefnet
