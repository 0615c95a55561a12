#include "beliefnet/netlang.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace beliefnet {
namespace {

constexpr double kRowTolerance = 1e-9;

// ---------------------------------------------------------------- lexer

enum class Tok { ident, number, lbrace, rbrace, semi, colon, equals, newline, end, bad };

struct Token {
  Tok kind = Tok::end;
  std::string_view text;
  std::size_t line = 1;
  std::size_t column = 1;
  double number = 0.0;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}
bool digit(char c) { return c >= '0' && c <= '9'; }

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      Token t = next();
      out.push_back(t);
      if (t.kind == Tok::end) break;
    }
    return out;
  }

 private:
  Token make(Tok kind, std::size_t start, std::size_t line, std::size_t col) {
    Token t;
    t.kind = kind;
    t.text = text_.substr(start, pos_ - start);
    t.line = line;
    t.column = col;
    return t;
  }

  void bump() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  Token next() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ' ' || c == '\t' || c == '\r') {
        bump();
      } else if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') bump();
      } else {
        break;
      }
    }
    const std::size_t start = pos_, line = line_, col = col_;
    if (pos_ >= text_.size()) return make(Tok::end, start, line, col);
    const char c = text_[pos_];
    auto single = [&](Tok kind) {
      bump();
      return make(kind, start, line, col);
    };
    switch (c) {
      case '\n': return single(Tok::newline);
      case '{': return single(Tok::lbrace);
      case '}': return single(Tok::rbrace);
      case ';': return single(Tok::semi);
      case ':': return single(Tok::colon);
      case '=': return single(Tok::equals);
      default: break;
    }
    if (ident_start(c)) {
      while (pos_ < text_.size() && ident_char(text_[pos_])) bump();
      return make(Tok::ident, start, line, col);
    }
    const bool signed_start = (c == '-' || c == '+') && pos_ + 1 < text_.size() &&
                              (digit(text_[pos_ + 1]) || text_[pos_ + 1] == '.');
    if (digit(c) || c == '.' || signed_start) {
      if (signed_start) bump();
      while (pos_ < text_.size() && digit(text_[pos_])) bump();
      if (pos_ < text_.size() && text_[pos_] == '.') {
        bump();
        while (pos_ < text_.size() && digit(text_[pos_])) bump();
      }
      if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
        bump();
        if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) bump();
        while (pos_ < text_.size() && digit(text_[pos_])) bump();
      }
      // A number must not run into an identifier character.
      while (pos_ < text_.size() && (ident_char(text_[pos_]) || text_[pos_] == '.')) bump();
      Token t = make(Tok::number, start, line, col);
      std::string_view digits = t.text;
      if (!digits.empty() && digits.front() == '+') digits.remove_prefix(1);
      auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), t.number);
      if (ec != std::errc{} || ptr != digits.data() + digits.size() || !std::isfinite(t.number)) {
        t.kind = Tok::bad;
      }
      return t;
    }
    // Unknown byte; take one full UTF-8 sequence.
    bump();
    while (pos_ < text_.size() && (static_cast<unsigned char>(text_[pos_]) & 0xC0) == 0x80) bump();
    return make(Tok::bad, start, line, col);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

// ---------------------------------------------------------------- raw AST

struct RawRow {
  std::vector<double> values;
  SourceSpan span;
};

struct RawCause {
  std::string parent;
  SourceSpan parent_span;
  std::optional<std::string> level;
  SourceSpan level_span;
  std::vector<double> values;
  SourceSpan span;
};

enum class CpdForm { none, table, noisy_or, noisy_max, max, utility };

struct RawCpd {
  CpdForm form = CpdForm::none;
  SourceSpan span;
  std::vector<RawRow> rows;
  std::optional<std::vector<double>> leak;
  SourceSpan leak_span;
  std::optional<LeakConvention> convention;
  SourceSpan convention_span;
  std::vector<RawCause> causes;
};

struct RawVariable {
  std::string name;
  SourceSpan span;
  std::vector<std::string> levels;
  std::vector<SourceSpan> level_spans;
};

struct RawNode {
  std::string name;
  SourceSpan span;
  std::optional<NodeKind> kind;
  std::vector<std::string> parents;
  std::vector<SourceSpan> parent_spans;
  std::vector<std::string> tags;
  RawCpd cpd;
};

// ---------------------------------------------------------------- parser

class Parser {
 public:
  Parser(std::vector<Token> tokens, std::string file, std::vector<ParseDiagnostic>& diags)
      : toks_(std::move(tokens)), file_(std::move(file)), diags_(diags) {}

  void run(std::vector<RawVariable>& vars, std::vector<RawNode>& nodes) {
    while (true) {
      skip_separators();
      const Token& t = peek();
      if (t.kind == Tok::end) break;
      if (is_ident("variable")) {
        advance();
        if (auto v = parse_variable()) vars.push_back(std::move(*v));
      } else if (is_ident("node")) {
        advance();
        if (auto n = parse_node()) nodes.push_back(std::move(*n));
      } else {
        error(span_of(t), "expected 'variable' or 'node', found " + describe(t));
        skip_statement();
      }
    }
  }

  SourceSpan span_of(const Token& t) const {
    return {file_, t.line, t.column, t.text.size()};
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& advance() {
    const Token& t = toks_[pos_];
    if (t.kind != Tok::end) ++pos_;
    return t;
  }
  bool is_ident(std::string_view word) const {
    return peek().kind == Tok::ident && peek().text == word;
  }
  bool at_terminator() const {
    auto k = peek().kind;
    return k == Tok::newline || k == Tok::semi || k == Tok::rbrace || k == Tok::end;
  }
  void skip_separators() {
    while (peek().kind == Tok::newline || peek().kind == Tok::semi) advance();
  }

  static std::string describe(const Token& t) {
    switch (t.kind) {
      case Tok::end: return "end of input";
      case Tok::newline: return "end of line";
      case Tok::bad: return "invalid token '" + std::string(t.text) + "'";
      default: return "'" + std::string(t.text) + "'";
    }
  }

  SourceSpan join(const SourceSpan& a, const Token& last) const {
    SourceSpan s = a;
    if (last.line == a.line && last.column + last.text.size() >= a.column) {
      s.length = last.column + last.text.size() - a.column;
    }
    return s;
  }

  void error(SourceSpan span, std::string msg, std::optional<std::string> hint = std::nullopt) {
    diags_.push_back({Severity::error, std::move(msg), std::move(span), std::move(hint)});
  }

  // Skips to the end of the current statement, stepping over nested blocks.
  // Leaves a closing brace of the enclosing block in place.
  void skip_statement() {
    int depth = 0;
    while (peek().kind != Tok::end) {
      auto k = peek().kind;
      if (depth == 0 && (k == Tok::newline || k == Tok::semi)) {
        advance();
        return;
      }
      if (k == Tok::rbrace) {
        if (depth == 0) return;
        --depth;
      } else if (k == Tok::lbrace) {
        ++depth;
      }
      advance();
    }
  }

  void skip_block_rest() {
    int depth = 0;
    while (peek().kind != Tok::end) {
      auto k = advance().kind;
      if (k == Tok::lbrace) ++depth;
      if (k == Tok::rbrace) {
        if (depth == 0) return;
        --depth;
      }
    }
  }

  bool expect(Tok kind, const char* what) {
    if (peek().kind == kind) {
      advance();
      return true;
    }
    error(span_of(peek()), std::string("expected ") + what + ", found " + describe(peek()));
    return false;
  }

  // Requires the statement to end here.
  void end_statement() {
    if (at_terminator()) {
      if (peek().kind != Tok::rbrace && peek().kind != Tok::end) advance();
      return;
    }
    error(span_of(peek()), "unexpected " + describe(peek()) + " at end of statement");
    skip_statement();
  }

  std::optional<std::string> ident(const char* what, SourceSpan* span = nullptr) {
    if (peek().kind != Tok::ident) {
      error(span_of(peek()), std::string("expected ") + what + ", found " + describe(peek()));
      return std::nullopt;
    }
    const Token& t = advance();
    if (span) *span = span_of(t);
    return std::string(t.text);
  }

  // Reads numbers until a non-number; reports invalid number tokens.
  std::vector<double> numbers(const Token** last) {
    std::vector<double> out;
    while (peek().kind == Tok::number || peek().kind == Tok::bad) {
      const Token& t = advance();
      if (t.kind == Tok::bad) {
        error(span_of(t), "invalid number '" + std::string(t.text) + "'");
        continue;
      }
      out.push_back(t.number);
      if (last) *last = &t;
    }
    return out;
  }

  std::optional<RawVariable> parse_variable() {
    RawVariable v;
    auto name = ident("variable name", &v.span);
    if (!name) {
      skip_statement();
      return std::nullopt;
    }
    v.name = *name;
    if (!expect(Tok::lbrace, "'{'")) {
      skip_statement();
      return std::nullopt;
    }
    bool has_levels = false;
    while (true) {
      skip_separators();
      if (peek().kind == Tok::rbrace) {
        advance();
        break;
      }
      if (peek().kind == Tok::end) {
        error(span_of(peek()), "unterminated variable block for '" + v.name + "'");
        return std::nullopt;
      }
      if (is_ident("levels")) {
        const Token& kw = advance();
        if (has_levels) error(span_of(kw), "levels of '" + v.name + "' declared twice");
        has_levels = true;
        while (peek().kind == Tok::ident) {
          const Token& t = advance();
          v.levels.emplace_back(t.text);
          v.level_spans.push_back(span_of(t));
        }
        end_statement();
      } else {
        error(span_of(peek()), "unknown statement " + describe(peek()) + " in variable block");
        skip_statement();
      }
    }
    if (!has_levels) error(v.span, "variable '" + v.name + "' declares no levels");
    return v;
  }

  std::optional<RawNode> parse_node() {
    RawNode n;
    auto name = ident("node name", &n.span);
    if (!name) {
      skip_statement();
      return std::nullopt;
    }
    n.name = *name;
    if (!expect(Tok::lbrace, "'{'")) {
      skip_statement();
      return std::nullopt;
    }
    bool seen_kind = false, seen_parents = false, seen_cpd = false;
    while (true) {
      skip_separators();
      if (peek().kind == Tok::rbrace) {
        advance();
        break;
      }
      if (peek().kind == Tok::end) {
        error(span_of(peek()), "unterminated node block for '" + n.name + "'");
        return std::nullopt;
      }
      const Token& kw = peek();
      const SourceSpan kw_span = span_of(kw);
      if (is_ident("kind")) {
        advance();
        if (seen_kind) error(kw_span, "kind of '" + n.name + "' given twice");
        seen_kind = true;
        SourceSpan s;
        if (auto k = ident("node kind", &s)) {
          if (auto parsed = parse_node_kind(*k)) {
            n.kind = parsed;
          } else {
            error(s, "unknown node kind '" + *k + "'",
                  "use chance, deterministic, decision or utility");
          }
        }
        end_statement();
      } else if (is_ident("parents")) {
        advance();
        if (seen_parents) error(kw_span, "parents of '" + n.name + "' given twice");
        seen_parents = true;
        while (peek().kind == Tok::ident) {
          const Token& t = advance();
          n.parents.emplace_back(t.text);
          n.parent_spans.push_back(span_of(t));
        }
        end_statement();
      } else if (is_ident("tag")) {
        advance();
        if (peek().kind != Tok::ident) error(span_of(peek()), "expected a tag name");
        while (peek().kind == Tok::ident) {
          std::string tag(advance().text);
          if (std::find(n.tags.begin(), n.tags.end(), tag) == n.tags.end()) n.tags.push_back(tag);
        }
        end_statement();
      } else if (is_ident("cpd")) {
        advance();
        if (seen_cpd) error(kw_span, "distribution of '" + n.name + "' given twice");
        seen_cpd = true;
        parse_cpd(n.cpd, kw_span);
        end_statement();
      } else {
        error(kw_span, "unknown statement " + describe(kw) + " in node block",
              "expected kind, parents, tag or cpd");
        skip_statement();
      }
    }
    return n;
  }

  void parse_cpd(RawCpd& cpd, SourceSpan kw_span) {
    SourceSpan form_span;
    auto form = ident("distribution form", &form_span);
    if (!form) {
      skip_statement();
      return;
    }
    cpd.span = kw_span;
    if (*form == "max") {
      cpd.form = CpdForm::max;
      cpd.span = join(kw_span, toks_[pos_ - 1]);
      return;
    }
    if (*form == "table" || *form == "utility") {
      cpd.form = *form == "table" ? CpdForm::table : CpdForm::utility;
      if (!expect(Tok::lbrace, "'{'")) return skip_statement();
      parse_rows(cpd);
      return;
    }
    if (*form == "noisy_or" || *form == "noisy_max") {
      cpd.form = *form == "noisy_or" ? CpdForm::noisy_or : CpdForm::noisy_max;
      if (!expect(Tok::lbrace, "'{'")) return skip_statement();
      parse_noisy(cpd);
      return;
    }
    error(form_span, "unknown distribution form '" + *form + "'",
          "use table, noisy_or, noisy_max, max or utility");
    skip_statement();
  }

  void parse_rows(RawCpd& cpd) {
    while (true) {
      skip_separators();
      if (peek().kind == Tok::rbrace) {
        advance();
        return;
      }
      if (peek().kind == Tok::end) {
        error(span_of(peek()), "unterminated table");
        return;
      }
      if (is_ident("row")) {
        const Token& kw = advance();
        const Token* last = &kw;
        RawRow row;
        row.values = numbers(&last);
        row.span = join(span_of(kw), *last);
        if (row.values.empty()) error(row.span, "row has no values");
        cpd.rows.push_back(std::move(row));
        if (!is_ident("row")) end_statement();
      } else {
        error(span_of(peek()), "expected 'row', found " + describe(peek()));
        skip_statement();
      }
    }
  }

  void parse_noisy(RawCpd& cpd) {
    while (true) {
      skip_separators();
      if (peek().kind == Tok::rbrace) {
        advance();
        return;
      }
      if (peek().kind == Tok::end) {
        error(span_of(peek()), "unterminated noisy block");
        return;
      }
      if (peek().kind != Tok::ident) {
        error(span_of(peek()), "expected leak, strengths or a cause, found " + describe(peek()));
        skip_statement();
        continue;
      }
      const Token& head = advance();
      const SourceSpan head_span = span_of(head);
      if (head.text == "leak") {
        const Token* last = &head;
        auto values = numbers(&last);
        if (cpd.leak) error(head_span, "leak given twice");
        if (values.empty()) error(head_span, "leak needs a probability or distribution");
        cpd.leak = std::move(values);
        cpd.leak_span = join(head_span, *last);
      } else if (head.text == "strengths") {
        SourceSpan s;
        if (auto w = ident("marginal or net", &s)) {
          if (*w == "marginal") {
            cpd.convention = LeakConvention::marginal;
          } else if (*w == "net") {
            cpd.convention = LeakConvention::net;
          } else {
            error(s, "unknown strengths convention '" + *w + "'", "use marginal or net");
          }
          cpd.convention_span = join(head_span, toks_[pos_ - 1]);
        }
      } else {
        RawCause cause;
        cause.parent = std::string(head.text);
        cause.parent_span = head_span;
        if (peek().kind == Tok::colon) {
          advance();
          SourceSpan s;
          if (auto lvl = ident("level name", &s)) {
            cause.level = *lvl;
            cause.level_span = s;
          }
        }
        const Token* last = &toks_[pos_ - 1];
        cause.values = numbers(&last);
        cause.span = join(head_span, *last);
        if (cause.values.empty()) error(cause.span, "cause '" + cause.parent + "' needs a probability");
        cpd.causes.push_back(std::move(cause));
      }
      end_statement();
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::string file_;
  std::vector<ParseDiagnostic>& diags_;
};

// ---------------------------------------------------------------- semantics

struct NodeSpans {
  SourceSpan name;
  SourceSpan cpd;
  std::vector<SourceSpan> rows;
  // Cause and leak lines of canonical forms, with the numbers they carry.
  std::vector<std::pair<std::vector<double>, SourceSpan>> entries;
  std::map<std::string, SourceSpan> parents;
};

class Builder {
 public:
  explicit Builder(std::vector<ParseDiagnostic>& diags) : diags_(diags) {}

  std::optional<Network> build(const std::vector<RawVariable>& vars, const std::vector<RawNode>& raw) {
    std::map<std::string, const RawVariable*> var_by_name;
    for (const auto& v : vars) parent_levels_.emplace(v.name, v.levels);
    for (const auto& v : vars) {
      if (!var_by_name.emplace(v.name, &v).second) {
        error(v.span, "variable '" + v.name + "' declared twice");
        continue;
      }
      std::set<std::string> seen;
      for (std::size_t i = 0; i < v.levels.size(); ++i) {
        if (!seen.insert(v.levels[i]).second) {
          error(v.level_spans[i], "level '" + v.levels[i] + "' repeated in '" + v.name + "'");
        }
      }
      if (!v.levels.empty() && v.levels.size() < 2) {
        error(v.span, "variable '" + v.name + "' needs at least 2 levels");
      }
    }

    std::map<std::string, const RawNode*> node_by_name;
    std::vector<const RawNode*> unique_nodes;
    for (const auto& n : raw) {
      if (!node_by_name.emplace(n.name, &n).second) {
        error(n.span, "node '" + n.name + "' declared twice");
        continue;
      }
      unique_nodes.push_back(&n);
    }
    for (const auto& v : vars) {
      if (!node_by_name.count(v.name)) {
        diags_.push_back({Severity::warning, "variable '" + v.name + "' has no node", v.span,
                          "add a node block or remove the declaration"});
      }
    }

    auto levels_of = [&](const std::string& name) -> const std::vector<std::string>* {
      auto it = var_by_name.find(name);
      return it == var_by_name.end() ? nullptr : &it->second->levels;
    };

    std::vector<Node> nodes;
    for (const auto* rn : unique_nodes) {
      Node node;
      node.variable.name = rn->name;
      node.kind = rn->kind.value_or(NodeKind::chance);
      node.parents = rn->parents;
      node.tags = rn->tags;
      auto& spans = spans_[rn->name];
      spans.name = rn->span;
      spans.cpd = rn->cpd.form == CpdForm::none ? rn->span : rn->cpd.span;
      for (const auto& row : rn->cpd.rows) spans.rows.push_back(row.span);
      if (rn->cpd.leak) spans.entries.emplace_back(*rn->cpd.leak, rn->cpd.leak_span);
      for (const auto& c : rn->cpd.causes) spans.entries.emplace_back(c.values, c.span);
      for (std::size_t i = 0; i < rn->parents.size(); ++i) {
        spans.parents.emplace(rn->parents[i], rn->parent_spans[i]);
      }

      if (const auto* levels = levels_of(rn->name)) {
        if (node.kind == NodeKind::utility) {
          diags_.push_back({Severity::warning,
                            "levels declared for utility node '" + rn->name + "' are ignored",
                            var_by_name[rn->name]->span, std::nullopt});
        } else {
          node.variable.levels = *levels;
        }
      } else if (node.kind != NodeKind::utility) {
        error(rn->span, "node '" + rn->name + "' has no variable declaration",
              "declare: variable " + rn->name + " { levels ... }");
      }

      bool parents_ok = true;
      std::vector<std::size_t> cards;
      for (std::size_t i = 0; i < rn->parents.size(); ++i) {
        const auto& p = rn->parents[i];
        const auto* pl = levels_of(p);
        if (!node_by_name.count(p)) {
          error(rn->parent_spans[i], "unknown parent '" + p + "'",
                "declare a node named '" + p + "' or fix the name");
          parents_ok = false;
        } else if (!pl) {
          parents_ok = false;  // reported on the parent node itself
        } else {
          cards.push_back(pl->size());
        }
      }
      if (parents_ok) build_cpd(*rn, node, cards);
      nodes.push_back(std::move(node));
    }

    if (has_errors()) return std::nullopt;

    Network net;
    for (auto& n : nodes) net.add_node(std::move(n));
    auto report = validate(net);
    for (const auto& v : report.violations) surface(v);
    if (has_errors()) return std::nullopt;
    return net;
  }

 private:
  bool has_errors() const {
    return std::any_of(diags_.begin(), diags_.end(),
                       [](const ParseDiagnostic& d) { return d.severity == Severity::error; });
  }

  void error(SourceSpan span, std::string msg, std::optional<std::string> hint = std::nullopt) {
    diags_.push_back({Severity::error, std::move(msg), std::move(span), std::move(hint)});
  }

  static bool renormalize(std::vector<double>& row) {
    double sum = 0.0;
    for (double p : row) sum += p;
    const double noise = 4.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(row.size());
    const double off = std::abs(sum - 1.0);
    if (off > noise && off <= kRowTolerance) {
      for (double& p : row) p /= sum;
      return true;
    }
    return false;
  }

  // Single number p on a binary child means (1 - p, p).
  std::optional<std::vector<double>> distribution(const std::vector<double>& values, std::size_t card,
                                                  const SourceSpan& span, const std::string& what) {
    if (values.size() == card) return values;
    if (values.size() == 1 && card == 2) return std::vector<double>{1.0 - values[0], values[0]};
    error(span, what + " has " + std::to_string(values.size()) + " values, expected " +
                    (card == 2 ? std::string("1 or 2") : std::to_string(card)));
    return std::nullopt;
  }

  void build_cpd(const RawNode& rn, Node& node, const std::vector<std::size_t>& cards) {
    const auto& cpd = rn.cpd;
    const std::size_t child_card = node.variable.cardinality();
    const std::size_t rows = product_of(cards);
    switch (cpd.form) {
      case CpdForm::none:
        return;
      case CpdForm::max:
        node.cpd = DeterministicMax{};
        return;
      case CpdForm::utility: {
        std::vector<double> values;
        for (const auto& r : cpd.rows) values.insert(values.end(), r.values.begin(), r.values.end());
        if (values.size() != rows) {
          error(cpd.span, "utility table of '" + rn.name + "' has " + std::to_string(values.size()) +
                              " values, expected " + std::to_string(rows));
          return;
        }
        node.cpd = UtilityTable{cards, std::move(values)};
        return;
      }
      case CpdForm::table: {
        if (child_card == 0) return;
        bool ok = true;
        std::vector<double> entries;
        for (const auto& r : cpd.rows) {
          if (r.values.size() != child_card) {
            error(r.span, "row has " + std::to_string(r.values.size()) + " values, expected " +
                              std::to_string(child_card));
            ok = false;
            continue;
          }
          auto values = r.values;
          renormalize(values);
          entries.insert(entries.end(), values.begin(), values.end());
        }
        if (cpd.rows.size() != rows) {
          error(cpd.span, "table of '" + rn.name + "' has " + std::to_string(cpd.rows.size()) +
                              " rows, expected " + std::to_string(rows) +
                              " (one per parent assignment)");
          ok = false;
        }
        if (ok) node.cpd = Cpt(cards, child_card, std::move(entries));
        return;
      }
      case CpdForm::noisy_or:
      case CpdForm::noisy_max:
        build_noisy(rn, node, cards);
        return;
    }
  }

  void build_noisy(const RawNode& rn, Node& node, const std::vector<std::size_t>& cards) {
    const auto& cpd = rn.cpd;
    const std::size_t child_card = node.variable.cardinality();
    if (child_card == 0) return;
    auto parent_card = [&](const std::string& name) -> std::optional<std::size_t> {
      for (std::size_t i = 0; i < rn.parents.size(); ++i) {
        if (rn.parents[i] == name) return cards[i];
      }
      return std::nullopt;
    };

    bool plain = cpd.form == CpdForm::noisy_or && child_card == 2;
    bool ok = true;
    for (const auto& c : cpd.causes) {
      auto card = parent_card(c.parent);
      if (!card) {
        error(c.parent_span, "cause '" + c.parent + "' is not a parent of '" + rn.name + "'");
        ok = false;
        continue;
      }
      if (c.level || *card != 2 || c.values.size() != 1) plain = false;
    }
    if (cpd.leak && cpd.leak->size() != 1) plain = false;
    if (!ok) return;

    if (plain) {
      NoisyOrSpec spec;
      spec.leak = cpd.leak ? cpd.leak->front() : 0.0;
      spec.convention = cpd.convention.value_or(LeakConvention::marginal);
      for (const auto& c : cpd.causes) spec.causes.push_back({c.parent, c.values.front()});
      node.cpd = std::move(spec);
      return;
    }

    if (cpd.convention == LeakConvention::marginal && cpd.leak) {
      error(cpd.convention_span, "marginal strengths need a binary effect with binary causes",
            "use 'strengths net' or remove the leak");
      return;
    }
    NoisyMaxSpec spec;
    spec.child_card = child_card;
    if (cpd.leak) {
      auto leak = distribution(*cpd.leak, child_card, cpd.leak_span, "leak");
      if (!leak) return;
      spec.leak = std::move(*leak);
    }
    for (const auto& c : cpd.causes) {
      const std::size_t card = *parent_card(c.parent);
      std::size_t level = 1;
      if (c.level) {
        auto it = std::find(parent_levels_[c.parent].begin(), parent_levels_[c.parent].end(), *c.level);
        if (it == parent_levels_[c.parent].end()) {
          error(c.level_span, "'" + c.parent + "' has no level '" + *c.level + "'");
          ok = false;
          continue;
        }
        level = static_cast<std::size_t>(it - parent_levels_[c.parent].begin());
        if (level == 0) {
          error(c.level_span, "level '" + *c.level + "' is the absent level of '" + c.parent +
                                  "' and cannot be a cause");
          ok = false;
          continue;
        }
      } else if (card != 2) {
        error(c.parent_span, "cause '" + c.parent + "' has " + std::to_string(card) +
                                 " levels; name the level as " + c.parent + ":<level>");
        ok = false;
        continue;
      }
      auto dist = distribution(c.values, child_card, c.span, "cause '" + c.parent + "'");
      if (!dist) {
        ok = false;
        continue;
      }
      spec.entries.push_back({c.parent, level, std::move(*dist)});
    }
    if (ok) node.cpd = std::move(spec);
  }

  void surface(const Violation& v) {
    SourceSpan span;
    auto it = spans_.find(v.node);
    if (it != spans_.end()) {
      const auto& s = it->second;
      span = s.name;
      switch (v.kind) {
        case ViolationKind::dangling_parent:
        case ViolationKind::duplicate_parent:
        case ViolationKind::utility_structure:
          if (!v.members.empty() && s.parents.count(v.members.front())) {
            span = s.parents.at(v.members.front());
          }
          break;
        case ViolationKind::cycle:
        case ViolationKind::bad_levels:
          break;
        default:
          span = s.cpd;
          if (v.row && *v.row < s.rows.size()) {
            span = s.rows[*v.row];
          } else if (v.value) {
            for (const auto& [values, at] : s.entries) {
              if (std::find(values.begin(), values.end(), *v.value) != values.end()) {
                span = at;
                break;
              }
            }
          }
          break;
      }
    } else if (!spans_.empty()) {
      span = spans_.begin()->second.name;
    }
    std::optional<std::string> hint;
    if (v.kind == ViolationKind::palette && v.value) {
      double best = 0.0, gap = 2.0;
      for (double q : probability_palette()) {
        if (std::abs(q - *v.value) < gap) {
          gap = std::abs(q - *v.value);
          best = q;
        }
      }
      hint = "nearest palette value is " + format_number(best);
    }
    diags_.push_back({v.is_lint() ? Severity::lint : Severity::error, v.message, span, hint});
  }

  std::vector<ParseDiagnostic>& diags_;
  std::map<std::string, std::vector<std::string>> parent_levels_;
  std::map<std::string, NodeSpans> spans_;
};

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::error: return "error";
    case Severity::warning: return "warning";
    case Severity::lint: return "lint";
  }
  return "?";
}

std::string format_diagnostic(const ParseDiagnostic& d) {
  std::string out = d.span.file + ":" + std::to_string(d.span.line) + ":" +
                    std::to_string(d.span.column) + ": " + std::string(to_string(d.severity)) +
                    ": " + d.message;
  if (d.hint) out += " [" + *d.hint + "]";
  return out;
}

std::size_t NetworkParseResult::error_count() const {
  return static_cast<std::size_t>(std::count_if(diagnostics.begin(), diagnostics.end(), [](const auto& d) {
    return d.severity == Severity::error;
  }));
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

NetworkParseResult parse_network(std::string_view text, const std::string& file) {
  NetworkParseResult result;
  std::vector<RawVariable> vars;
  std::vector<RawNode> nodes;
  Parser parser(Lexer(text).run(), file, result.diagnostics);
  parser.run(vars, nodes);

  Builder builder(result.diagnostics);
  result.network = builder.build(vars, nodes);
  if (result.error_count() > 0) result.network.reset();
  return result;
}

EvidenceParseResult parse_evidence(std::string_view text, const Network& net, const std::string& file) {
  EvidenceParseResult result;
  Evidence ev;
  std::size_t line_no = 0;
  std::size_t start = 0;
  auto error = [&](std::size_t col, std::size_t len, std::string msg,
                   std::optional<std::string> hint = std::nullopt) {
    result.diagnostics.push_back({Severity::error, std::move(msg), {file, line_no, col, len}, std::move(hint)});
  };
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);

    // Tokens: identifier '=' identifier.
    std::vector<std::pair<std::size_t, std::string_view>> parts;  // column, text
    std::size_t i = 0;
    bool bad = false;
    while (i < line.size()) {
      char c = line[i];
      if (c == ' ' || c == '\t' || c == '\r') {
        ++i;
      } else if (c == '=') {
        parts.emplace_back(i + 1, line.substr(i, 1));
        ++i;
      } else if (ident_start(c)) {
        std::size_t j = i;
        while (j < line.size() && ident_char(line[j])) ++j;
        parts.emplace_back(i + 1, line.substr(i, j - i));
        i = j;
      } else {
        error(i + 1, 1, std::string("unexpected character '") + c + "'");
        bad = true;
        break;
      }
    }
    if (!bad && !parts.empty()) {
      if (parts.size() != 3 || parts[1].second != "=" || parts[0].second == "=" || parts[2].second == "=") {
        const std::string content = trim(line);
        error(parts.front().first, content.size(), "expected 'Variable = level'");
      } else {
        const auto [vcol, var] = parts[0];
        const auto [lcol, level] = parts[2];
        auto idx = net.find(var);
        if (!idx) {
          error(vcol, var.size(), "unknown variable '" + std::string(var) + "'");
        } else if (net.node(*idx).kind == NodeKind::utility) {
          error(vcol, var.size(), "utility variable '" + std::string(var) + "' cannot be observed");
        } else if (auto l = net.node(*idx).variable.level_index(level); !l) {
          std::string levels;
          for (const auto& name : net.node(*idx).variable.levels) levels += (levels.empty() ? "" : ", ") + name;
          error(lcol, level.size(), "'" + std::string(var) + "' has no level '" + std::string(level) + "'",
                "levels: " + levels);
        } else if (ev.contains(var)) {
          error(vcol, var.size(), "'" + std::string(var) + "' assigned more than once");
        } else {
          ev.set_unchecked(std::string(var), *l);
        }
      }
    }
    if (end == text.size()) break;
    start = end + 1;
  }
  if (std::none_of(result.diagnostics.begin(), result.diagnostics.end(),
                   [](const auto& d) { return d.severity == Severity::error; })) {
    result.evidence = std::move(ev);
  }
  return result;
}

namespace {

void write_numbers(std::ostringstream& os, std::span<const double> values) {
  for (double v : values) os << ' ' << format_number(v);
}

// Binary distributions whose first entry is exactly 1 - p are written as p.
void write_distribution(std::ostringstream& os, const std::vector<double>& dist) {
  if (dist.size() == 2 && dist[0] == 1.0 - dist[1]) {
    os << ' ' << format_number(dist[1]);
  } else {
    write_numbers(os, dist);
  }
}

}  // namespace

std::string serialize_network(const Network& net) {
  std::ostringstream os;
  bool first = true;
  for (const auto& node : net.nodes()) {
    if (!first) os << '\n';
    first = false;
    if (node.kind != NodeKind::utility) {
      os << "variable " << node.name() << " { levels";
      for (const auto& l : node.variable.levels) os << ' ' << l;
      os << " }\n";
    }
    os << "node " << node.name() << " {\n";
    os << "  kind " << to_string(node.kind) << '\n';
    if (!node.parents.empty()) {
      os << "  parents";
      for (const auto& p : node.parents) os << ' ' << p;
      os << '\n';
    }
    if (!node.tags.empty()) {
      os << "  tag";
      for (const auto& t : node.tags) os << ' ' << t;
      os << '\n';
    }
    std::visit(
        [&](const auto& cpd) {
          using T = std::decay_t<decltype(cpd)>;
          if constexpr (std::is_same_v<T, Cpt>) {
            os << "  cpd table {\n";
            for (std::size_t r = 0; r < cpd.row_count(); ++r) {
              os << "    row";
              write_numbers(os, cpd.row(r));
              os << '\n';
            }
            os << "  }\n";
          } else if constexpr (std::is_same_v<T, NoisyOrSpec>) {
            os << "  cpd noisy_or {\n";
            if (cpd.leak != 0.0) os << "    leak " << format_number(cpd.leak) << '\n';
            if (cpd.convention != LeakConvention::marginal) os << "    strengths net\n";
            for (const auto& c : cpd.causes) {
              os << "    " << c.parent << ' ' << format_number(c.probability) << '\n';
            }
            os << "  }\n";
          } else if constexpr (std::is_same_v<T, NoisyMaxSpec>) {
            os << "  cpd noisy_max {\n";
            if (!cpd.leak.empty()) {
              os << "    leak";
              write_distribution(os, cpd.leak);
              os << '\n';
            }
            for (const auto& e : cpd.entries) {
              const auto& levels = net.node(e.parent).variable.levels;
              os << "    " << e.parent << ':' << levels.at(e.level);
              write_distribution(os, e.distribution);
              os << '\n';
            }
            os << "  }\n";
          } else if constexpr (std::is_same_v<T, DeterministicMax>) {
            os << "  cpd max\n";
          } else if constexpr (std::is_same_v<T, UtilityTable>) {
            os << "  cpd utility {\n";
            const std::size_t width = cpd.parent_cards.empty() ? 1 : cpd.parent_cards.back();
            for (std::size_t i = 0; i < cpd.values.size(); i += width) {
              os << "    row";
              write_numbers(os, std::span<const double>(cpd.values).subspan(i, std::min(width, cpd.values.size() - i)));
              os << '\n';
            }
            os << "  }\n";
          }
        },
        node.cpd);
    os << "}\n";
  }
  return os.str();
}

std::string serialize_evidence(const Network& net, const Evidence& e) {
  std::ostringstream os;
  // Declaration order keeps files stable and readable.
  for (const auto& node : net.nodes()) {
    if (auto level = e.get(node.name())) {
      os << node.name() << " = " << node.variable.levels.at(*level) << '\n';
    }
  }
  return os.str();
}

ParseFailure::ParseFailure(std::vector<ParseDiagnostic> diagnostics)
    : ModelError([&] {
        std::string msg;
        for (const auto& d : diagnostics) {
          if (d.severity != Severity::error) continue;
          if (!msg.empty()) msg += '\n';
          msg += format_diagnostic(d);
        }
        return msg.empty() ? std::string("parse failed") : msg;
      }()),
      diagnostics_(std::move(diagnostics)) {}

Network load_network(std::string_view text, const std::string& file) {
  auto r = parse_network(text, file);
  if (!r.network) throw ParseFailure(std::move(r.diagnostics));
  return std::move(*r.network);
}

Evidence load_evidence(std::string_view text, const Network& net, const std::string& file) {
  auto r = parse_evidence(text, net, file);
  if (!r.evidence) throw ParseFailure(std::move(r.diagnostics));
  return std::move(*r.evidence);
}

}  // namespace beliefnet
