#include "ratopt/problem_file.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

#include "ratopt/error.hpp"

namespace ratopt {

namespace {

using Kind = ParseError::Kind;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Recursive descent over one expression; positions are reported 1-based
// relative to the source line.
class ExpressionParser {
 public:
  ExpressionParser(std::string_view text, const std::vector<std::string>& vars, int line, int col0)
      : s_(text), vars_(vars), line_(line), col0_(col0) {}

  Polynomial parse() {
    if (trim(s_).empty()) fail(Kind::Syntax, 0, "empty expression");
    Polynomial p = expression();
    skip();
    if (pos_ < s_.size()) {
      if (s_[pos_] == '/') fail(Kind::MisplacedDivision, pos_, "division is only allowed once per term line, at top level");
      if (s_[pos_] == ')') fail(Kind::Syntax, pos_, "unbalanced ')'");
      fail(Kind::Syntax, pos_, std::string("unexpected '") + s_[pos_] + "'");
    }
    return p;
  }

 private:
  [[noreturn]] void fail(Kind kind, std::size_t at, const std::string& what) const {
    throw ParseError(kind, line_, col0_ + static_cast<int>(at) + 1, what);
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Polynomial expression() {
    // A leading sign is accepted so that "-x + 1" reads naturally.
    bool negate = false;
    if (accept('-')) negate = true;
    else accept('+');
    Polynomial p = term();
    if (negate) p = -p;
    for (;;) {
      if (accept('+')) p += term();
      else if (accept('-')) p -= term();
      else return p;
    }
  }

  Polynomial term() {
    Polynomial p = factor();
    while (accept('*')) p = p * factor();
    return p;
  }

  Polynomial factor() {
    Polynomial b = base();
    if (!accept('^')) return b;
    skip();
    const std::size_t at = pos_;
    std::size_t end = pos_;
    while (end < s_.size() && std::isdigit(static_cast<unsigned char>(s_[end]))) ++end;
    const bool fractional = end < s_.size() && (s_[end] == '.' || s_[end] == 'e' || s_[end] == 'E');
    if (end == pos_ || fractional) {
      fail(Kind::MalformedExponent, at > 0 ? at - 1 : at, "exponent must be a non-negative integer");
    }
    int e = 0;
    auto [ptr, ec] = std::from_chars(s_.data() + pos_, s_.data() + end, e);
    if (ec != std::errc() || e > 1000) fail(Kind::MalformedExponent, at, "exponent out of range");
    (void)ptr;
    pos_ = end;
    return b.pow(e);
  }

  Polynomial base() {
    skip();
    if (pos_ >= s_.size()) fail(Kind::Syntax, pos_, "unexpected end of expression");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Polynomial p = expression();
      skip();
      if (pos_ < s_.size() && s_[pos_] == '/') {
        fail(Kind::MisplacedDivision, pos_, "division inside parentheses");
      }
      if (!accept(')')) fail(Kind::Syntax, pos_, "expected ')'");
      return p;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (ident_start(c)) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && ident_char(s_[pos_])) ++pos_;
      const std::string_view name = s_.substr(start, pos_ - start);
      auto it = std::find(vars_.begin(), vars_.end(), name);
      if (it == vars_.end()) {
        fail(Kind::UndeclaredIdentifier, start, "undeclared identifier '" + std::string(name) + "'");
      }
      return Polynomial::variable(vars_.size(), static_cast<std::size_t>(it - vars_.begin()));
    }
    if (c == '/') fail(Kind::MisplacedDivision, pos_, "misplaced division");
    fail(Kind::Syntax, pos_, std::string("unexpected '") + c + "'");
  }

  Polynomial number() {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
    if (ec != std::errc()) fail(Kind::Syntax, pos_, "malformed number");
    pos_ = static_cast<std::size_t>(ptr - s_.data());
    if (pos_ < s_.size() && ident_start(s_[pos_])) fail(Kind::Syntax, pos_, "missing '*' after number");
    return Polynomial::constant(vars_.size(), v);
  }

  std::string_view s_;
  const std::vector<std::string>& vars_;
  int line_;
  int col0_;
  std::size_t pos_ = 0;
};

// Positions of `c` outside parentheses.
std::vector<std::size_t> top_level(std::string_view s, char c) {
  std::vector<std::size_t> out;
  int depth = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    else if (s[i] == ')') --depth;
    else if (s[i] == c && depth == 0) out.push_back(i);
  }
  return out;
}

double parse_number(std::string_view text, int line, const std::string& what) {
  text = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(Kind::NonNumeric, line, 0, what + ": '" + std::string(text) + "' is not a number");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, std::string_view seps) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && seps.find(s[i]) != std::string_view::npos) ++i;
    std::size_t j = i;
    while (j < s.size() && seps.find(s[j]) == std::string_view::npos) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

int variable_index(std::string_view name, const std::vector<std::string>& vars, int line) {
  auto it = std::find(vars.begin(), vars.end(), trim(name));
  if (it == vars.end()) {
    throw ParseError(Kind::UndeclaredIdentifier, line, 0, "undeclared variable '" + std::string(trim(name)) + "'");
  }
  return static_cast<int>(it - vars.begin());
}

bool parse_bool(std::string_view v, int line) {
  v = trim(v);
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw ParseError(Kind::Syntax, line, 0, "expected a boolean, got '" + std::string(v) + "'");
}

// Lowercased header keyword ending in ':' at the start of a line, if any.
std::optional<std::pair<std::string, std::string_view>> header(std::string_view line) {
  const auto colon = line.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  std::string key(trim(line.substr(0, colon)));
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
  static const char* known[] = {"variables", "minimize", "maximize", "subject to", "clique", "options"};
  for (const char* k : known) {
    if (key == k) return std::make_pair(key, trim(line.substr(colon + 1)));
  }
  return std::nullopt;
}

}  // namespace

OrderRange parse_range(std::string_view text) {
  const auto parts = split(text, ":");
  auto as_int = [&](std::string_view s) {
    s = trim(s);
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v < 0) {
      throw ParseError(Kind::NonNumeric, 0, 0, "bad order range '" + std::string(text) + "'");
    }
    return v;
  };
  if (parts.size() == 1) return {as_int(parts[0]), as_int(parts[0])};
  if (parts.size() == 2) {
    OrderRange r{as_int(parts[0]), as_int(parts[1])};
    if (r.last < r.first) throw ParseError(Kind::Syntax, 0, 0, "empty order range '" + std::string(text) + "'");
    return r;
  }
  throw ParseError(Kind::Syntax, 0, 0, "bad order range '" + std::string(text) + "'");
}

VariableBound parse_bound(std::string_view text, const std::vector<std::string>& vars, int line) {
  const auto parts = split(text, ":");
  if (parts.size() != 3) throw ParseError(Kind::Syntax, line, 0, "bounds take the form name:lo:hi");
  VariableBound b{variable_index(parts[0], vars, line), parse_number(parts[1], line, "lower bound"),
                  parse_number(parts[2], line, "upper bound")};
  if (!(b.lo < b.hi)) throw ParseError(Kind::Syntax, line, 0, "empty bound interval for " + std::string(parts[0]));
  return b;
}

VariableScale parse_scale(std::string_view text, const std::vector<std::string>& vars, int line) {
  const auto parts = split(text, ":");
  if (parts.size() != 3) throw ParseError(Kind::Syntax, line, 0, "scales take the form name:a:b");
  VariableScale s{variable_index(parts[0], vars, line), parse_number(parts[1], line, "multiplier"),
                  parse_number(parts[2], line, "offset")};
  if (s.a == 0.0) throw ParseError(Kind::Syntax, line, 0, "scale multiplier must be nonzero");
  return s;
}

Interval parse_interval(std::string_view text, int line) {
  const auto parts = split(text, ":");
  if (parts.size() != 2) throw ParseError(Kind::Syntax, line, 0, "interval takes the form lo:hi");
  Interval iv{parse_number(parts[0], line, "lower end"), parse_number(parts[1], line, "upper end")};
  if (!(iv.lo < iv.hi)) throw ParseError(Kind::Syntax, line, 0, "empty interval");
  return iv;
}

void apply_setting(RunSettings& s, std::string_view key, std::string_view value,
                   const std::vector<std::string>& vars, int line) {
  value = trim(value);
  try {
    if (key == "order") s.orders = parse_range(value);
    else if (key == "match-degree") s.match_degrees = parse_range(value);
    else if (key == "ball") s.ball = parse_number(value, line, "ball");
    else if (key == "bounds") {
      for (auto item : split(value, " ,\t")) s.bounds.push_back(parse_bound(item, vars, line));
    } else if (key == "scale") {
      for (auto item : split(value, " ,\t")) s.scales.push_back(parse_scale(item, vars, line));
    } else if (key == "epigraph") {
      if (value == "eq") s.epigraph = EpigraphMode::Equality;
      else if (value == "ineq") s.epigraph = EpigraphMode::Inequality;
      else throw ParseError(Kind::Syntax, line, 0, "epigraph mode is 'ineq' or 'eq'");
    } else if (key == "lift-bounds") s.lift_bounds = parse_interval(value, line);
    else if (key == "ranktol") s.rank_tol = parse_number(value, line, "ranktol");
    else if (key == "solver") {
      if (value != "internal" && !value.starts_with("external:")) {
        throw ParseError(Kind::Syntax, line, 0, "solver is 'internal' or 'external:PATH'");
      }
      s.solver = std::string(value);
    } else if (key == "sparse") s.sparse = parse_bool(value, line);
    else if (key == "infer-cliques") s.infer_cliques = parse_bool(value, line);
    else if (key == "all-orders") s.all_orders = parse_bool(value, line);
    else if (key == "polish") s.polish = parse_bool(value, line);
    else if (key == "export-sdpa") s.export_sdpa = std::string(value);
    else if (key == "seed") {
      std::uint64_t seed = 0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), seed);
      if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw ParseError(Kind::NonNumeric, line, 0, "seed must be a non-negative integer");
      }
      s.seed = seed;
    }
    else throw ParseError(Kind::Syntax, line, 0, "unknown option '" + std::string(key) + "'");
  } catch (const ParseError& e) {
    if (e.line() != 0 || line == 0) throw;
    throw ParseError(e.kind(), line, 0, std::string(e.what()));
  }
}

void RunSettings::merge(const RunSettings& over) {
  if (over.orders) orders = over.orders;
  if (over.match_degrees) match_degrees = over.match_degrees;
  if (over.ball) ball = over.ball;
  bounds.insert(bounds.end(), over.bounds.begin(), over.bounds.end());
  scales.insert(scales.end(), over.scales.begin(), over.scales.end());
  if (over.epigraph) epigraph = over.epigraph;
  if (over.lift_bounds) lift_bounds = over.lift_bounds;
  if (over.rank_tol) rank_tol = over.rank_tol;
  if (over.solver) solver = over.solver;
  if (over.sparse) sparse = over.sparse;
  if (over.infer_cliques) infer_cliques = over.infer_cliques;
  if (over.all_orders) all_orders = over.all_orders;
  if (over.polish) polish = over.polish;
  if (over.seed) seed = over.seed;
  if (over.export_sdpa) export_sdpa = over.export_sdpa;
}

RationalProgram ProblemFile::program() const {
  RationalProgram p;
  p.n = variables.size();
  p.sense = sense;
  p.variable_names = variables;
  for (const auto& t : terms) p.terms.emplace_back(t.numerator, t.denominator);
  for (const auto& c : constraints) p.constraints.push_back({c.g, c.relation, ConstraintOrigin::User});
  return p;
}

Polynomial parse_expression(std::string_view text, const std::vector<std::string>& variables, int line,
                            int column_offset) {
  return ExpressionParser(text, variables, line, column_offset).parse();
}

ProblemFile parse_problem(std::string_view text) {
  enum class Section { None, Objective, Constraints, Options };
  ProblemFile file;
  Section section = Section::None;
  bool have_vars = false;
  bool have_sense = false;
  int line_no = 0;
  int objective_line = 0;
  std::vector<std::pair<int, std::vector<std::string_view>>> clique_lines;

  auto need_vars = [&](int line) {
    if (!have_vars) throw ParseError(Kind::Syntax, line, 0, "'variables:' must come first");
  };

  auto add_term = [&](std::string_view body, int col0, int line) {
    need_vars(line);
    const auto slashes = top_level(body, '/');
    if (slashes.size() > 1) {
      throw ParseError(Kind::MisplacedDivision, line, col0 + static_cast<int>(slashes[1]) + 1,
                       "a term line may contain only one top-level '/'");
    }
    ParsedTerm t;
    if (slashes.empty()) {
      t.numerator = parse_expression(body, file.variables, line, col0);
      t.denominator = Polynomial::constant(file.variables.size(), 1.0);
    } else {
      const std::size_t k = slashes[0];
      t.numerator = parse_expression(body.substr(0, k), file.variables, line, col0);
      t.denominator = parse_expression(body.substr(k + 1), file.variables, line, col0 + static_cast<int>(k) + 1);
      if (t.denominator.is_zero()) throw ParseError(Kind::Syntax, line, col0 + static_cast<int>(k) + 1, "zero denominator");
    }
    file.terms.push_back(std::move(t));
  };

  auto add_constraint = [&](std::string_view body, int col0, int line) {
    need_vars(line);
    struct Rel {
      const char* op;
      Relation rel;
      bool flip;
    };
    static const Rel rels[] = {{">=", Relation::GreaterEqual, false},
                               {"<=", Relation::GreaterEqual, true},
                               {"==", Relation::Equal, false}};
    std::size_t at = std::string_view::npos;
    const Rel* found = nullptr;
    for (const auto& r : rels) {
      const auto p = body.find(r.op);
      if (p == std::string_view::npos) continue;
      if (found) throw ParseError(Kind::Syntax, line, col0 + static_cast<int>(p) + 1, "more than one relation");
      found = &r;
      at = p;
    }
    if (!found) throw ParseError(Kind::Syntax, line, col0 + 1, "constraint needs '>=', '<=' or '=='");
    if (body.find(found->op, at + 2) != std::string_view::npos) {
      throw ParseError(Kind::Syntax, line, col0 + static_cast<int>(at) + 1, "more than one relation");
    }
    if (body.find('/') != std::string_view::npos) {
      throw ParseError(Kind::MisplacedDivision, line, col0 + static_cast<int>(body.find('/')) + 1,
                       "division is not allowed in constraints");
    }
    const Polynomial lhs = parse_expression(body.substr(0, at), file.variables, line, col0);
    const Polynomial rhs = parse_expression(body.substr(at + 2), file.variables, line, col0 + static_cast<int>(at) + 2);
    file.constraints.push_back({found->flip ? rhs - lhs : lhs - rhs, found->rel});
  };

  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    if (trim(raw).empty()) {
      if (end == text.size()) break;
      continue;
    }
    // Column of the first character of `body` inside the raw line.
    auto col_of = [&](std::string_view body) { return static_cast<int>(body.data() - raw.data()); };

    if (auto h = header(raw)) {
      const auto& [key, rest] = *h;
      if (key == "variables") {
        if (have_vars) throw ParseError(Kind::Syntax, line_no, 0, "variables declared twice");
        for (auto name : split(rest, " ,\t")) {
          if (!ident_start(name.front()) || !std::all_of(name.begin(), name.end(), ident_char)) {
            throw ParseError(Kind::Syntax, line_no, col_of(name) + 1, "bad variable name '" + std::string(name) + "'");
          }
          if (std::find(file.variables.begin(), file.variables.end(), name) != file.variables.end()) {
            throw ParseError(Kind::Syntax, line_no, col_of(name) + 1, "duplicate variable '" + std::string(name) + "'");
          }
          file.variables.emplace_back(name);
        }
        if (file.variables.empty()) throw ParseError(Kind::Syntax, line_no, 0, "no variables declared");
        have_vars = true;
        section = Section::None;
      } else if (key == "minimize" || key == "maximize") {
        need_vars(line_no);
        if (have_sense) throw ParseError(Kind::Syntax, line_no, 0, "objective declared twice");
        have_sense = true;
        objective_line = line_no;
        file.sense = key == "minimize" ? Sense::Minimize : Sense::Maximize;
        section = Section::Objective;
        if (!rest.empty()) add_term(rest, col_of(rest), line_no);
      } else if (key == "subject to") {
        section = Section::Constraints;
        if (!rest.empty()) add_constraint(rest, col_of(rest), line_no);
      } else if (key == "clique") {
        need_vars(line_no);
        clique_lines.emplace_back(line_no, split(rest, " ,\t"));
      } else {
        section = Section::Options;
        if (!rest.empty()) throw ParseError(Kind::Syntax, line_no, 0, "options go on the following lines");
      }
      continue;
    }

    const std::string_view body = trim(raw);
    switch (section) {
      case Section::Objective: add_term(body, col_of(body), line_no); break;
      case Section::Constraints: add_constraint(body, col_of(body), line_no); break;
      case Section::Options: {
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) throw ParseError(Kind::Syntax, line_no, 0, "options are 'key = value'");
        apply_setting(file.settings, trim(body.substr(0, eq)), body.substr(eq + 1), file.variables, line_no);
        break;
      }
      case Section::None:
        throw ParseError(Kind::Syntax, line_no, col_of(body) + 1, "line outside any section");
    }
    if (end == text.size()) break;
  }

  if (!have_vars) throw ParseError(Kind::Syntax, line_no, 0, "no 'variables:' line");
  if (file.terms.empty()) {
    throw ParseError(Kind::EmptyObjective, objective_line ? objective_line : line_no, 0, "the objective has no terms");
  }
  if (!clique_lines.empty()) {
    if (clique_lines.size() != file.terms.size()) {
      throw ParseError(Kind::Syntax, clique_lines.front().first, 0,
                       "expected one clique line per term (" + std::to_string(file.terms.size()) + "), got " +
                           std::to_string(clique_lines.size()));
    }
    for (std::size_t i = 0; i < clique_lines.size(); ++i) {
      const auto& [line, names] = clique_lines[i];
      std::vector<int> clique;
      for (auto name : names) clique.push_back(variable_index(name, file.variables, line));
      std::sort(clique.begin(), clique.end());
      clique.erase(std::unique(clique.begin(), clique.end()), clique.end());
      if (clique.empty()) throw ParseError(Kind::Syntax, line, 0, "empty clique");
      RationalTerm term(file.terms[i].numerator, file.terms[i].denominator);
      for (int v : term.support()) {
        if (!std::binary_search(clique.begin(), clique.end(), v)) {
          throw ParseError(Kind::Syntax, line, 0,
                           "clique " + std::to_string(i + 1) + " misses variable '" + file.variables[v] +
                               "' of its term");
        }
      }
      file.cliques.push_back(std::move(clique));
    }
  }
  return file;
}

std::string format_problem(const ProblemFile& file) {
  std::ostringstream os;
  const auto& names = file.variables;
  os << "variables:";
  for (const auto& v : names) os << ' ' << v;
  os << '\n' << (file.sense == Sense::Minimize ? "minimize:" : "maximize:") << '\n';
  for (const auto& t : file.terms) {
    os << "  (" << t.numerator.to_string(names) << ") / (" << t.denominator.to_string(names) << ")\n";
  }
  if (!file.constraints.empty()) {
    os << "subject to:\n";
    for (const auto& c : file.constraints) {
      os << "  " << c.g.to_string(names) << (c.relation == Relation::Equal ? " == 0" : " >= 0") << '\n';
    }
  }
  for (const auto& clique : file.cliques) {
    os << "clique:";
    for (int v : clique) os << ' ' << names[v];
    os << '\n';
  }
  const auto& s = file.settings;
  std::ostringstream opts;
  auto range = [](const OrderRange& r) {
    return r.first == r.last ? std::to_string(r.first) : std::to_string(r.first) + ":" + std::to_string(r.last);
  };
  auto boolean = [](bool b) { return b ? "true" : "false"; };
  if (s.orders) opts << "  order = " << range(*s.orders) << '\n';
  if (s.match_degrees) opts << "  match-degree = " << range(*s.match_degrees) << '\n';
  if (s.ball) opts << "  ball = " << format_double(*s.ball) << '\n';
  if (!s.bounds.empty()) {
    opts << "  bounds =";
    for (const auto& b : s.bounds) opts << ' ' << names[b.var] << ':' << format_double(b.lo) << ':' << format_double(b.hi);
    opts << '\n';
  }
  if (!s.scales.empty()) {
    opts << "  scale =";
    for (const auto& c : s.scales) opts << ' ' << names[c.var] << ':' << format_double(c.a) << ':' << format_double(c.b);
    opts << '\n';
  }
  if (s.epigraph) opts << "  epigraph = " << (*s.epigraph == EpigraphMode::Equality ? "eq" : "ineq") << '\n';
  if (s.lift_bounds) opts << "  lift-bounds = " << format_double(s.lift_bounds->lo) << ':' << format_double(s.lift_bounds->hi) << '\n';
  if (s.rank_tol) opts << "  ranktol = " << format_double(*s.rank_tol) << '\n';
  if (s.solver) opts << "  solver = " << *s.solver << '\n';
  if (s.sparse) opts << "  sparse = " << boolean(*s.sparse) << '\n';
  if (s.infer_cliques) opts << "  infer-cliques = " << boolean(*s.infer_cliques) << '\n';
  if (s.all_orders) opts << "  all-orders = " << boolean(*s.all_orders) << '\n';
  if (s.polish) opts << "  polish = " << boolean(*s.polish) << '\n';
  if (s.seed) opts << "  seed = " << *s.seed << '\n';
  if (s.export_sdpa) opts << "  export-sdpa = " << *s.export_sdpa << '\n';
  if (!opts.str().empty()) os << "options:\n" << opts.str();
  return os.str();
}

}  // namespace ratopt
