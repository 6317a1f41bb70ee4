#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ratopt/polynomial.hpp"
#include "ratopt/program.hpp"
#include "ratopt/relaxation.hpp"

namespace ratopt {

/// Inclusive range of orders (or matching degrees).
struct OrderRange {
  int first = 0;
  int last = 0;
};

/// "A" or "A:B".
OrderRange parse_range(std::string_view text);

struct VariableBound {
  int var = 0;
  double lo = 0.0;
  double hi = 0.0;
};

struct VariableScale {
  int var = 0;
  double a = 1.0;
  double b = 0.0;
};

/// Run settings, either from the file's options section or the command line.
/// Unset fields fall back to the defaults of run_hierarchy.
struct RunSettings {
  std::optional<OrderRange> orders;
  std::optional<OrderRange> match_degrees;
  std::optional<double> ball;
  std::vector<VariableBound> bounds;
  std::vector<VariableScale> scales;
  std::optional<EpigraphMode> epigraph;
  std::optional<Interval> lift_bounds;
  std::optional<double> rank_tol;
  std::optional<std::string> solver;  // "internal" or "external:PATH"
  std::optional<bool> sparse;
  std::optional<bool> infer_cliques;
  std::optional<bool> all_orders;
  std::optional<bool> polish;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> export_sdpa;  // directory for one .dat-s per order

  /// Fields set in `over` replace ours; bounds/scales are appended.
  void merge(const RunSettings& over);
};

/// "name:lo:hi", "name:a:b" and "lo:hi" items of the options and CLI flags.
VariableBound parse_bound(std::string_view text, const std::vector<std::string>& variables, int line = 0);
VariableScale parse_scale(std::string_view text, const std::vector<std::string>& variables, int line = 0);
Interval parse_interval(std::string_view text, int line = 0);

/// Applies one "key = value" option (keys as the CLI flags without "--").
void apply_setting(RunSettings& settings, std::string_view key, std::string_view value,
                   const std::vector<std::string>& variables, int line = 0);

struct ParsedTerm {
  Polynomial numerator;
  Polynomial denominator;
};

struct ParsedConstraint {
  Polynomial g;
  Relation relation = Relation::GreaterEqual;
};

struct ProblemFile {
  std::vector<std::string> variables;
  Sense sense = Sense::Minimize;
  std::vector<ParsedTerm> terms;
  std::vector<ParsedConstraint> constraints;
  std::vector<std::vector<int>> cliques;  // one per term when given
  RunSettings settings;

  /// Program with user constraints only; cliques are attached by
  /// run_hierarchy, which also assigns the constraints.
  RationalProgram program() const;
};

/// Expression over declared variables -> expanded polynomial. Division is not
/// part of the expression language.
Polynomial parse_expression(std::string_view text, const std::vector<std::string>& variables,
                            int line = 1, int column_offset = 0);

/// Parses the sectioned .rp format:
///
///   variables: x y
///   minimize:                 (or maximize:)
///     (1 + x + x^2) / (1 + x^2)
///     y^2
///   subject to:
///     4 - x^2 - y^2 >= 0
///     x - y == 0
///   clique: x y              (one line per term, in term order)
///   options:
///     order = 2:6
///
/// '#' starts a comment. Throws ParseError.
ProblemFile parse_problem(std::string_view text);

/// Pretty-prints a file that parse_problem reads back to the same polynomials.
std::string format_problem(const ProblemFile& file);

}  // namespace ratopt
