#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ratopt/program.hpp"

namespace ratopt {

struct PolishOptions {
  int max_iter = 50;
  double step_tol = 1e-10;  // stop when ||grad|| falls below this
  /// Optional per-variable box the iterates are projected onto.
  std::optional<std::vector<Interval>> bounds;
};

struct PolishResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  /// A denominator came within round-off of zero; x is the last good iterate.
  bool aborted = false;
  std::string message;
};

/// Damped Newton on f = sum p_i/q_i (on -f when maximizing) with Armijo
/// backtracking. Steps that would increase the worst constraint violation
/// beyond that of x0 are rejected, so the result never leaves K when x0 is in
/// it, and the objective never gets worse than f(x0).
PolishResult polish(const RationalProgram& program, const std::vector<double>& x0,
                    const PolishOptions& options = {});

/// Worst violation of the program's constraints at x (0 when feasible).
double constraint_violation(const RationalProgram& program, const std::vector<double>& x);

}  // namespace ratopt
