#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ratopt/sdp_problem.hpp"

namespace ratopt {

enum class SolveStatus { Optimal, Infeasible, Unbounded, MaxIterations, NumericalFailure };

const char* to_string(SolveStatus s);

struct SolverOptions {
  double gap_tol = 1e-8;
  double feas_tol = 1e-8;
  int max_iter = 200;
  /// Tolerance at which a stalled run's best iterate is still reported as
  /// optimal (flagged reduced_accuracy).
  double accept_tol = 1e-6;
  /// Stop when the best iterate has not improved for this many iterations.
  int stall_iterations = 15;
  std::uint64_t seed = 0;  // reserved: the default path is deterministic without it
  bool verbose = false;
};

struct SDPSolution {
  SolveStatus status = SolveStatus::NumericalFailure;
  std::vector<double> y;
  double objective = 0.0;       // c^T y
  double dual_objective = 0.0;  // -<A_0, X> + b^T lambda
  double gap = 0.0;             // |obj - dual| / (1 + |obj| + |dual|)
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  int iterations = 0;
  /// Smallest eigenvalue of A_b(y*) per block.
  std::vector<double> block_min_eigenvalue;
  /// Equality rows dropped as linearly dependent before the solve.
  int dropped_equalities = 0;
  /// Optimal only to accept_tol: the iteration stalled before the main tolerances.
  bool reduced_accuracy = false;
  std::string message;
};

/// Infeasible-start primal-dual path following with HKM search directions and
/// Mehrotra predictor-corrector steps. Equalities enter the Newton system
/// directly; dependent rows are removed up front.
SDPSolution solve(const SDPProblem& problem, const SolverOptions& options = {});

/// Indices of a maximal independent subset of the equality rows (greedy in
/// row order, sparse elimination). Exposed for tests.
std::vector<int> independent_equalities(const SDPProblem& problem, double tol = 1e-9);

}  // namespace ratopt
