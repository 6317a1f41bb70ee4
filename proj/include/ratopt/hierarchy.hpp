#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ratopt/certify.hpp"
#include "ratopt/polish.hpp"
#include "ratopt/problem_file.hpp"
#include "ratopt/relaxation.hpp"
#include "ratopt/solver.hpp"

namespace ratopt {

struct RunRow {
  int k = 0;  // relaxation order, or the matching degree in a match-degree sweep
  int relaxation_order = 0;
  std::optional<int> match_degree;
  double bound = 0.0;
  SolveStatus solver_status = SolveStatus::NumericalFailure;
  bool reduced_accuracy = false;
  int iterations = 0;
  CertStatus status = CertStatus::SolverFailed;
  RankProfile ranks;
  std::vector<Atom> atoms;
  std::optional<std::vector<double>> approximate_minimizer;  // original coordinates
  std::vector<PolishResult> polished;  // one per atom, or one for the approximate minimizer
  std::vector<int> block_sizes;
  int equalities = 0;
  double seconds = 0.0;
  std::vector<std::string> diagnostics;
};

struct RunReport {
  RelaxationKind kind = RelaxationKind::Dense;
  Sense sense = Sense::Minimize;
  std::vector<std::string> variables;
  bool match_degree_sweep = false;
  std::vector<RunRow> rows;  // ascending k
  CertStatus verdict = CertStatus::SolverFailed;
  std::vector<std::pair<std::string, std::string>> settings;  // echo of the resolved options
  std::vector<std::string> warnings;
};

/// The program a run relaxes: user constraints, then bound quadratics
/// (x - lo)(hi - x) >= 0, scaling, the sparsity pattern (declared or
/// inferred) and finally the ball constraint(s).
RationalProgram prepare_program(const ProblemFile& file, const RunSettings& settings,
                                std::vector<std::string>* warnings = nullptr);

/// Builds, solves and certifies each order of the range. Stops at the first
/// certified order unless settings.all_orders. Throws ModelingError/OrderError
/// on inconsistent input; infeasible or failed relaxations are recorded.
RunReport run_hierarchy(const ProblemFile& file, const RunSettings& overrides = {});

enum class ReportFormat { Table, Csv, Json };

std::string emit_report(const RunReport& report, ReportFormat format);

/// 0 certified, 2 bounds only, 3 solver failure.
int exit_code(const RunReport& report);

/// Solves through an external SDPA-compatible binary: writes the .dat-s file,
/// runs `path input output`, reads objValPrimal/xVec back. Best-effort.
SDPSolution solve_external(const SDPProblem& problem, const std::string& path);

}  // namespace ratopt
