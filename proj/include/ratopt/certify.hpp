#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ratopt/relaxation.hpp"
#include "ratopt/solver.hpp"

namespace ratopt {

struct NumericalRank {
  int rank = 0;
  std::vector<double> singular_values;  // nonincreasing
};

/// rank = #{sigma > tol * sigma_max}; the zero matrix has rank 0.
NumericalRank numerical_rank(const Eigen::MatrixXd& matrix, double tol = 1e-3);

/// M_t built from moments indexed like `basis` (graded lex, degree <= 2t).
Eigen::MatrixXd moment_matrix(const std::vector<double>& moments, const MeasureInfo& measure, int t);

struct MeasureRank {
  int measure = 0;
  int offset = 0;                       // degree offset used by the flatness test
  std::vector<int> ranks;               // numerical rank of M_t, t = 0..k
  std::vector<double> singular_values;  // of M_k
  std::optional<int> flat_order;        // smallest t with rank M_t = rank M_{t-offset}
  double mass = 0.0;                    // y_{i,0}
};

struct OverlapRank {
  int first = 0;
  int second = 0;
  int rank = 0;
  std::vector<double> singular_values;
};

struct RankProfile {
  std::vector<MeasureRank> measures;
  std::vector<OverlapRank> overlaps;  // sparse only
};

enum class CertStatus { CertifiedOptimal, LowerBoundOnly, SolverFailed };

const char* to_string(CertStatus s);

struct Atom {
  std::vector<double> x;        // original coordinates
  std::vector<double> working;  // coordinates of the relaxed program
  double weight = 0.0;
  double objective = 0.0;       // f(x)
  double violation = 0.0;       // worst constraint violation
};

struct Certificate {
  int order = 0;
  double bound = 0.0;
  CertStatus status = CertStatus::SolverFailed;
  SolveStatus solver_status = SolveStatus::NumericalFailure;
  RankProfile ranks;
  std::vector<Atom> atoms;
  /// First-order moments when extraction is not possible (assumes a unique minimizer).
  std::optional<std::vector<double>> approximate_minimizer;
  std::vector<std::string> diagnostics;
};

struct CertifyOptions {
  double rank_tol = 1e-3;
  std::uint64_t seed = 0;
  double feasibility_tol = 1e-6;
  double objective_tol = 1e-4;  // relative to 1 + |bound|
  double stitch_tol = 1e-4;
  double cluster_tol = 1e-5;
  std::size_t max_stitched = 100;
};

struct Extraction {
  bool ok = false;
  std::vector<std::vector<double>> points;
  std::vector<double> weights;
  std::string message;
};

/// Recovers the r atoms of a flat moment matrix M_t (rank r, moments
/// normalized so that y_0 = 1). Pivots are restricted to degree <= t-1 so the
/// shift matrices stay inside M_t.
Extraction extract_atoms(const std::vector<double>& moments, const MeasureInfo& measure, int t, int rank,
                         const CertifyOptions& options = {});

Certificate check_flat_and_extract(const SDPSolution& solution, const SDPRelaxation& relaxation,
                                   const CertifyOptions& options = {});

}  // namespace ratopt
