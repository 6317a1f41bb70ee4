#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ratopt/polynomial.hpp"
#include "ratopt/program.hpp"
#include "ratopt/sdp_problem.hpp"

namespace ratopt {

enum class RelaxationKind { Dense, Sparse, Epigraph };
enum class EpigraphMode { Inequality, Equality };

const char* to_string(RelaxationKind kind);

struct RelaxOptions {
  /// Caps |alpha| in the matching (dense) and linking (sparse) equalities
  /// below what the order allows. This is the "k" of the reference scripts.
  std::optional<int> match_degree;
};

/// One truncated moment sequence y_i and its indexing.
struct MeasureInfo {
  std::vector<int> variables;  // working-program indices, ascending
  int order = 0;
  /// Degree offset of the flatness test: u_i dense, v_i sparse (see certify).
  int offset = 0;
  int first_var = 0;
  std::vector<Monomial> basis;  // local monomials of degree <= 2k, graded lex
  std::unordered_map<Monomial, int, MonomialHash> index;
  std::vector<int> terms;        // original term indices carried by this measure
  Polynomial numerator;          // local coordinates
  Polynomial denominator;        // local coordinates
  std::vector<int> constraints;  // working-program constraint indices localized here
  int moment_block = -1;

  std::size_t dimension() const { return variables.size(); }
  int var(const Monomial& local) const { return first_var + index.at(local); }
  /// Number of monomials of degree <= t.
  int basis_size(int t) const;
  Monomial localize(const Monomial& global) const;
};

struct BlockInfo {
  int measure = 0;
  int constraint = -1;  // -1: moment matrix
  int order = 0;        // basis degree of the block
};

struct EqualityInfo {
  enum class Kind { Normalization, Matching, Localizing };
  Kind kind = Kind::Normalization;
  int measure = 0;
  int other = -1;       // partner measure for Matching
  int constraint = -1;  // for Localizing
  std::vector<int> alpha;  // working-program exponents
};

struct SDPRelaxation {
  SDPProblem problem;
  RelaxationKind kind = RelaxationKind::Dense;
  int order = 0;
  /// True when the SDP minimizes the negated objective (maximize sense).
  bool negated = false;
  /// The polynomial data actually relaxed: scaled, and lifted for epigraph.
  RationalProgram working;
  /// Scaled program whose objective the bound refers to (before lifting).
  RationalProgram target;
  /// Leading coordinates of `working` that are the user's x.
  std::size_t original_dimension = 0;
  std::optional<VariableScaling> scaling;
  std::vector<MeasureInfo> measures;
  std::vector<BlockInfo> blocks;
  std::vector<EqualityInfo> equalities;
  std::vector<std::string> warnings;

  /// f*_k in the program's own sense (lower bound for minimize, upper for maximize).
  double bound(double sdp_objective) const { return negated ? -sdp_objective : sdp_objective; }
  /// Moment vector of one measure, in basis order.
  std::vector<double> moments(const std::vector<double>& y, int measure) const;
  /// Maps a working-coordinate point to the user's original coordinates.
  std::vector<double> to_original(const std::vector<double>& working_point) const;
};

/// Smallest k with 2k >= every degree of p_i, q_i, g_j.
int min_order(const RationalProgram& program);

/// Smallest order whose matching equalities reach |alpha| = match_degree.
int order_for_match_degree(const RationalProgram& program, int match_degree);

/// p(a z + b) for every polynomial of the program; drops the scaling.
RationalProgram scaled_program(const RationalProgram& program);

SDPRelaxation build_dense(const RationalProgram& program, int k, const RelaxOptions& options = {});

SDPRelaxation build_sparse(const RationalProgram& program, const SparsityPattern& pattern, int k,
                           const RelaxOptions& options = {});

/// Polynomial program in (x, r) with one lifting variable per term.
RationalProgram lift_epigraph(const RationalProgram& program, EpigraphMode mode,
                              const std::vector<Interval>& r_bounds);

/// Relaxes lift_epigraph(program); sparse over cliques I_i + {r_i} when the
/// program carries a pattern, dense otherwise.
SDPRelaxation build_epigraph(const RationalProgram& program, int k, EpigraphMode mode,
                             const std::vector<Interval>& r_bounds, const RelaxOptions& options = {});

}  // namespace ratopt
