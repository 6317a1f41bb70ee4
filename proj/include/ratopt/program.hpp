#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ratopt/polynomial.hpp"

namespace ratopt {

/// One summand p/q of the objective.
struct RationalTerm {
  Polynomial numerator;
  Polynomial denominator;

  RationalTerm(Polynomial p, Polynomial q);

  /// Union of numerator and denominator supports.
  std::vector<int> support() const;
  double evaluate(std::span<const double> x) const;
};

enum class Relation { GreaterEqual, Equal };
enum class ConstraintOrigin { User, Ball, EpigraphBound };

struct ConstraintPoly {
  Polynomial g;
  Relation relation = Relation::GreaterEqual;
  ConstraintOrigin origin = ConstraintOrigin::User;
};

enum class Sense { Minimize, Maximize };

/// Cliques I_i (one per term) and the constraint partition J_i, 0-based.
struct SparsityPattern {
  std::vector<std::vector<int>> cliques;
  std::vector<std::vector<int>> assignment;

  std::size_t size() const { return cliques.size(); }
  /// U_i: cliques j > i that intersect clique i.
  std::vector<int> overlaps(std::size_t i) const;
  /// I_i ∩ I_j, ascending.
  std::vector<int> intersection(std::size_t i, std::size_t j) const;
};

struct RationalProgram {
  std::size_t n = 0;
  std::vector<RationalTerm> terms;
  std::vector<ConstraintPoly> constraints;
  Sense sense = Sense::Minimize;
  std::optional<SparsityPattern> pattern;
  std::optional<VariableScaling> scaling;
  std::vector<std::string> variable_names;

  /// Throws ModelingError unless every polynomial has dimension n, N >= 1 and
  /// no denominator is the zero polynomial.
  void validate() const;

  double objective(std::span<const double> x) const;
  std::string variable_name(std::size_t j) const;
};

/// Structural checks on a pattern against a program: coverage of all
/// variables, J_i a partition of the constraint indices, supports contained
/// in their cliques. `require_nonempty_assignment` additionally demands every
/// J_i be nonempty, which holds once ball constraints are appended per clique.
void validate_pattern(const SparsityPattern& pattern, const RationalProgram& program,
                      bool require_nonempty_assignment = false);

struct RipVerdict {
  bool holds = true;
  /// Smallest violating clique index (0-based) when !holds.
  std::optional<std::size_t> witness;
};

/// Running intersection property over the clique order.
RipVerdict check_rip(const SparsityPattern& pattern);

/// I_i = support of term i; each constraint goes to the first clique that
/// contains it, enlarging the clique with the smallest covering union when
/// none does. RIP is not guaranteed.
SparsityPattern infer_cliques(const RationalProgram& program);

/// Pattern from user cliques: each constraint goes to the lowest-index clique
/// containing its support. Throws ModelingError if none does or a term is not
/// covered by its clique.
SparsityPattern assign_constraints(std::vector<std::vector<int>> cliques, const RationalProgram& program);

enum class BallMode { Dense, PerClique };

/// Appends M - ||x||^2 >= 0 (dense) or M - sum_{k in I_i} x_k^2 >= 0 for each
/// clique, assigned to J_i.
RationalProgram add_ball_constraints(const RationalProgram& program, double radius_squared,
                                     BallMode mode);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

enum class DenominatorVerdict { Ok, Suspect, Inconclusive };

struct DenominatorReport {
  std::vector<double> min_sampled;  // per term; +inf when no feasible sample
  std::size_t feasible_samples = 0;
  DenominatorVerdict verdict = DenominatorVerdict::Inconclusive;
  std::string note;
};

/// Necessary-condition screen for q_i > 0 on K: samples the box, keeps the
/// points that satisfy every inequality constraint and records the smallest
/// q_i seen. Equality constraints are ignored by the sampler.
DenominatorReport validate_denominators(const RationalProgram& program, std::size_t sample_count,
                                        const std::vector<Interval>& box,
                                        std::uint64_t seed = 0x5eed);

const char* to_string(DenominatorVerdict v);

}  // namespace ratopt
