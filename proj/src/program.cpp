#include "ratopt/program.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "ratopt/error.hpp"

namespace ratopt {

namespace {

std::vector<int> merge_sorted(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool contains_all(const std::vector<int>& set, const std::vector<int>& subset) {
  return std::includes(set.begin(), set.end(), subset.begin(), subset.end());
}

}  // namespace

RationalTerm::RationalTerm(Polynomial p, Polynomial q)
    : numerator(std::move(p)), denominator(std::move(q)) {
  if (numerator.dimension() != denominator.dimension()) {
    throw ModelingError("rational term: numerator and denominator dimensions differ");
  }
  if (denominator.is_zero()) throw ModelingError("rational term: zero denominator");
}

std::vector<int> RationalTerm::support() const {
  return merge_sorted(numerator.support(), denominator.support());
}

double RationalTerm::evaluate(std::span<const double> x) const {
  return numerator.evaluate(x) / denominator.evaluate(x);
}

std::vector<int> SparsityPattern::overlaps(std::size_t i) const {
  std::vector<int> u;
  for (std::size_t j = i + 1; j < cliques.size(); ++j) {
    if (!intersection(i, j).empty()) u.push_back(static_cast<int>(j));
  }
  return u;
}

std::vector<int> SparsityPattern::intersection(std::size_t i, std::size_t j) const {
  std::vector<int> out;
  std::set_intersection(cliques[i].begin(), cliques[i].end(), cliques[j].begin(),
                        cliques[j].end(), std::back_inserter(out));
  return out;
}

void RationalProgram::validate() const {
  if (n == 0) throw ModelingError("program has no variables");
  if (terms.empty()) throw ModelingError("program has no objective terms");
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].numerator.dimension() != n || terms[i].denominator.dimension() != n) {
      throw ModelingError("term " + std::to_string(i + 1) + " has the wrong dimension");
    }
    if (terms[i].denominator.is_zero()) {
      throw ModelingError("term " + std::to_string(i + 1) + " has a zero denominator");
    }
  }
  for (std::size_t j = 0; j < constraints.size(); ++j) {
    if (constraints[j].g.dimension() != n) {
      throw ModelingError("constraint " + std::to_string(j + 1) + " has the wrong dimension");
    }
  }
  if (scaling && scaling->dimension() != n) {
    throw ModelingError("scaling dimension does not match the program");
  }
  if (!variable_names.empty() && variable_names.size() != n) {
    throw ModelingError("variable name count does not match the program");
  }
}

double RationalProgram::objective(std::span<const double> x) const {
  double f = 0.0;
  for (const auto& t : terms) f += t.evaluate(x);
  return f;
}

std::string RationalProgram::variable_name(std::size_t j) const {
  return j < variable_names.size() ? variable_names[j] : "x" + std::to_string(j + 1);
}

void validate_pattern(const SparsityPattern& pattern, const RationalProgram& program,
                      bool require_nonempty_assignment) {
  const std::size_t N = program.terms.size();
  if (pattern.cliques.size() != N) {
    throw ModelingError("sparsity pattern needs one clique per term (" + std::to_string(N) +
                        "), got " + std::to_string(pattern.cliques.size()));
  }
  if (pattern.assignment.size() != N) {
    throw ModelingError("sparsity pattern needs one constraint group per clique");
  }
  std::vector<bool> covered(program.n, false);
  for (std::size_t i = 0; i < N; ++i) {
    const auto& c = pattern.cliques[i];
    if (c.empty()) throw ModelingError("clique " + std::to_string(i + 1) + " is empty");
    if (!std::is_sorted(c.begin(), c.end()) ||
        std::adjacent_find(c.begin(), c.end()) != c.end()) {
      throw ModelingError("clique " + std::to_string(i + 1) + " must be sorted and unique");
    }
    for (int v : c) {
      if (v < 0 || static_cast<std::size_t>(v) >= program.n) {
        throw ModelingError("clique " + std::to_string(i + 1) + " has an invalid variable");
      }
      covered[v] = true;
    }
    if (!contains_all(c, program.terms[i].support())) {
      throw ModelingError("term " + std::to_string(i + 1) + " is not supported on its clique");
    }
  }
  for (std::size_t v = 0; v < program.n; ++v) {
    if (!covered[v]) {
      throw ModelingError("variable " + program.variable_name(v) + " is in no clique");
    }
  }
  std::vector<int> owner(program.constraints.size(), -1);
  for (std::size_t i = 0; i < N; ++i) {
    if (require_nonempty_assignment && pattern.assignment[i].empty()) {
      throw ModelingError("constraint group " + std::to_string(i + 1) + " is empty");
    }
    for (int j : pattern.assignment[i]) {
      if (j < 0 || static_cast<std::size_t>(j) >= program.constraints.size()) {
        throw ModelingError("constraint group refers to a missing constraint");
      }
      if (owner[j] >= 0) {
        throw ModelingError("constraint " + std::to_string(j + 1) + " assigned twice");
      }
      owner[j] = static_cast<int>(i);
      if (!contains_all(pattern.cliques[i], program.constraints[j].g.support())) {
        throw ModelingError("constraint " + std::to_string(j + 1) +
                            " is not supported on clique " + std::to_string(i + 1));
      }
    }
  }
  for (std::size_t j = 0; j < owner.size(); ++j) {
    if (owner[j] < 0) {
      throw ModelingError("constraint " + std::to_string(j + 1) + " is not assigned to a clique");
    }
  }
}

RipVerdict check_rip(const SparsityPattern& pattern) {
  std::vector<int> seen;
  for (std::size_t i = 0; i < pattern.cliques.size(); ++i) {
    const auto& clique = pattern.cliques[i];
    if (i > 0) {
      std::vector<int> shared;
      std::set_intersection(clique.begin(), clique.end(), seen.begin(), seen.end(),
                            std::back_inserter(shared));
      bool ok = false;
      for (std::size_t j = 0; j < i && !ok; ++j) ok = contains_all(pattern.cliques[j], shared);
      if (!ok) return {false, i};
    }
    seen = merge_sorted(seen, clique);
  }
  return {};
}

SparsityPattern infer_cliques(const RationalProgram& program) {
  program.validate();
  SparsityPattern pattern;
  const std::size_t N = program.terms.size();
  for (const auto& t : program.terms) {
    auto s = t.support();
    if (s.empty()) s.push_back(0);
    pattern.cliques.push_back(std::move(s));
  }
  pattern.assignment.assign(N, {});
  for (std::size_t j = 0; j < program.constraints.size(); ++j) {
    const auto s = program.constraints[j].g.support();
    std::size_t target = N;
    for (std::size_t i = 0; i < N && target == N; ++i) {
      if (contains_all(pattern.cliques[i], s)) target = i;
    }
    if (target == N) {
      std::size_t best = std::numeric_limits<std::size_t>::max();
      for (std::size_t i = 0; i < N; ++i) {
        const auto u = merge_sorted(pattern.cliques[i], s);
        if (u.size() < best) {
          best = u.size();
          target = i;
        }
      }
      pattern.cliques[target] = merge_sorted(pattern.cliques[target], s);
    }
    pattern.assignment[target].push_back(static_cast<int>(j));
  }
  // Variables used nowhere still have to be covered.
  std::vector<bool> covered(program.n, false);
  for (const auto& c : pattern.cliques) {
    for (int v : c) covered[v] = true;
  }
  for (std::size_t v = 0; v < program.n; ++v) {
    if (!covered[v]) pattern.cliques[0] = merge_sorted(pattern.cliques[0], {static_cast<int>(v)});
  }
  return pattern;
}

SparsityPattern assign_constraints(std::vector<std::vector<int>> cliques, const RationalProgram& program) {
  program.validate();
  if (cliques.size() != program.terms.size()) {
    throw ModelingError("expected one clique per term (" + std::to_string(program.terms.size()) + "), got " +
                        std::to_string(cliques.size()));
  }
  SparsityPattern pattern;
  for (auto& c : cliques) {
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
  }
  pattern.cliques = std::move(cliques);
  pattern.assignment.assign(pattern.cliques.size(), {});
  for (std::size_t j = 0; j < program.constraints.size(); ++j) {
    const auto s = program.constraints[j].g.support();
    std::size_t i = 0;
    while (i < pattern.cliques.size() && !contains_all(pattern.cliques[i], s)) ++i;
    if (i == pattern.cliques.size()) {
      throw ModelingError("constraint " + std::to_string(j + 1) + " fits no clique");
    }
    pattern.assignment[i].push_back(static_cast<int>(j));
  }
  validate_pattern(pattern, program);
  return pattern;
}

RationalProgram add_ball_constraints(const RationalProgram& program, double radius_squared,
                                     BallMode mode) {
  if (!(radius_squared > 0.0)) throw ModelingError("ball constraint needs M > 0");
  RationalProgram out = program;
  const std::size_t n = program.n;
  auto ball = [&](const std::vector<int>& vars) {
    Polynomial g = Polynomial::constant(n, radius_squared);
    for (int v : vars) g -= Polynomial::variable(n, v).pow(2);
    return ConstraintPoly{std::move(g), Relation::GreaterEqual, ConstraintOrigin::Ball};
  };
  if (mode == BallMode::Dense) {
    std::vector<int> all(n);
    for (std::size_t v = 0; v < n; ++v) all[v] = static_cast<int>(v);
    out.constraints.push_back(ball(all));
    if (out.pattern) {
      // Only valid for a pattern whose first clique is everything.
      out.pattern->assignment[0].push_back(static_cast<int>(out.constraints.size() - 1));
    }
    return out;
  }
  if (!program.pattern) throw ModelingError("per-clique ball constraints need a sparsity pattern");
  for (std::size_t i = 0; i < program.pattern->cliques.size(); ++i) {
    out.constraints.push_back(ball(program.pattern->cliques[i]));
    out.pattern->assignment[i].push_back(static_cast<int>(out.constraints.size() - 1));
  }
  return out;
}

DenominatorReport validate_denominators(const RationalProgram& program, std::size_t sample_count,
                                        const std::vector<Interval>& box, std::uint64_t seed) {
  program.validate();
  if (sample_count == 0) throw ModelingError("validate_denominators: sample_count must be >= 1");
  if (box.size() != program.n) throw ModelingError("validate_denominators: box dimension");
  for (const auto& b : box) {
    if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || b.lo > b.hi) {
      throw ModelingError("validate_denominators: box bounds must be finite and ordered");
    }
  }
  DenominatorReport report;
  report.min_sampled.assign(program.terms.size(), std::numeric_limits<double>::infinity());
  std::mt19937_64 rng(seed);
  std::vector<std::uniform_real_distribution<double>> dist;
  for (const auto& b : box) dist.emplace_back(b.lo, b.hi);
  std::vector<double> x(program.n);
  for (std::size_t s = 0; s < sample_count; ++s) {
    for (std::size_t j = 0; j < program.n; ++j) x[j] = dist[j](rng);
    bool feasible = true;
    for (const auto& c : program.constraints) {
      if (c.relation == Relation::GreaterEqual && c.g.evaluate(x) < 0.0) {
        feasible = false;
        break;
      }
    }
    if (!feasible) continue;
    ++report.feasible_samples;
    for (std::size_t i = 0; i < program.terms.size(); ++i) {
      report.min_sampled[i] =
          std::min(report.min_sampled[i], program.terms[i].denominator.evaluate(x));
    }
  }
  if (report.feasible_samples == 0) {
    report.verdict = DenominatorVerdict::Inconclusive;
    report.note = "no feasible sample found in the box";
    return report;
  }
  bool suspect = std::any_of(report.min_sampled.begin(), report.min_sampled.end(),
                             [](double v) { return v <= 0.0; });
  report.verdict = suspect ? DenominatorVerdict::Suspect : DenominatorVerdict::Ok;
  report.note = "sampling screen only; positivity on K is not certified";
  return report;
}

const char* to_string(DenominatorVerdict v) {
  switch (v) {
    case DenominatorVerdict::Ok: return "ok";
    case DenominatorVerdict::Suspect: return "suspect";
    case DenominatorVerdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

}  // namespace ratopt
