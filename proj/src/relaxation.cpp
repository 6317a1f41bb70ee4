#include "ratopt/relaxation.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "ratopt/error.hpp"

namespace ratopt {

const char* to_string(RelaxationKind kind) {
  switch (kind) {
    case RelaxationKind::Dense: return "dense";
    case RelaxationKind::Sparse: return "sparse";
    case RelaxationKind::Epigraph: return "epigraph";
  }
  return "?";
}

int MeasureInfo::basis_size(int t) const {
  if (t < 0) return 0;
  return static_cast<int>(binomial(dimension() + t, dimension()));
}

Monomial MeasureInfo::localize(const Monomial& global) const {
  std::vector<int> e(variables.size(), 0);
  int used = 0;
  for (std::size_t i = 0; i < variables.size(); ++i) {
    e[i] = global[variables[i]];
    used += e[i];
  }
  if (used != global.degree()) throw ModelingError("monomial leaves the measure's variables");
  return Monomial(std::move(e));
}

std::vector<double> SDPRelaxation::moments(const std::vector<double>& y, int measure) const {
  const auto& m = measures.at(measure);
  return {y.begin() + m.first_var, y.begin() + m.first_var + m.basis.size()};
}

std::vector<double> SDPRelaxation::to_original(const std::vector<double>& working_point) const {
  std::vector<double> x(working_point.begin(), working_point.begin() + original_dimension);
  return scaling ? scaling->to_original(x) : x;
}

namespace {

int ceil_half(int d) { return (d + 1) / 2; }

int constraint_offset(const ConstraintPoly& c) { return ceil_half(c.g.degree()); }

class RowBuilder {
 public:
  void add(int var, double c) { coeffs_[var] += c; }
  EqualityRow build(double rhs) const {
    EqualityRow row;
    for (const auto& [v, c] : coeffs_) {
      if (c != 0.0) row.coeffs.emplace_back(v, c);
    }
    row.rhs = rhs;
    return row;
  }

 private:
  std::map<int, double> coeffs_;
};

/// Accumulates L_{y_i}(x^alpha * poly) into `row` with the given sign.
void add_functional(RowBuilder& row, const MeasureInfo& m, const Monomial& alpha, const Polynomial& poly,
                    double sign) {
  for (const auto& [mono, c] : poly.terms()) row.add(m.var(alpha * mono), sign * c);
}

MeasureInfo make_measure(std::vector<int> variables, int k, int first_var) {
  MeasureInfo m;
  m.variables = std::move(variables);
  m.order = k;
  m.first_var = first_var;
  m.basis = monomials_up_to(m.variables.size(), 2 * k);
  m.index.reserve(m.basis.size());
  for (std::size_t i = 0; i < m.basis.size(); ++i) m.index.emplace(m.basis[i], static_cast<int>(i));
  return m;
}

class Assembler {
 public:
  explicit Assembler(SDPRelaxation& rel) : rel_(rel) {}

  void moment_block(int mi) {
    auto& m = rel_.measures[mi];
    const int s = m.basis_size(m.order);
    BlockBuilder bb(s);
    for (int a = 0; a < s; ++a) {
      for (int b = a; b < s; ++b) bb.add(m.var(m.basis[a] * m.basis[b]), a, b, 1.0);
    }
    m.moment_block = static_cast<int>(rel_.problem.blocks.size());
    push_block(bb.build(), {mi, -1, m.order});
  }

  void constraint(int mi, int j) {
    const auto& m = rel_.measures[mi];
    const auto& c = rel_.working.constraints[j];
    const Polynomial g = c.g.restrict_to(m.variables);
    const int t = m.order - constraint_offset(c);
    if (c.relation == Relation::Equal) {
      // Every multiplier the truncation can express: |alpha| + deg g <= 2k.
      const int cap = 2 * m.order - c.g.degree();
      for (const auto& alpha : m.basis) {
        if (alpha.degree() > cap) break;
        RowBuilder row;
        add_functional(row, m, alpha, g, 1.0);
        push_equality(row.build(0.0), {EqualityInfo::Kind::Localizing, mi, -1, j, global(m, alpha)});
      }
      return;
    }
    if (t < 0) return;
    const int s = m.basis_size(t);
    BlockBuilder bb(s);
    for (int a = 0; a < s; ++a) {
      for (int b = a; b < s; ++b) {
        const Monomial ab = m.basis[a] * m.basis[b];
        for (const auto& [mono, coef] : g.terms()) bb.add(m.var(ab * mono), a, b, coef);
      }
    }
    push_block(bb.build(), {mi, j, t});
  }

  void normalization(int mi) {
    const auto& m = rel_.measures[mi];
    RowBuilder row;
    add_functional(row, m, Monomial(m.dimension()), m.denominator, 1.0);
    push_equality(row.build(1.0), {EqualityInfo::Kind::Normalization, mi, -1, -1, {}});
  }

  /// L_{y_i}(x^alpha q_i) = L_{y_j}(x^alpha q_j); alpha given globally.
  void matching(int mi, int mj, const Monomial& alpha) {
    const auto& a = rel_.measures[mi];
    const auto& b = rel_.measures[mj];
    RowBuilder row;
    add_functional(row, a, a.localize(alpha), a.denominator, 1.0);
    add_functional(row, b, b.localize(alpha), b.denominator, -1.0);
    auto eq = row.build(0.0);
    if (eq.coeffs.empty()) return;
    push_equality(std::move(eq), {EqualityInfo::Kind::Matching, mi, mj, -1, alpha.exponents()});
  }

  void objective() {
    rel_.problem.objective.assign(rel_.problem.num_vars, 0.0);
    const double sign = rel_.negated ? -1.0 : 1.0;
    for (const auto& m : rel_.measures) {
      for (const auto& [mono, c] : m.numerator.terms()) rel_.problem.objective[m.var(mono)] += sign * c;
    }
  }

 private:
  std::vector<int> global(const MeasureInfo& m, const Monomial& local) const {
    std::vector<int> e(rel_.working.n, 0);
    for (std::size_t i = 0; i < m.variables.size(); ++i) e[m.variables[i]] = local[i];
    return e;
  }

  void push_block(Block b, BlockInfo info) {
    rel_.problem.blocks.push_back(std::move(b));
    rel_.blocks.push_back(info);
  }

  void push_equality(EqualityRow row, EqualityInfo info) {
    rel_.problem.equalities.push_back(std::move(row));
    rel_.equalities.push_back(std::move(info));
  }

  SDPRelaxation& rel_;
};

SDPRelaxation prepare(const RationalProgram& program, int k, RelaxationKind kind) {
  program.validate();
  SDPRelaxation rel;
  rel.kind = kind;
  rel.order = k;
  rel.negated = program.sense == Sense::Maximize;
  rel.scaling = program.scaling;
  rel.working = scaled_program(program);
  rel.target = rel.working;
  rel.original_dimension = program.n;
  const int kmin = min_order(rel.working);
  if (k < kmin) {
    throw OrderError("relaxation order " + std::to_string(k) + " is below the minimum " +
                     std::to_string(kmin));
  }
  return rel;
}

}  // namespace

int min_order(const RationalProgram& program) {
  int d = 0;
  for (const auto& t : program.terms) d = std::max({d, t.numerator.degree(), t.denominator.degree()});
  for (const auto& c : program.constraints) d = std::max(d, c.g.degree());
  return std::max(ceil_half(d), 0);
}

int order_for_match_degree(const RationalProgram& program, int match_degree) {
  int dq = 0;
  for (const auto& t : program.terms) dq = std::max(dq, t.denominator.degree());
  return std::max(min_order(program), ceil_half(match_degree + dq));
}

RationalProgram scaled_program(const RationalProgram& program) {
  if (!program.scaling) return program;
  const auto& s = *program.scaling;
  if (s.dimension() != program.n) throw ModelingError("scaling dimension does not match the program");
  RationalProgram out = program;
  out.scaling.reset();
  for (auto& t : out.terms) {
    t = RationalTerm(apply_scaling(t.numerator, s), apply_scaling(t.denominator, s));
  }
  for (auto& c : out.constraints) c.g = apply_scaling(c.g, s);
  return out;
}

SDPRelaxation build_dense(const RationalProgram& program, int k, const RelaxOptions& options) {
  auto rel = prepare(program, k, RelaxationKind::Dense);
  const auto& w = rel.working;

  // Terms sharing a denominator share a measure; measures sorted by u_i.
  std::vector<std::vector<int>> groups;
  for (std::size_t i = 0; i < w.terms.size(); ++i) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const std::vector<int>& g) {
      return w.terms[g.front()].denominator == w.terms[i].denominator;
    });
    if (it == groups.end()) {
      groups.push_back({static_cast<int>(i)});
    } else {
      it->push_back(static_cast<int>(i));
    }
  }
  std::stable_sort(groups.begin(), groups.end(), [&](const auto& a, const auto& b) {
    return ceil_half(w.terms[a.front()].denominator.degree()) <
           ceil_half(w.terms[b.front()].denominator.degree());
  });

  std::vector<int> all(w.n);
  std::iota(all.begin(), all.end(), 0);
  int r_max = 0;
  for (const auto& c : w.constraints) r_max = std::max(r_max, constraint_offset(c));
  int next = 0;
  for (const auto& g : groups) {
    auto m = make_measure(all, k, next);
    next += static_cast<int>(m.basis.size());
    m.terms = g;
    m.denominator = w.terms[g.front()].denominator;
    m.numerator = Polynomial(w.n);
    for (int i : g) m.numerator += w.terms[i].numerator;
    m.offset = std::max(ceil_half(m.denominator.degree()), r_max);
    m.constraints.resize(w.constraints.size());
    std::iota(m.constraints.begin(), m.constraints.end(), 0);
    rel.measures.push_back(std::move(m));
  }
  rel.problem.num_vars = next;

  Assembler as(rel);
  for (std::size_t i = 0; i < rel.measures.size(); ++i) {
    as.moment_block(static_cast<int>(i));
    for (int j : rel.measures[i].constraints) as.constraint(static_cast<int>(i), j);
  }
  as.normalization(0);
  for (std::size_t i = 1; i < rel.measures.size(); ++i) {
    const auto& m = rel.measures[i];
    int cap = 2 * (k - ceil_half(m.denominator.degree()));
    if (options.match_degree) cap = std::min(cap, *options.match_degree);
    for (const auto& alpha : m.basis) {
      if (alpha.degree() > cap) break;
      as.matching(static_cast<int>(i), 0, alpha);
    }
  }
  as.objective();
  return rel;
}

SDPRelaxation build_sparse(const RationalProgram& program, const SparsityPattern& pattern, int k,
                           const RelaxOptions& options) {
  auto rel = prepare(program, k, RelaxationKind::Sparse);
  const auto& w = rel.working;
  if (pattern.size() != w.terms.size()) throw ModelingError("pattern needs one clique per term");
  validate_pattern(pattern, w);
  const auto rip = check_rip(pattern);
  if (!rip.holds) {
    rel.warnings.push_back("running intersection property fails at clique " +
                           std::to_string(*rip.witness + 1) + "; no convergence guarantee");
  }

  int next = 0;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    auto vars = pattern.cliques[i];
    std::sort(vars.begin(), vars.end());
    auto m = make_measure(vars, k, next);
    next += static_cast<int>(m.basis.size());
    m.terms = {static_cast<int>(i)};
    m.numerator = w.terms[i].numerator.restrict_to(vars);
    m.denominator = w.terms[i].denominator.restrict_to(vars);
    m.constraints = pattern.assignment[i];
    int v = 0;
    for (int j : m.constraints) v = std::max(v, constraint_offset(w.constraints[j]));
    m.offset = v;
    rel.measures.push_back(std::move(m));
  }
  rel.problem.num_vars = next;

  Assembler as(rel);
  for (std::size_t i = 0; i < rel.measures.size(); ++i) {
    as.moment_block(static_cast<int>(i));
    for (int j : rel.measures[i].constraints) as.constraint(static_cast<int>(i), j);
  }
  for (std::size_t i = 0; i < rel.measures.size(); ++i) as.normalization(static_cast<int>(i));
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    for (int j : pattern.overlaps(i)) {
      const auto shared = pattern.intersection(i, j);
      int cap = 2 * k - std::max(rel.measures[i].denominator.degree(), rel.measures[j].denominator.degree());
      if (options.match_degree) cap = std::min(cap, *options.match_degree);
      if (cap < 0) continue;
      for (const auto& local : monomials_up_to(shared.size(), cap)) {
        std::vector<int> e(w.n, 0);
        for (std::size_t s = 0; s < shared.size(); ++s) e[shared[s]] = local[s];
        as.matching(static_cast<int>(i), j, Monomial(std::move(e)));
      }
    }
  }
  as.objective();
  return rel;
}

RationalProgram lift_epigraph(const RationalProgram& program, EpigraphMode mode,
                              const std::vector<Interval>& r_bounds) {
  program.validate();
  const std::size_t n = program.n;
  const std::size_t N = program.terms.size();
  if (r_bounds.empty()) throw ModelingError("epigraph lifting needs bounds on the lifting variables");
  if (r_bounds.size() != 1 && r_bounds.size() != N) {
    throw ModelingError("lifting bounds must be one interval or one per term");
  }
  const RationalProgram base = scaled_program(program);
  const std::size_t dim = n + N;
  std::vector<int> xs(n);
  std::iota(xs.begin(), xs.end(), 0);

  RationalProgram lifted;
  lifted.n = dim;
  lifted.sense = program.sense;
  lifted.variable_names = program.variable_names;
  lifted.variable_names.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (lifted.variable_names[j].empty()) lifted.variable_names[j] = program.variable_name(j);
  }
  for (const auto& c : base.constraints) lifted.constraints.push_back({c.g.embed(dim, xs), c.relation, c.origin});

  std::optional<SparsityPattern> pattern;
  if (base.pattern) {
    pattern = SparsityPattern{};
    for (std::size_t i = 0; i < N; ++i) {
      auto clique = base.pattern->cliques[i];
      clique.push_back(static_cast<int>(n + i));
      pattern->cliques.push_back(std::move(clique));
      pattern->assignment.push_back(base.pattern->assignment[i]);
    }
  }
  for (std::size_t i = 0; i < N; ++i) {
    const auto& t = base.terms[i];
    const Interval box = r_bounds.size() == 1 ? r_bounds[0] : r_bounds[i];
    if (!(box.lo < box.hi)) throw ModelingError("lifting interval must satisfy lo < hi");
    const Polynomial r = Polynomial::variable(dim, n + i);
    lifted.variable_names.push_back("r" + std::to_string(i + 1));
    lifted.terms.emplace_back(r, Polynomial::constant(dim, 1.0));
    // r >= p/q when minimizing, r <= p/q when maximizing (q > 0 on K).
    Polynomial link = r * t.denominator.embed(dim, xs) - t.numerator.embed(dim, xs);
    if (program.sense == Sense::Maximize) link = -link;
    const Relation rel = mode == EpigraphMode::Equality ? Relation::Equal : Relation::GreaterEqual;
    const Polynomial lo = Polynomial::constant(dim, box.lo);
    const Polynomial hi = Polynomial::constant(dim, box.hi);
    if (pattern) {
      pattern->assignment[i].push_back(static_cast<int>(lifted.constraints.size()));
      pattern->assignment[i].push_back(static_cast<int>(lifted.constraints.size() + 1));
    }
    lifted.constraints.push_back({std::move(link), rel, ConstraintOrigin::EpigraphBound});
    lifted.constraints.push_back({(r - lo) * (hi - r), Relation::GreaterEqual, ConstraintOrigin::EpigraphBound});
  }
  lifted.pattern = std::move(pattern);
  return lifted;
}

SDPRelaxation build_epigraph(const RationalProgram& program, int k, EpigraphMode mode,
                             const std::vector<Interval>& r_bounds, const RelaxOptions& options) {
  const RationalProgram lifted = lift_epigraph(program, mode, r_bounds);
  SDPRelaxation rel = lifted.pattern ? build_sparse(lifted, *lifted.pattern, k, options)
                                     : build_dense(lifted, k, options);
  rel.kind = RelaxationKind::Epigraph;
  rel.target = scaled_program(program);
  rel.original_dimension = program.n;
  rel.scaling = program.scaling;
  return rel;
}

}  // namespace ratopt
