#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "ratopt/hierarchy.hpp"
#include "ratopt/problem_file.hpp"
#include "ratopt/relaxation.hpp"
#include "ratopt/solver.hpp"

using namespace ratopt;

namespace {

Polynomial X(std::size_t n, std::size_t j) { return Polynomial::variable(n, j); }
Polynomial C(std::size_t n, double v) { return Polynomial::constant(n, v); }

ProblemFile load(const std::string& name) {
  std::ifstream in(std::string(RATOPT_PROBLEMS_DIR) + "/" + name);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_problem(ss.str());
}

RationalProgram two_term(std::optional<double> box = std::nullopt) {
  auto file = load("bounds.rp");
  RunSettings s;
  if (box) s.bounds.push_back({0, -*box, *box});
  return prepare_program(file, s);
}

RationalProgram sparse4() {
  auto file = load("sparse4.rp");
  auto p = file.program();
  p.pattern = assign_constraints(file.cliques, p);
  return p;
}

RationalProgram rosenbrock(std::size_t n) {
  RationalProgram p;
  p.n = n;
  p.sense = Sense::Maximize;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto d = X(n, i + 1) - X(n, i) * X(n, i);
    const auto e = X(n, i) - C(n, 1);
    p.terms.emplace_back(C(n, 1), 100.0 * d * d + e * e + C(n, 1));
  }
  for (std::size_t j = 0; j < n; ++j) p.constraints.push_back({C(n, 16) - X(n, j) * X(n, j)});
  return p;
}

double solve_bound(const SDPRelaxation& rel) {
  const auto s = solve(rel.problem);
  REQUIRE(s.status == SolveStatus::Optimal);
  return rel.bound(s.objective);
}

std::vector<int> sizes(const SDPRelaxation& rel) {
  std::vector<int> out;
  for (const auto& b : rel.problem.blocks) out.push_back(b.size);
  return out;
}

int count(const SDPRelaxation& rel, EqualityInfo::Kind kind) {
  int c = 0;
  for (const auto& e : rel.equalities) c += e.kind == kind;
  return c;
}

// min over the feasible set of x1(x2 + x3 + x4): each xi, i >= 2, sits at
// -sign(x1) sqrt(i - x1^2), leaving a one-dimensional search.
double sparse4_oracle() {
  double best = 0.0;
  for (int s = 0; s <= 200000; ++s) {
    const double t = static_cast<double>(s) / 200000.0;
    const double v = -t * (std::sqrt(1 - t * t) + std::sqrt(2 - t * t) + std::sqrt(3 - t * t));
    best = std::min(best, v);
  }
  return best;
}

// Each block entry rebuilt from the moment vector: sum_gamma g_gamma y(beta + beta' + gamma).
void check_entry_law(const SDPRelaxation& rel, std::mt19937_64& rng) {
  std::normal_distribution<double> N;
  std::vector<double> y(rel.problem.num_vars);
  for (auto& v : y) v = N(rng);
  for (std::size_t b = 0; b < rel.blocks.size(); ++b) {
    const auto& info = rel.blocks[b];
    const auto& m = rel.measures[info.measure];
    const int s = m.basis_size(info.order);
    REQUIRE(rel.problem.blocks[b].size == s);
    Polynomial g = C(m.dimension(), 1);
    if (info.constraint >= 0) g = rel.working.constraints[info.constraint].g.restrict_to(m.variables);
    const auto A = evaluate_block(rel.problem.blocks[b], y);
    for (int i = 0; i < s; ++i) {
      for (int j = 0; j < s; ++j) {
        double expect = 0.0;
        for (const auto& [mono, c] : g.terms()) expect += c * y[m.var(m.basis[i] * m.basis[j] * mono)];
        CHECK(A[i * s + j] == doctest::Approx(expect).epsilon(1e-12));
        CHECK(A[i * s + j] == A[j * s + i]);
      }
    }
  }
}

}  // namespace

TEST_CASE("min_order examples") {
  CHECK(min_order(load("wilkinson.rp").program()) == 1);
  CHECK(min_order(load("ratex.rp").program()) == 4);
  CHECK(min_order(sparse4()) == 1);
  CHECK(min_order(two_term()) == 1);
}

TEST_CASE("block structure examples") {
  const auto d = build_dense(sparse4(), 2);
  CHECK(sizes(d) == std::vector<int>{15, 5, 5, 5});

  const auto t = build_dense(two_term(), 1);
  CHECK(sizes(t) == std::vector<int>{2, 2});
  CHECK(t.problem.equalities.size() == 2);
  CHECK(count(t, EqualityInfo::Kind::Normalization) == 1);
  CHECK(count(t, EqualityInfo::Kind::Matching) == 1);

  const auto w = build_dense(load("wilkinson.rp").program(), 1);
  CHECK(w.problem.blocks.size() == 20);
  CHECK(w.problem.equalities.size() == 20);
  CHECK(w.negated);

  const auto p = sparse4();
  const auto s = build_sparse(p, *p.pattern, 2);
  CHECK(sizes(s) == std::vector<int>{6, 3, 6, 3, 6, 3});
  CHECK(count(s, EqualityInfo::Kind::Normalization) == 3);
}

TEST_CASE("a single clique reproduces the dense relaxation") {
  RationalProgram p = two_term(2.0);
  p.terms.erase(p.terms.begin() + 1, p.terms.end());
  SparsityPattern one;
  one.cliques = {{0}};
  one.assignment = {{0}};
  for (int k = 1; k <= 3; ++k) {
    const auto d = build_dense(p, k);
    const auto s = build_sparse(p, one, k);
    CHECK(sizes(d) == sizes(s));
    CHECK(d.problem.num_vars == s.problem.num_vars);
    CHECK(solve_bound(d) == doctest::Approx(solve_bound(s)).epsilon(1e-6));
  }
}

TEST_CASE("match degree zero links chained cliques once per overlap") {
  auto p = rosenbrock(3);
  p.pattern = infer_cliques(p);
  const int k = min_order(p) + 1;
  const auto rel = build_sparse(p, *p.pattern, k, {.match_degree = 0});
  CHECK(count(rel, EqualityInfo::Kind::Matching) == 1);
  for (const auto& e : rel.equalities) {
    if (e.kind == EqualityInfo::Kind::Matching) {
      for (int a : e.alpha) CHECK(a == 0);
    }
  }
  // Overlap {x2}, deg q = 4, 2k = 6: alpha in {1, x2, x2^2}.
  CHECK(count(build_sparse(p, *p.pattern, k), EqualityInfo::Kind::Matching) == 3);
  CHECK(count(build_sparse(p, *p.pattern, k - 1), EqualityInfo::Kind::Matching) == 1);
}

TEST_CASE("epigraph of a single term") {
  // x^2 / (1 + x^2) on [-1, 1]: minimum 0 at x = 0.
  RationalProgram p;
  p.n = 1;
  p.terms.emplace_back(X(1, 0) * X(1, 0), C(1, 1) + X(1, 0) * X(1, 0));
  p.constraints.push_back({C(1, 1) - X(1, 0) * X(1, 0)});
  for (auto mode : {EpigraphMode::Inequality, EpigraphMode::Equality}) {
    const auto lifted = lift_epigraph(p, mode, {{0.0, 1.0}});
    CHECK(lifted.n == 2);
    const auto rel = build_epigraph(p, 2, mode, {{0.0, 1.0}});
    CHECK(rel.kind == RelaxationKind::Epigraph);
    CHECK(solve_bound(rel) == doctest::Approx(0.0).epsilon(1e-5).scale(1.0));
  }
}

TEST_CASE("blocks follow the moment and localizing entry law") {
  std::mt19937_64 rng(31);
  check_entry_law(build_dense(sparse4(), 2), rng);
  const auto p = sparse4();
  check_entry_law(build_sparse(p, *p.pattern, 2), rng);
  check_entry_law(build_dense(two_term(3.0), 3), rng);
  auto r = rosenbrock(4);
  r.pattern = infer_cliques(r);
  check_entry_law(build_sparse(r, *r.pattern, 2), rng);
  RationalProgram e;
  e.n = 1;
  e.terms.emplace_back(X(1, 0), C(1, 2) + X(1, 0) * X(1, 0));
  e.constraints.push_back({C(1, 1) - X(1, 0) * X(1, 0)});
  check_entry_law(build_epigraph(e, 2, EpigraphMode::Equality, {{-1.0, 1.0}}), rng);
}

TEST_CASE("relaxation bounds never exceed sampled feasible values") {
  std::mt19937_64 rng(32);
  const auto p = two_term(2.0);
  const auto q = sparse4();
  std::vector<double> two_bounds, dense4, sparse4_bounds;
  for (int k = 1; k <= 3; ++k) {
    two_bounds.push_back(solve_bound(build_dense(p, k)));
    dense4.push_back(solve_bound(build_dense(q, k)));
    sparse4_bounds.push_back(solve_bound(build_sparse(q, *q.pattern, k)));
  }
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int s = 0; s < 50; ++s) {
    const double x = 2.0 * U(rng);
    const double fx = p.objective(std::vector<double>{x});
    for (double b : two_bounds) CHECK(b <= fx + 1e-6);

    // Rejection-sample the sparse4 feasible set.
    std::vector<double> z(4);
    do {
      for (auto& v : z) v = 1.8 * U(rng);
    } while (1 - z[0] * z[0] - z[1] * z[1] < 0 || 2 - z[0] * z[0] - z[2] * z[2] < 0 ||
             3 - z[0] * z[0] - z[3] * z[3] < 0);
    const double fz = q.objective(z);
    for (double b : dense4) CHECK(b <= fz + 1e-6);
    for (double b : sparse4_bounds) CHECK(b <= fz + 1e-6);
  }
}

TEST_CASE("bounds are monotone in the order") {
  const auto p = two_term(2.0);
  double prev = -1e300;
  for (int k = 1; k <= 5; ++k) {
    const double b = solve_bound(build_dense(p, k));
    CHECK(b >= prev - 1e-6);
    prev = b;
  }
  // Maximization: upper bounds decrease.
  const auto w = load("wilkinson.rp").program();
  double up = 1e300;
  for (int k = 1; k <= 3; ++k) {
    const double b = solve_bound(build_dense(w, k));
    CHECK(b <= up + 1e-6);
    up = b;
  }
}

TEST_CASE("dense and sparse agree with the sparse4 optimum") {
  const double opt = sparse4_oracle();
  const auto p = sparse4();
  const double d = solve_bound(build_dense(p, 2));
  const double s = solve_bound(build_sparse(p, *p.pattern, 2));
  CHECK(d <= opt + 1e-6);
  CHECK(s <= opt + 1e-6);
  CHECK(d == doctest::Approx(opt).epsilon(1e-5));
  CHECK(s == doctest::Approx(opt).epsilon(1e-5));
}
