#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "ratopt/error.hpp"
#include "ratopt/program.hpp"

using namespace ratopt;

namespace {

Polynomial X(std::size_t n, std::size_t j) { return Polynomial::variable(n, j); }
Polynomial C(std::size_t n, double v) { return Polynomial::constant(n, v); }

SparsityPattern cliques_only(std::vector<std::vector<int>> cliques) {
  SparsityPattern p;
  p.assignment.assign(cliques.size(), {});
  p.cliques = std::move(cliques);
  return p;
}

// Definition taken literally: for each i >= 2 try every j < i.
std::optional<std::size_t> brute_rip(const std::vector<std::set<int>>& cliques) {
  for (std::size_t i = 1; i < cliques.size(); ++i) {
    std::set<int> before;
    for (std::size_t k = 0; k < i; ++k) before.insert(cliques[k].begin(), cliques[k].end());
    std::set<int> shared;
    for (int v : cliques[i]) {
      if (before.count(v)) shared.insert(v);
    }
    bool found = false;
    for (std::size_t j = 0; j < i; ++j) {
      if (std::includes(cliques[j].begin(), cliques[j].end(), shared.begin(), shared.end())) found = true;
    }
    if (!found) return i;
  }
  return std::nullopt;
}

RationalProgram sparse4() {
  const std::size_t n = 4;
  RationalProgram p;
  p.n = n;
  p.terms.emplace_back(X(n, 0) * X(n, 1), C(n, 1));
  p.terms.emplace_back(X(n, 0) * X(n, 2), C(n, 1));
  p.terms.emplace_back(X(n, 0) * X(n, 3), C(n, 1));
  for (int i = 1; i <= 3; ++i) p.constraints.push_back({C(n, i) - X(n, 0) * X(n, 0) - X(n, i) * X(n, i)});
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
  return p;
}

}  // namespace

TEST_CASE("running intersection examples") {
  CHECK(check_rip(cliques_only({{0, 1}, {0, 2}, {0, 3}})).holds);
  CHECK(check_rip(cliques_only({{0, 1, 2, 3}})).holds);
  const auto v = check_rip(cliques_only({{0, 1}, {2, 3}, {1, 2}}));
  CHECK_FALSE(v.holds);
  REQUIRE(v.witness);
  CHECK(*v.witness == 2);  // 0-based: the third clique
}

TEST_CASE("running intersection agrees with brute force on random patterns") {
  std::mt19937_64 rng(21);
  int failures = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 7);
    const int N = 1 + static_cast<int>(rng() % 6);
    std::vector<std::vector<int>> cliques;
    std::vector<std::set<int>> sets;
    for (int i = 0; i < N; ++i) {
      std::set<int> s;
      while (s.empty()) {
        for (int v = 0; v < n; ++v) {
          if (rng() % 3 == 0) s.insert(v);
        }
      }
      sets.push_back(s);
      cliques.emplace_back(s.begin(), s.end());
    }
    const auto verdict = check_rip(cliques_only(cliques));
    const auto expect = brute_rip(sets);
    CHECK(verdict.holds == !expect.has_value());
    if (expect) {
      ++failures;
      REQUIRE(verdict.witness);
      CHECK(*verdict.witness == *expect);
    }
  }
  // Both outcomes must actually be exercised.
  CHECK(failures > 20);
  CHECK(failures < 180);
}

TEST_CASE("infer_cliques examples") {
  const auto r = infer_cliques(rosenbrock(4));
  CHECK(r.cliques == std::vector<std::vector<int>>{{0, 1}, {1, 2}, {2, 3}});

  RationalProgram single;
  single.n = 3;
  single.terms.emplace_back(X(3, 0) * X(3, 1) * X(3, 2), C(3, 1));
  CHECK(infer_cliques(single).cliques == std::vector<std::vector<int>>{{0, 1, 2}});

  const auto s = infer_cliques(sparse4());
  CHECK(s.cliques == std::vector<std::vector<int>>{{0, 1}, {0, 2}, {0, 3}});
  CHECK(s.assignment == std::vector<std::vector<int>>{{0}, {1}, {2}});

  RationalProgram constant_term;
  constant_term.n = 2;
  constant_term.terms.emplace_back(C(2, 5), C(2, 1));
  constant_term.terms.emplace_back(X(2, 1), C(2, 1));
  CHECK(infer_cliques(constant_term).cliques.front() == std::vector<int>{0});
}

TEST_CASE("infer_cliques output is structurally valid") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 6;
    RationalProgram p;
    p.n = n;
    const int N = 1 + static_cast<int>(rng() % 5);
    for (int i = 0; i < N; ++i) {
      Polynomial num = C(n, 1);
      for (std::size_t v = 0; v < n; ++v) {
        if (rng() % 3 == 0) num = num * X(n, v);
      }
      const auto v = rng() % n;
      p.terms.emplace_back(num, C(n, 1) + X(n, v) * X(n, v));
    }
    const int m = static_cast<int>(rng() % 4);
    for (int j = 0; j < m; ++j) {
      Polynomial g = C(n, 1);
      for (std::size_t v = 0; v < n; ++v) {
        if (rng() % 4 == 0) g -= X(n, v) * X(n, v);
      }
      p.constraints.push_back({g});
    }
    const auto pattern = infer_cliques(p);
    CHECK_NOTHROW(validate_pattern(pattern, p));
  }
}

TEST_CASE("ball augmentation") {
  RationalProgram p;
  p.n = 2;
  p.terms.emplace_back(X(2, 0), C(2, 1));
  const auto d = add_ball_constraints(p, 4.0, BallMode::Dense);
  REQUIRE(d.constraints.size() == 1);
  CHECK(d.constraints[0].g == C(2, 4) - X(2, 0) * X(2, 0) - X(2, 1) * X(2, 1));
  CHECK(d.constraints[0].origin == ConstraintOrigin::Ball);

  auto s = sparse4();
  s.pattern = infer_cliques(s);
  const auto b = add_ball_constraints(s, 3.0, BallMode::PerClique);
  REQUIRE(b.constraints.size() == 6);
  for (int i = 0; i < 3; ++i) {
    CHECK(b.constraints[i].g == s.constraints[i].g);
    const auto& g = b.constraints[3 + i];
    CHECK(g.g == C(4, 3) - X(4, 0) * X(4, 0) - X(4, i + 1) * X(4, i + 1));
    CHECK(g.g.degree() == 2);
    CHECK(std::count(b.pattern->assignment[i].begin(), b.pattern->assignment[i].end(), 3 + i) == 1);
  }
  CHECK_NOTHROW(validate_pattern(*b.pattern, b, true));
  CHECK_THROWS_AS(add_ball_constraints(sparse4(), 3.0, BallMode::PerClique), ModelingError);
}

TEST_CASE("denominator screen") {
  RationalProgram p;
  p.n = 1;
  p.terms.emplace_back(C(1, 1), X(1, 0) * X(1, 0) + C(1, 1));
  CHECK(validate_denominators(p, 200, {{-1, 1}}).verdict == DenominatorVerdict::Ok);

  RationalProgram q;
  q.n = 1;
  q.terms.emplace_back(C(1, 1), X(1, 0));
  CHECK(validate_denominators(q, 200, {{-1, 1}}).verdict == DenominatorVerdict::Suspect);

  RationalProgram w;
  w.n = 1;
  for (int i = 1; i <= 20; ++i) w.terms.emplace_back(C(1, 1), X(1, 0) * X(1, 0) + C(1, i));
  const auto r = validate_denominators(w, 500, {{-5, 5}});
  CHECK(r.verdict == DenominatorVerdict::Ok);
  for (int i = 1; i <= 20; ++i) CHECK(r.min_sampled[i - 1] >= i);

  RationalProgram empty = p;
  empty.constraints.push_back({C(1, -1)});
  CHECK(validate_denominators(empty, 50, {{-1, 1}}).verdict == DenominatorVerdict::Inconclusive);
}

TEST_CASE("denominator screen never passes a sampled nonpositive value") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    RationalProgram p;
    p.n = 1;
    const double c = U(rng);
    p.terms.emplace_back(C(1, 1), X(1, 0) + C(1, c));
    const auto r = validate_denominators(p, 100, {{-1, 1}}, rng());
    if (r.min_sampled[0] <= 0.0) CHECK(r.verdict == DenominatorVerdict::Suspect);
    else CHECK(r.verdict == DenominatorVerdict::Ok);
  }
}

TEST_CASE("user cliques assign constraints to the first fitting clique") {
  auto p = sparse4();
  const auto pat = assign_constraints({{0, 1}, {0, 2}, {0, 3}}, p);
  CHECK(pat.assignment == std::vector<std::vector<int>>{{0}, {1}, {2}});
  p.constraints.push_back({C(4, 1) - X(4, 0) * X(4, 0)});
  CHECK(assign_constraints({{0, 1}, {0, 2}, {0, 3}}, p).assignment[0] == std::vector<int>{0, 3});
  p.constraints.push_back({C(4, 1) - X(4, 1) * X(4, 2)});
  CHECK_THROWS_AS(assign_constraints({{0, 1}, {0, 2}, {0, 3}}, p), ModelingError);
}
