#include <doctest.h>

#include <random>

#include <Eigen/Eigenvalues>

#include "ratopt/schur.hpp"
#include "ratopt/solver.hpp"

using namespace ratopt;

namespace {

Eigen::MatrixXd random_spd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> N;
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = N(rng);
  return g * g.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
}

// min t  s.t.  t I - A >= 0  (value lambda_max(A)).
SDPProblem lambda_max_problem(const Eigen::MatrixXd& A) {
  const int n = static_cast<int>(A.rows());
  BlockBuilder bb(n);
  for (int i = 0; i < n; ++i) {
    bb.add(0, i, i, 1.0);
    for (int j = i; j < n; ++j) bb.add(-1, i, j, -A(i, j));
  }
  SDPProblem p;
  p.num_vars = 1;
  p.objective = {1.0};
  p.blocks.push_back(bb.build());
  return p;
}

}  // namespace

TEST_CASE("two by two block") {
  BlockBuilder bb(2);
  bb.add(-1, 0, 0, 1.0);
  bb.add(-1, 1, 1, 1.0);
  bb.add(0, 0, 1, 1.0);
  SDPProblem p;
  p.num_vars = 1;
  p.objective = {1.0};
  p.blocks.push_back(bb.build());
  const auto s = solve(p);
  CHECK(s.status == SolveStatus::Optimal);
  CHECK(s.objective == doctest::Approx(-1.0).epsilon(1e-7));
}

TEST_CASE("diagonal lower bounds") {
  BlockBuilder bb(2, true);
  bb.add(0, 0, 0, 1.0);
  bb.add(-1, 0, 0, -1.0);
  bb.add(1, 1, 1, 1.0);
  bb.add(-1, 1, 1, -2.0);
  SDPProblem p;
  p.num_vars = 2;
  p.objective = {1.0, 1.0};
  p.blocks.push_back(bb.build());
  const auto s = solve(p);
  CHECK(s.status == SolveStatus::Optimal);
  CHECK(s.objective == doctest::Approx(3.0).epsilon(1e-7));
  CHECK(s.y[0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("equalities including a dependent row") {
  // [[y1, 1], [1, y2]] >= 0, y1 = y2 (stated twice): min y1 + y2 = 2.
  BlockBuilder bb(2);
  bb.add(0, 0, 0, 1.0);
  bb.add(1, 1, 1, 1.0);
  bb.add(-1, 0, 1, 1.0);
  SDPProblem p;
  p.num_vars = 2;
  p.objective = {1.0, 1.0};
  p.blocks.push_back(bb.build());
  p.equalities.push_back({{{0, 1.0}, {1, -1.0}}, 0.0});
  p.equalities.push_back({{{0, -2.0}, {1, 2.0}}, 0.0});
  CHECK(independent_equalities(p) == std::vector<int>{0});
  const auto s = solve(p);
  CHECK(s.status == SolveStatus::Optimal);
  CHECK(s.dropped_equalities == 1);
  CHECK(s.objective == doctest::Approx(2.0).epsilon(1e-7));
}

TEST_CASE("independent_equalities keeps a basis") {
  SDPProblem p;
  p.num_vars = 4;
  p.objective.assign(4, 0.0);
  p.equalities.push_back({{{0, 1.0}, {1, 1.0}}, 1.0});
  p.equalities.push_back({{{1, 1.0}, {2, 1.0}}, 1.0});
  p.equalities.push_back({{{0, 1.0}, {2, -1.0}}, 0.0});  // row0 - row1
  p.equalities.push_back({{{3, 1.0}}, 0.0});
  CHECK(independent_equalities(p) == std::vector<int>{0, 1, 3});
}

TEST_CASE("extreme eigenvalues of random matrices") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> N;
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 3 + trial;
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) A(i, j) = A(j, i) = N(rng);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    const auto s = solve(lambda_max_problem(A));
    CHECK(s.status == SolveStatus::Optimal);
    CHECK(s.objective == doctest::Approx(es.eigenvalues().maxCoeff()).epsilon(1e-7));
    CHECK(s.block_min_eigenvalue[0] > -1e-7);
  }
}

TEST_CASE("infeasible and unbounded detection") {
  SUBCASE("y >= 1 and y = 0") {
    BlockBuilder bb(1, true);
    bb.add(0, 0, 0, 1.0);
    bb.add(-1, 0, 0, -1.0);
    SDPProblem p;
    p.num_vars = 1;
    p.objective = {1.0};
    p.blocks.push_back(bb.build());
    p.equalities.push_back({{{0, 1.0}}, 0.0});
    CHECK(solve(p).status == SolveStatus::Infeasible);
  }
  SUBCASE("min -y with y >= 0") {
    BlockBuilder bb(1, true);
    bb.add(0, 0, 0, 1.0);
    SDPProblem p;
    p.num_vars = 1;
    p.objective = {-1.0};
    p.blocks.push_back(bb.build());
    CHECK(solve(p).status == SolveStatus::Unbounded);
  }
}

TEST_CASE("parallel Schur assembly matches the serial reference") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> N;
  std::bernoulli_distribution keep(0.3);
  SDPProblem p;
  p.num_vars = 12;
  p.objective.assign(12, 0.0);
  for (int b = 0; b < 3; ++b) {
    const int size = 4 + 2 * b;
    BlockBuilder bb(size);
    for (int a = 4 * b; a < 4 * b + 6 && a < 12; ++a) {
      for (int i = 0; i < size; ++i)
        for (int j = i; j < size; ++j)
          if (keep(rng)) bb.add(a, i, j, N(rng));
    }
    p.blocks.push_back(bb.build());
  }
  const auto layout = SchurLayout::from_problem(p);
  const auto data = SchurBlockData::from_problem(p);
  std::vector<Eigen::MatrixXd> X, Sinv;
  for (const auto& b : p.blocks) {
    X.push_back(random_spd(b.size, rng));
    Sinv.push_back(random_spd(b.size, rng));
  }
  auto zeros = [&] {
    std::vector<Eigen::MatrixXd> H;
    for (const auto& m : layout.members) H.push_back(Eigen::MatrixXd::Zero(m.size(), m.size()));
    return H;
  };
  auto H = zeros(), Href = zeros();
  assemble_schur(data, layout, X, Sinv, H);
  assemble_schur_reference(p, layout, X, Sinv, Href);
  for (std::size_t c = 0; c < H.size(); ++c) {
    CHECK((H[c] - Href[c]).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + Href[c].cwiseAbs().maxCoeff()));
  }
}

namespace {

// Strictly feasible on both sides by construction: A(y0) = S0 > 0, B y0 = b,
// and c = A^*(X0) + B^T lambda0 with X0 > 0, so an optimum exists.
SDPProblem random_feasible(std::mt19937_64& rng) {
  std::normal_distribution<double> N;
  SDPProblem p;
  p.num_vars = 2 + static_cast<int>(rng() % 6);
  std::vector<double> y0(p.num_vars);
  for (auto& v : y0) v = N(rng);
  const int nb = 1 + static_cast<int>(rng() % 3);
  std::vector<Eigen::MatrixXd> X0;
  for (int b = 0; b < nb; ++b) {
    const int s = 1 + static_cast<int>(rng() % 4);
    BlockBuilder bb(s);
    Eigen::MatrixXd lin = Eigen::MatrixXd::Zero(s, s);
    for (int a = 0; a < p.num_vars; ++a) {
      for (int i = 0; i < s; ++i) {
        for (int j = i; j < s; ++j) {
          if (rng() % 2) continue;
          const double v = N(rng);
          bb.add(a, i, j, v);
          lin(i, j) += v * y0[a];
          if (i != j) lin(j, i) += v * y0[a];
        }
      }
    }
    const Eigen::MatrixXd A0 = random_spd(s, rng) - lin;
    for (int i = 0; i < s; ++i)
      for (int j = i; j < s; ++j) bb.add(-1, i, j, A0(i, j));
    p.blocks.push_back(bb.build());
    X0.push_back(random_spd(s, rng));
  }
  p.objective.assign(p.num_vars, 0.0);
  for (int b = 0; b < nb; ++b) {
    for (const auto& t : p.blocks[b].terms) p.objective[t.var] += (var_matrix(p.blocks[b], t).cwiseProduct(X0[b])).sum();
  }
  const int ne = static_cast<int>(rng() % 2);
  for (int e = 0; e < ne; ++e) {
    EqualityRow row;
    const double lambda = N(rng);
    for (int a = 0; a < p.num_vars; ++a) {
      const double v = N(rng);
      row.coeffs.emplace_back(a, v);
      row.rhs += v * y0[a];
      p.objective[a] += lambda * v;
    }
    p.equalities.push_back(row);
  }
  return p;
}

}  // namespace

TEST_CASE("random feasible problems: duality, feasibility, determinism") {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = random_feasible(rng);
    const auto s = solve(p);
    INFO("trial ", trial, ": ", s.message);
    REQUIRE(s.status == SolveStatus::Optimal);
    // Weak duality up to the solver tolerance; the gap closes.
    CHECK(s.dual_objective <= s.objective + 1e-6 * (1 + std::abs(s.objective)));
    CHECK(s.gap <= 1e-6);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(s.y.data(), s.y.size());
    for (const auto& b : p.blocks) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block_matrix(b, y));
      CHECK(es.eigenvalues().minCoeff() >= -1e-7);
    }
    for (const auto& row : p.equalities) {
      double lhs = 0.0;
      for (const auto& [a, c] : row.coeffs) lhs += c * s.y[a];
      CHECK(lhs == doctest::Approx(row.rhs).epsilon(1e-6).scale(1.0));
    }
    const auto again = solve(p);
    CHECK(again.y == s.y);
    CHECK(again.iterations == s.iterations);
  }
}

TEST_CASE("objective scaling scales the optimum") {
  std::mt19937_64 rng(52);
  for (int trial = 0; trial < 10; ++trial) {
    auto p = random_feasible(rng);
    const auto s = solve(p);
    for (double factor : {1e-2, 1e2}) {
      auto q = p;
      for (auto& c : q.objective) c *= factor;
      const auto t = solve(q);
      REQUIRE(t.status == SolveStatus::Optimal);
      CHECK(t.objective == doctest::Approx(factor * s.objective).epsilon(1e-5).scale(factor));
    }
  }
}
