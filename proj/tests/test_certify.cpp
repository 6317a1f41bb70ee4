#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "ratopt/certify.hpp"
#include "ratopt/hierarchy.hpp"
#include "ratopt/polish.hpp"
#include "ratopt/problem_file.hpp"

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

MeasureInfo measure(std::size_t n, int t) {
  MeasureInfo m;
  for (std::size_t j = 0; j < n; ++j) m.variables.push_back(static_cast<int>(j));
  m.order = t;
  m.basis = monomials_up_to(n, 2 * t);
  for (std::size_t i = 0; i < m.basis.size(); ++i) m.index.emplace(m.basis[i], static_cast<int>(i));
  return m;
}

// Moments of sum_l w_l delta(x_l), computed straight from the atoms.
std::vector<double> atom_moments(const MeasureInfo& m, const std::vector<std::vector<double>>& pts,
                                 const std::vector<double>& w) {
  std::vector<double> y(m.basis.size(), 0.0);
  for (std::size_t i = 0; i < m.basis.size(); ++i) {
    for (std::size_t l = 0; l < pts.size(); ++l) {
      double v = w[l];
      for (std::size_t j = 0; j < pts[l].size(); ++j) v *= std::pow(pts[l][j], m.basis[i][j]);
      y[i] += v;
    }
  }
  return y;
}

Certificate certify_dense(const RationalProgram& p, int k) {
  const auto rel = build_dense(p, k);
  return check_flat_and_extract(solve(rel.problem), rel);
}

double wilkinson_value(double x) {
  double s = 0.0;
  for (int i = 1; i <= 20; ++i) s += 1.0 / (x * x + i);
  return s;
}

}  // namespace

TEST_CASE("numerical_rank examples") {
  CHECK(numerical_rank(Eigen::MatrixXd::Identity(3, 3)).rank == 3);
  Eigen::VectorXd v(3);
  v << 1, 2, 3;
  CHECK(numerical_rank(v * v.transpose()).rank == 1);
  CHECK(numerical_rank(Eigen::MatrixXd::Zero(2, 2)).rank == 0);
  // Hankel of 0.5 delta(1) + 0.5 delta(-1): moments 1, 0, 1, 0, 1.
  Eigen::MatrixXd h(3, 3);
  h << 1, 0, 1, 0, 1, 0, 1, 0, 1;
  const auto r = numerical_rank(h);
  CHECK(r.rank == 2);
  CHECK(r.singular_values.size() == 3);
  CHECK(r.singular_values[0] >= r.singular_values[1]);
}

TEST_CASE("moment_matrix indexes the basis") {
  const auto m = measure(1, 2);
  const std::vector<double> y{1, 2, 3, 4, 5};
  const auto M = moment_matrix(y, m, 2);
  Eigen::MatrixXd expect(3, 3);
  expect << 1, 2, 3, 2, 3, 4, 3, 4, 5;
  CHECK(M.isApprox(expect));
}

TEST_CASE("extraction recovers synthetic atoms") {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::uniform_real_distribution<double> W(0.2, 1.0);
  int recovered = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 3;
    const int r = 1 + static_cast<int>(rng() % 3);
    std::vector<std::vector<double>> pts;
    while (static_cast<int>(pts.size()) < r) {
      std::vector<double> p(n);
      for (auto& v : p) v = U(rng);
      bool separated = true;
      for (const auto& q : pts) {
        double d = 0.0;
        for (std::size_t j = 0; j < n; ++j) d = std::max(d, std::abs(p[j] - q[j]));
        if (d < 0.2) separated = false;
      }
      if (separated) pts.push_back(p);
    }
    std::vector<double> w(r);
    double total = 0.0;
    for (auto& v : w) total += v = W(rng);
    for (auto& v : w) v /= total;

    const int t = 3;
    const auto m = measure(n, t);
    const auto y = atom_moments(m, pts, w);
    CHECK(numerical_rank(moment_matrix(y, m, t), 1e-6).rank == r);
    const auto ex = extract_atoms(y, m, t, r, {.seed = static_cast<std::uint64_t>(trial)});
    INFO("trial ", trial, " n=", n, " r=", r, ": ", ex.message);
    REQUIRE(ex.ok);
    REQUIRE(static_cast<int>(ex.points.size()) == r);
    bool all = true;
    for (std::size_t l = 0; l < pts.size(); ++l) {
      double best = 1e300, best_w = 0.0;
      for (std::size_t e = 0; e < ex.points.size(); ++e) {
        double d = 0.0;
        for (std::size_t j = 0; j < n; ++j) d = std::max(d, std::abs(ex.points[e][j] - pts[l][j]));
        if (d < best) {
          best = d;
          best_w = ex.weights[e];
        }
      }
      CHECK(best <= 1e-6);
      CHECK(best_w == doctest::Approx(w[l]).epsilon(1e-6));
      all = all && best <= 1e-6;
    }
    recovered += all;
  }
  CHECK(recovered == 100);
}

TEST_CASE("Wilkinson sum is certified at the first order") {
  const auto p = load("wilkinson.rp").program();
  const auto cert = certify_dense(p, 1);
  CHECK(cert.status == CertStatus::CertifiedOptimal);
  CHECK(cert.bound == doctest::Approx(wilkinson_value(0.0)).epsilon(1e-6));
  REQUIRE(cert.atoms.size() == 1);
  CHECK(std::abs(cert.atoms[0].x[0]) <= 1e-4);
  CHECK(cert.atoms[0].objective == doctest::Approx(cert.bound).epsilon(1e-6));
}

TEST_CASE("sparse4 certifies two minimizers") {
  const auto file = load("sparse4.rp");
  const auto cert = certify_dense(file.program(), 2);
  CHECK(cert.status == CertStatus::CertifiedOptimal);
  REQUIRE(cert.atoms.size() == 2);
  // Mirror images: x -> -x.
  for (std::size_t j = 0; j < 4; ++j) CHECK(cert.atoms[0].x[j] == doctest::Approx(-cert.atoms[1].x[j]).epsilon(1e-4));
  for (const auto& a : cert.atoms) {
    CHECK(a.violation <= 1e-6);
    CHECK(a.objective == doctest::Approx(cert.bound).epsilon(1e-4));
  }
}

TEST_CASE("moment ranks are nondecreasing in the truncation") {
  const auto file = load("bounds.rp");
  RunSettings s;
  s.bounds.push_back({0, -3.0, 3.0});
  const auto p = prepare_program(file, s);
  for (int k = 1; k <= 5; ++k) {
    const auto cert = certify_dense(p, k);
    for (const auto& mr : cert.ranks.measures) {
      for (std::size_t t = 1; t < mr.ranks.size(); ++t) CHECK(mr.ranks[t - 1] <= mr.ranks[t]);
    }
  }
}

TEST_CASE("uncertified relaxations still bound and report") {
  const auto p = load("bounds.rp").program();
  const auto cert = certify_dense(p, 2);
  CHECK(cert.status == CertStatus::LowerBoundOnly);
  CHECK(cert.bound <= 1.1285881158664892 + 1e-6);
  // Candidates may be kept for display, but none passes the acceptance test.
  for (const auto& a : cert.atoms) {
    CHECK((a.violation > 1e-6 || std::abs(a.objective - cert.bound) > 1e-4 * (1 + std::abs(cert.bound))));
  }
}

TEST_CASE("polish examples") {
  const auto w = load("wilkinson.rp").program();
  const auto at0 = polish(w, {0.0});
  CHECK(at0.converged);
  CHECK(at0.x[0] == 0.0);

  const auto p = load("bounds.rp").program();
  const auto r = polish(p, {-1.4});
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(-1.421509).epsilon(1e-6));
  CHECK(r.value == doctest::Approx(1.1285881158664892).epsilon(1e-9));

  // Denominator vanishing at the start point.
  RationalProgram bad;
  bad.n = 1;
  bad.terms.emplace_back(C(1, 1), X(1, 0));
  CHECK_FALSE(polish(bad, {0.0}).converged);
}

TEST_CASE("polish never worsens the objective nor leaves the feasible set") {
  std::mt19937_64 rng(62);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const auto two = load("bounds.rp").program();
  const auto s4 = load("sparse4.rp").program();
  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<double> x{3.0 * U(rng)};
    const auto r = polish(two, x);
    CHECK(r.value <= two.objective(x) + 1e-12);

    std::vector<double> z(4);
    do {
      for (auto& v : z) v = 1.8 * U(rng);
    } while (constraint_violation(s4, z) > 0.0);
    const auto q = polish(s4, z);
    CHECK(q.value <= s4.objective(z) + 1e-12);
    CHECK(constraint_violation(s4, q.x) <= 1e-9);
  }
}
