#include "ratopt/certify.hpp"
#include "ratopt/polish.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace ratopt {

const char* to_string(CertStatus s) {
  switch (s) {
    case CertStatus::CertifiedOptimal: return "certified";
    case CertStatus::LowerBoundOnly: return "bound-only";
    case CertStatus::SolverFailed: return "solver-failed";
  }
  return "?";
}

NumericalRank numerical_rank(const Eigen::MatrixXd& matrix, double tol) {
  NumericalRank out;
  if (matrix.size() == 0) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (matrix + matrix.transpose()),
                                                    Eigen::EigenvaluesOnly);
  out.singular_values.resize(matrix.rows());
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) out.singular_values[i] = std::abs(es.eigenvalues()[i]);
  std::sort(out.singular_values.begin(), out.singular_values.end(), std::greater<>());
  const double top = out.singular_values.front();
  if (top <= 0.0) return out;
  for (double s : out.singular_values) {
    if (s > tol * top) ++out.rank;
  }
  return out;
}

Eigen::MatrixXd moment_matrix(const std::vector<double>& moments, const MeasureInfo& measure, int t) {
  const int s = measure.basis_size(t);
  Eigen::MatrixXd M(s, s);
  for (int a = 0; a < s; ++a) {
    for (int b = a; b < s; ++b) {
      M(a, b) = M(b, a) = moments[measure.index.at(measure.basis[a] * measure.basis[b])];
    }
  }
  return M;
}

namespace {

double monomial_value(const Monomial& m, const std::vector<double>& x) {
  double v = 1.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    for (int e = 0; e < m[j]; ++e) v *= x[j];
  }
  return v;
}

bool close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (std::abs(a[j] - b[j]) > tol * (1.0 + std::max(std::abs(a[j]), std::abs(b[j])))) return false;
  }
  return true;
}

}  // namespace

Extraction extract_atoms(const std::vector<double>& moments, const MeasureInfo& measure, int t, int rank,
                         const CertifyOptions& options) {
  Extraction out;
  const std::size_t n = measure.dimension();
  if (rank <= 0) {
    out.message = "zero rank";
    return out;
  }
  const Eigen::MatrixXd M = moment_matrix(moments, measure, t);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  const int s = static_cast<int>(M.rows());
  if (rank > s) {
    out.message = "rank exceeds the matrix size";
    return out;
  }
  Eigen::MatrixXd V(s, rank);
  for (int j = 0; j < rank; ++j) {
    const int col = s - 1 - j;
    V.col(j) = es.eigenvectors().col(col) * std::sqrt(std::max(es.eigenvalues()[col], 0.0));
  }

  // Pivot rows among monomials of degree <= t-1.
  const int cand = measure.basis_size(t - 1);
  if (cand < rank) {
    out.message = "too few low-degree monomials for the rank";
    return out;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(V.topRows(cand).transpose());
  const Eigen::MatrixXd R = qr.matrixR().template triangularView<Eigen::Upper>();
  if (std::abs(R(rank - 1, rank - 1)) <= 1e-9 * std::abs(R(0, 0))) {
    out.message = "degenerate pivot block";
    return out;
  }
  std::vector<int> piv(rank);
  for (int l = 0; l < rank; ++l) piv[l] = qr.colsPermutation().indices()[l];
  Eigen::MatrixXd W(rank, rank);
  for (int l = 0; l < rank; ++l) W.row(l) = V.row(piv[l]);
  const Eigen::MatrixXd U = V * W.inverse();

  std::vector<Eigen::MatrixXd> N(n, Eigen::MatrixXd(rank, rank));
  for (std::size_t j = 0; j < n; ++j) {
    const Monomial xj = Monomial::unit(n, j);
    for (int l = 0; l < rank; ++l) N[j].row(l) = U.row(measure.index.at(xj * measure.basis[piv[l]]));
  }
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd combo = Eigen::MatrixXd::Zero(rank, rank);
  double total = 0.0;
  std::vector<double> coef(n);
  for (std::size_t j = 0; j < n; ++j) total += coef[j] = unif(rng);
  for (std::size_t j = 0; j < n; ++j) combo += (coef[j] / total) * N[j];
  Eigen::RealSchur<Eigen::MatrixXd> schur(combo);
  const Eigen::MatrixXd& T = schur.matrixT();
  const Eigen::MatrixXd& Q = schur.matrixU();
  for (int l = 0; l + 1 < rank; ++l) {
    if (std::abs(T(l + 1, l)) > 1e-6 * (1.0 + T.norm())) {
      out.message = "complex eigenvalues in the shift matrices";
      return out;
    }
  }
  std::vector<std::vector<double>> pts(rank, std::vector<double>(n));
  for (std::size_t j = 0; j < n; ++j) {
    const Eigen::MatrixXd D = Q.transpose() * N[j] * Q;
    for (int l = 0; l < rank; ++l) pts[l][j] = D(l, l);
  }

  // Coalesce near-identical atoms, then fit weights to the moments up to 2t.
  std::vector<std::vector<double>> atoms;
  for (auto& p : pts) {
    if (std::none_of(atoms.begin(), atoms.end(), [&](const auto& a) { return close(a, p, options.cluster_tol); })) {
      atoms.push_back(std::move(p));
    }
  }
  const int rows = measure.basis_size(2 * t);
  Eigen::MatrixXd A(rows, atoms.size());
  Eigen::VectorXd rhs(rows);
  for (int b = 0; b < rows; ++b) {
    rhs[b] = moments[b];
    for (std::size_t l = 0; l < atoms.size(); ++l) A(b, l) = monomial_value(measure.basis[b], atoms[l]);
  }
  const Eigen::VectorXd w = A.colPivHouseholderQr().solve(rhs);
  out.points = std::move(atoms);
  out.weights.assign(w.data(), w.data() + w.size());
  out.ok = true;
  return out;
}

Certificate check_flat_and_extract(const SDPSolution& solution, const SDPRelaxation& relaxation,
                                   const CertifyOptions& options) {
  Certificate cert;
  cert.order = relaxation.order;
  cert.solver_status = solution.status;
  cert.bound = relaxation.bound(solution.objective);
  if (solution.reduced_accuracy) cert.diagnostics.push_back("solver: " + solution.message);
  if (solution.status != SolveStatus::Optimal) {
    cert.status = CertStatus::SolverFailed;
    cert.diagnostics.push_back(std::string("solver status ") + to_string(solution.status) +
                               (solution.message.empty() ? "" : ": " + solution.message));
    return cert;
  }
  cert.status = CertStatus::LowerBoundOnly;
  const auto& w = relaxation.working;
  const int k = relaxation.order;
  const std::size_t nm = relaxation.measures.size();

  // Normalized moments (mass 1) per measure.
  std::vector<std::vector<double>> mom(nm);
  bool flat = true;
  for (std::size_t i = 0; i < nm; ++i) {
    const auto& m = relaxation.measures[i];
    MeasureRank mr;
    mr.measure = static_cast<int>(i);
    mr.offset = std::max(1, m.offset);
    mom[i] = relaxation.moments(solution.y, static_cast<int>(i));
    mr.mass = mom[i][0];
    if (!(mr.mass > 1e-12)) {
      cert.diagnostics.push_back("measure " + std::to_string(i + 1) + " has no mass");
      flat = false;
      cert.ranks.measures.push_back(std::move(mr));
      continue;
    }
    for (double& v : mom[i]) v /= mr.mass;
    for (int t = 0; t <= k; ++t) {
      auto nr = numerical_rank(moment_matrix(mom[i], m, t), options.rank_tol);
      mr.ranks.push_back(nr.rank);
      if (t == k) mr.singular_values = std::move(nr.singular_values);
    }
    for (int t = mr.offset; t <= k; ++t) {
      if (mr.ranks[t] == mr.ranks[t - mr.offset]) {
        mr.flat_order = t;
        break;
      }
    }
    if (!mr.flat_order) {
      flat = false;
      cert.diagnostics.push_back("measure " + std::to_string(i + 1) + " is not flat");
    }
    cert.ranks.measures.push_back(std::move(mr));
  }

  const bool sparse = std::any_of(relaxation.measures.begin(), relaxation.measures.end(),
                                  [&](const MeasureInfo& m) { return m.dimension() < w.n; });
  if (sparse) {
    for (std::size_t i = 0; i < nm; ++i) {
      for (std::size_t j = i + 1; j < nm; ++j) {
        std::vector<int> shared;
        std::set_intersection(relaxation.measures[i].variables.begin(), relaxation.measures[i].variables.end(),
                              relaxation.measures[j].variables.begin(), relaxation.measures[j].variables.end(),
                              std::back_inserter(shared));
        if (shared.empty() || mom[i].empty()) continue;
        const auto& m = relaxation.measures[i];
        const auto local = monomials_up_to(shared.size(), k);
        Eigen::MatrixXd M(local.size(), local.size());
        for (std::size_t a = 0; a < local.size(); ++a) {
          for (std::size_t b = a; b < local.size(); ++b) {
            std::vector<int> e(w.n, 0);
            const Monomial ab = local[a] * local[b];
            for (std::size_t s = 0; s < shared.size(); ++s) e[shared[s]] = ab[s];
            M(a, b) = M(b, a) = mom[i][m.index.at(m.localize(Monomial(e)))];
          }
        }
        auto nr = numerical_rank(M, options.rank_tol);
        // Informational: several minimizers make this > 1, yet stitching can
        // still produce atoms that attain the bound, which is what we certify.
        if (nr.rank != 1) {
          cert.diagnostics.push_back("overlap of cliques " + std::to_string(i + 1) + " and " +
                                     std::to_string(j + 1) + " has rank " + std::to_string(nr.rank));
        }
        cert.ranks.overlaps.push_back({static_cast<int>(i), static_cast<int>(j), nr.rank,
                                       std::move(nr.singular_values)});
      }
    }
  }

  auto first_moments = [&]() {
    std::vector<double> x(w.n, 0.0);
    std::vector<bool> seen(w.n, false);
    for (std::size_t i = 0; i < nm; ++i) {
      if (mom[i].empty()) continue;
      const auto& m = relaxation.measures[i];
      for (std::size_t s = 0; s < m.dimension(); ++s) {
        if (seen[m.variables[s]]) continue;
        seen[m.variables[s]] = true;
        x[m.variables[s]] = mom[i][m.index.at(Monomial::unit(m.dimension(), s))];
      }
    }
    return x;
  };
  auto fallback = [&](const std::string& why) {
    cert.diagnostics.push_back(why);
    cert.approximate_minimizer = relaxation.to_original(first_moments());
    cert.diagnostics.push_back("approximate minimizer from first-order moments (assumes a unique minimizer)");
  };
  if (!flat) {
    fallback("rank conditions not met");
    return cert;
  }

  // Atoms per measure, in working coordinates of that measure.
  struct Local {
    std::vector<std::vector<double>> points;
    std::vector<double> weights;  // of q_i dmu_i, summing to 1
  };
  std::vector<Local> per(nm);
  for (std::size_t i = 0; i < nm; ++i) {
    const auto& m = relaxation.measures[i];
    const auto& mr = cert.ranks.measures[i];
    const int t = *mr.flat_order;
    CertifyOptions o = options;
    o.seed = options.seed + i;
    auto ex = extract_atoms(mom[i], m, t, mr.ranks[t], o);
    if (!ex.ok) {
      fallback("extraction failed on measure " + std::to_string(i + 1) + ": " + ex.message);
      return cert;
    }
    double total = 0.0;
    std::vector<double> qw(ex.points.size());
    for (std::size_t l = 0; l < ex.points.size(); ++l) {
      qw[l] = ex.weights[l] * m.denominator.evaluate(ex.points[l]);
      total += qw[l];
    }
    for (double& v : qw) v = total != 0.0 ? v / total : 0.0;
    per[i] = {std::move(ex.points), std::move(qw)};
  }

  std::vector<std::pair<std::vector<double>, double>> full;
  if (!sparse) {
    for (std::size_t i = 0; i < nm; ++i) {
      for (std::size_t l = 0; l < per[i].points.size(); ++l) {
        const auto& p = per[i].points[l];
        if (std::none_of(full.begin(), full.end(), [&](const auto& f) { return close(f.first, p, options.stitch_tol); })) {
          full.emplace_back(p, per[i].weights[l]);
        }
      }
    }
  } else {
    // Depth-first stitching over cliques; overlapping coordinates must agree.
    std::vector<double> x(w.n, 0.0);
    std::vector<int> owner(w.n, -1);
    std::function<void(std::size_t, double)> visit = [&](std::size_t i, double weight) {
      if (full.size() >= options.max_stitched) return;
      if (i == nm) {
        full.emplace_back(x, weight);
        return;
      }
      const auto& m = relaxation.measures[i];
      for (std::size_t l = 0; l < per[i].points.size(); ++l) {
        const auto& p = per[i].points[l];
        bool ok = true;
        for (std::size_t s = 0; s < m.dimension() && ok; ++s) {
          const int v = m.variables[s];
          if (owner[v] >= 0) ok = std::abs(x[v] - p[s]) <= options.stitch_tol * (1.0 + std::abs(x[v]));
        }
        if (!ok) continue;
        std::vector<int> claimed;
        for (std::size_t s = 0; s < m.dimension(); ++s) {
          const int v = m.variables[s];
          if (owner[v] < 0) {
            owner[v] = static_cast<int>(i);
            x[v] = p[s];
            claimed.push_back(v);
          }
        }
        visit(i + 1, i == 0 ? per[i].weights[l] : weight);
        for (int v : claimed) owner[v] = -1;
      }
    };
    visit(0, 1.0);
    if (full.empty()) {
      fallback("clique atoms disagree on their overlaps");
      return cert;
    }
  }

  bool all_good = !full.empty();
  const double scale = 1.0 + std::abs(cert.bound);
  for (auto& [p, weight] : full) {
    Atom a;
    a.working = p;
    a.x = relaxation.to_original(p);
    a.weight = weight;
    const std::vector<double> xs(p.begin(), p.begin() + relaxation.original_dimension);
    a.objective = relaxation.target.objective(xs);
    a.violation = constraint_violation(w, p);
    if (a.violation > options.feasibility_tol) {
      all_good = false;
      cert.diagnostics.push_back("atom violates a constraint by " + format_double(a.violation));
    }
    if (!(std::abs(a.objective - cert.bound) <= options.objective_tol * scale)) {
      all_good = false;
      cert.diagnostics.push_back("atom objective " + format_double(a.objective) + " differs from the bound");
    }
    cert.atoms.push_back(std::move(a));
  }
  if (all_good) {
    cert.status = CertStatus::CertifiedOptimal;
  } else {
    cert.approximate_minimizer = relaxation.to_original(first_moments());
  }
  return cert;
}

}  // namespace ratopt
