#include "ratopt/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <unordered_map>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "ratopt/error.hpp"
#include "ratopt/schur.hpp"

namespace ratopt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::MaxIterations: return "max-iterations";
    case SolveStatus::NumericalFailure: return "numerical-failure";
  }
  return "?";
}

std::vector<int> independent_equalities(const SDPProblem& problem, double tol) {
  using Row = std::map<int, double>;
  std::unordered_map<int, Row> pivots;
  std::vector<int> keep;
  for (std::size_t r = 0; r < problem.equalities.size(); ++r) {
    Row row;
    double scale = 0.0;
    for (const auto& [v, c] : problem.equalities[r].coeffs) {
      row[v] += c;
      scale = std::max(scale, std::abs(c));
    }
    const double drop = tol * std::max(scale, 1e-300);
    while (!row.empty()) {
      auto it = row.begin();
      if (std::abs(it->second) <= drop) {
        row.erase(it);
        continue;
      }
      auto pit = pivots.find(it->first);
      if (pit == pivots.end()) {
        pivots.emplace(it->first, std::move(row));
        keep.push_back(static_cast<int>(r));
        break;
      }
      const Row& prow = pit->second;
      const double factor = it->second / prow.begin()->second;
      for (const auto& [v, c] : prow) {
        double& slot = row[v];
        slot -= factor * c;
      }
      row.erase(it->first);
    }
  }
  return keep;
}

namespace {

MatrixXd sym(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

/// Largest alpha with M + alpha dM PSD (M positive definite). +inf if unbounded.
double max_step(const MatrixXd& M, const MatrixXd& dM) {
  Eigen::LLT<MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) return 0.0;
  MatrixXd A = llt.matrixL().solve(dM);
  MatrixXd T = llt.matrixL().solve(A.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym(T), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

double inner(const MatrixXd& a, const MatrixXd& b) { return a.cwiseProduct(b).sum(); }

struct SparseRow {
  std::vector<int> vars;
  std::vector<double> coeffs;
};

class InteriorPoint {
 public:
  InteriorPoint(const SDPProblem& problem, const SolverOptions& options)
      : p_(problem), opt_(options) {
    m_ = p_.num_vars;
    nb_ = static_cast<int>(p_.blocks.size());
    layout_ = SchurLayout::from_problem(p_);
    schur_data_ = SchurBlockData::from_problem(p_);
    c_ = Eigen::Map<const VectorXd>(p_.objective.data(), m_);
    const auto keep = independent_equalities(p_);
    dropped_ = static_cast<int>(p_.equalities.size() - keep.size());
    for (int r : keep) {
      SparseRow row;
      for (const auto& [v, coef] : p_.equalities[r].coeffs) {
        row.vars.push_back(v);
        row.coeffs.push_back(coef);
      }
      rows_.push_back(std::move(row));
      b_.push_back(p_.equalities[r].rhs);
    }
    neq_ = static_cast<int>(rows_.size());
    for (const auto& blk : p_.blocks) {
      C_.push_back(block_matrix(blk, VectorXd::Zero(m_)));
      total_size_ += blk.size;
    }
  }

  SDPSolution run();

 private:
  // Linear operator pieces.
  MatrixXd apply_block(int b, const VectorXd& dy) const {
    MatrixXd m = MatrixXd::Zero(p_.blocks[b].size, p_.blocks[b].size);
    for (const auto& t : p_.blocks[b].terms) {
      const double v = dy[t.var];
      if (v == 0.0) continue;
      for (const auto& e : t.entries) {
        m(e.row, e.col) += v * e.value;
        if (e.row != e.col) m(e.col, e.row) += v * e.value;
      }
    }
    return m;
  }

  /// (A^*(G))_a = sum_b <A_{b,a}, G_b>.
  VectorXd adjoint(const std::vector<MatrixXd>& G) const {
    VectorXd out = VectorXd::Zero(m_);
    for (int b = 0; b < nb_; ++b) {
      for (const auto& t : p_.blocks[b].terms) {
        double s = 0.0;
        for (const auto& e : t.entries) {
          s += e.value * (e.row == e.col ? G[b](e.row, e.col)
                                         : G[b](e.row, e.col) + G[b](e.col, e.row));
        }
        out[t.var] += s;
      }
    }
    return out;
  }

  VectorXd eq_apply(const VectorXd& y) const {
    VectorXd out(neq_);
    for (int r = 0; r < neq_; ++r) {
      double s = 0.0;
      for (std::size_t k = 0; k < rows_[r].vars.size(); ++k) s += rows_[r].coeffs[k] * y[rows_[r].vars[k]];
      out[r] = s;
    }
    return out;
  }

  VectorXd eq_adjoint(const VectorXd& lambda) const {
    VectorXd out = VectorXd::Zero(m_);
    for (int r = 0; r < neq_; ++r) {
      for (std::size_t k = 0; k < rows_[r].vars.size(); ++k) {
        out[rows_[r].vars[k]] += rows_[r].coeffs[k] * lambda[r];
      }
    }
    return out;
  }

  bool factorize();
  /// Solves H dy + B^T dl = rhs, B dy = rb.
  void solve_kkt(const VectorXd& rhs, const VectorXd& rb, VectorXd& dy, VectorXd& dl) const;
  void solve_kkt_once(const VectorXd& rhs, const VectorXd& rb, VectorXd& dy, VectorXd& dl) const;
  VectorXd h_solve(const VectorXd& v) const;
  VectorXd h_apply(const VectorXd& v) const;

  const SDPProblem& p_;
  SolverOptions opt_;
  int m_ = 0;
  int nb_ = 0;
  int neq_ = 0;
  int dropped_ = 0;
  int total_size_ = 0;
  SchurLayout layout_;
  std::vector<SchurBlockData> schur_data_;
  VectorXd c_;
  std::vector<SparseRow> rows_;
  std::vector<double> b_;
  std::vector<MatrixXd> C_;

  std::vector<MatrixXd> H_;
  std::vector<Eigen::LLT<MatrixXd>> H_llt_;
  MatrixXd HinvBt_;
  Eigen::LDLT<MatrixXd> M_ldlt_;
};

bool InteriorPoint::factorize() {
  H_llt_.clear();
  H_llt_.resize(H_.size());
  double global_max = 1e-300;
  for (const auto& Hc : H_) {
    if (Hc.rows() > 0) global_max = std::max(global_max, Hc.diagonal().cwiseAbs().maxCoeff());
  }
  for (std::size_t c = 0; c < H_.size(); ++c) {
    MatrixXd& Hc = H_[c];
    if (Hc.rows() == 0) continue;
    // A group that touches no block (equality-only variables) has H = 0;
    // regularize it on the scale of the rest of the system.
    double diag_max = std::max(Hc.diagonal().cwiseAbs().maxCoeff(), 1e-8 * global_max);
    double reg = 0.0;
    for (int attempt = 0; attempt < 12; ++attempt) {
      MatrixXd Hr = Hc;
      if (reg > 0.0) Hr.diagonal().array() += reg;
      H_llt_[c].compute(Hr);
      if (H_llt_[c].info() == Eigen::Success) break;
      reg = reg == 0.0 ? 1e-14 * diag_max : reg * 10.0;
      if (attempt == 11) return false;
    }
    // Variables that touch no block leave zero rows behind.
    for (int i = 0; i < Hc.rows(); ++i) {
      if (!std::isfinite(H_llt_[c].matrixLLT()(i, i))) return false;
    }
  }
  if (neq_ > 0) {
    MatrixXd Bt = MatrixXd::Zero(m_, neq_);
    for (int r = 0; r < neq_; ++r) {
      for (std::size_t k = 0; k < rows_[r].vars.size(); ++k) Bt(rows_[r].vars[k], r) += rows_[r].coeffs[k];
    }
    HinvBt_.resize(m_, neq_);
    for (std::size_t c = 0; c < H_.size(); ++c) {
      const auto& mem = layout_.members[c];
      MatrixXd local(mem.size(), neq_);
      for (std::size_t i = 0; i < mem.size(); ++i) local.row(i) = Bt.row(mem[i]);
      MatrixXd sol = H_llt_[c].solve(local);
      for (std::size_t i = 0; i < mem.size(); ++i) HinvBt_.row(mem[i]) = sol.row(i);
    }
    MatrixXd M = MatrixXd::Zero(neq_, neq_);
    for (int r = 0; r < neq_; ++r) {
      for (std::size_t k = 0; k < rows_[r].vars.size(); ++k) {
        M.row(r) += rows_[r].coeffs[k] * HinvBt_.row(rows_[r].vars[k]);
      }
    }
    M_ldlt_.compute(sym(M));
    if (M_ldlt_.info() != Eigen::Success) return false;
  }
  return true;
}

VectorXd InteriorPoint::h_solve(const VectorXd& v) const {
  VectorXd out(m_);
  for (std::size_t c = 0; c < H_.size(); ++c) {
    const auto& mem = layout_.members[c];
    VectorXd local(mem.size());
    for (std::size_t i = 0; i < mem.size(); ++i) local[i] = v[mem[i]];
    VectorXd sol = H_llt_[c].solve(local);
    for (std::size_t i = 0; i < mem.size(); ++i) out[mem[i]] = sol[i];
  }
  return out;
}

VectorXd InteriorPoint::h_apply(const VectorXd& v) const {
  VectorXd out(m_);
  for (std::size_t c = 0; c < H_.size(); ++c) {
    const auto& mem = layout_.members[c];
    VectorXd local(mem.size());
    for (std::size_t i = 0; i < mem.size(); ++i) local[i] = v[mem[i]];
    const VectorXd prod = H_[c] * local;
    for (std::size_t i = 0; i < mem.size(); ++i) out[mem[i]] = prod[i];
  }
  return out;
}

void InteriorPoint::solve_kkt_once(const VectorXd& rhs, const VectorXd& rb, VectorXd& dy,
                                   VectorXd& dl) const {
  VectorXd h = h_solve(rhs);
  if (neq_ == 0) {
    dy = h;
    dl.resize(0);
    return;
  }
  // B H^{-1}(rhs - B^T dl) = rb  =>  (B H^{-1} B^T) dl = B H^{-1} rhs - rb.
  dl = M_ldlt_.solve(eq_apply(h) - rb);
  dy = h - HinvBt_ * dl;
}

void InteriorPoint::solve_kkt(const VectorXd& rhs, const VectorXd& rb, VectorXd& dy,
                              VectorXd& dl) const {
  solve_kkt_once(rhs, rb, dy, dl);
  // Iterative refinement against the unregularized system: near the optimum
  // H is badly conditioned and the residual feeds straight into rd.
  const double scale = 1.0 + rhs.lpNorm<Eigen::Infinity>() + (neq_ ? rb.lpNorm<Eigen::Infinity>() : 0.0);
  double prev = std::numeric_limits<double>::infinity();
  for (int pass = 0; pass < 4; ++pass) {
    VectorXd r1 = rhs - h_apply(dy);
    if (neq_) r1 -= eq_adjoint(dl);
    VectorXd r2 = neq_ ? VectorXd(rb - eq_apply(dy)) : VectorXd();
    const double res = std::max(r1.lpNorm<Eigen::Infinity>(), neq_ ? r2.lpNorm<Eigen::Infinity>() : 0.0);
    if (res <= 1e-15 * scale || res >= 0.5 * prev) break;
    prev = res;
    VectorXd cy, cl;
    solve_kkt_once(r1, r2, cy, cl);
    dy += cy;
    if (neq_) dl += cl;
  }
}

SDPSolution InteriorPoint::run() {
  SDPSolution sol;
  sol.dropped_equalities = dropped_;
  const VectorXd bvec = Eigen::Map<const VectorXd>(b_.data(), neq_);

  // Starting point: scaled identities (SDPT3-style magnitudes).
  double normC = 0.0;
  for (const auto& Cb : C_) normC += Cb.squaredNorm();
  normC = std::sqrt(normC);
  std::vector<double> normA(m_, 0.0);
  for (const auto& blk : p_.blocks) {
    for (const auto& t : blk.terms) {
      for (const auto& e : t.entries) normA[t.var] += (e.row == e.col ? 1.0 : 2.0) * e.value * e.value;
    }
  }
  for (const auto& row : rows_) {
    for (std::size_t k = 0; k < row.vars.size(); ++k) normA[row.vars[k]] += row.coeffs[k] * row.coeffs[k];
  }
  double zeta = std::max(10.0, std::sqrt(static_cast<double>(total_size_)));
  double eta = zeta;
  for (int a = 0; a < m_; ++a) {
    const double na = std::sqrt(normA[a]);
    zeta = std::max(zeta, total_size_ * (1.0 + std::abs(c_[a])) / (1.0 + na));
    eta = std::max(eta, na);
  }
  eta = std::max(eta, normC);

  VectorXd y = VectorXd::Zero(m_);
  VectorXd lambda = VectorXd::Zero(neq_);
  std::vector<MatrixXd> X(nb_), S(nb_), S_inv(nb_);
  for (int b = 0; b < nb_; ++b) {
    const int s = p_.blocks[b].size;
    X[b] = zeta * MatrixXd::Identity(s, s);
    S[b] = eta * MatrixXd::Identity(s, s);
  }
  const double normb = bvec.size() ? bvec.norm() : 0.0;
  const double normc = c_.norm();

  std::vector<MatrixXd> Rp(nb_), G(nb_), dS(nb_), dX(nb_), dXa(nb_), dSa(nb_);
  int stalls = 0;
  double mu = 0.0;
  struct Best {
    double merit = std::numeric_limits<double>::infinity();
    VectorXd y;
    double pobj = 0, dobj = 0, gap = 0, pinf = 0, dinf = 0;
    int iter = 0;
  } best;
  int since_best = 0;
  for (int iter = 0; iter <= opt_.max_iter; ++iter) {
    sol.iterations = iter;
    // Residuals and objectives.
    double rp_norm2 = 0.0;
    double xs = 0.0;
    double cx = 0.0;
#pragma omp parallel for schedule(dynamic) reduction(+ : rp_norm2)
    for (int b = 0; b < nb_; ++b) {
      Rp[b] = C_[b] + apply_block(b, y) - S[b];
      rp_norm2 += Rp[b].squaredNorm();
    }
    for (int b = 0; b < nb_; ++b) {
      xs += inner(X[b], S[b]);
      cx += inner(C_[b], X[b]);
    }
    const VectorXd rB = neq_ ? VectorXd(bvec - eq_apply(y)) : VectorXd();
    const VectorXd rd = c_ - adjoint(X) - (neq_ ? eq_adjoint(lambda) : VectorXd::Zero(m_));
    const double pobj = c_.dot(y);
    const double dobj = -cx + (neq_ ? bvec.dot(lambda) : 0.0);
    mu = total_size_ > 0 ? xs / total_size_ : 0.0;
    const double relgap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    const double pinf = std::max(std::sqrt(rp_norm2) / (1.0 + normC),
                                 neq_ ? rB.norm() / (1.0 + normb) : 0.0);
    const double dinf = rd.norm() / (1.0 + normc);
    sol.objective = pobj;
    sol.dual_objective = dobj;
    sol.gap = relgap;
    sol.primal_infeasibility = pinf;
    sol.dual_infeasibility = dinf;
    if (opt_.verbose) {
      std::fprintf(stderr, "%3d pobj %+.10e dobj %+.10e gap %.2e pinf %.2e dinf %.2e mu %.2e\n",
                   iter, pobj, dobj, relgap, pinf, dinf, mu);
    }
    const double merit = std::max({relgap / opt_.gap_tol, pinf / opt_.feas_tol, dinf / opt_.feas_tol});
    if (std::isfinite(merit) && merit < best.merit) {
      best = {merit, y, pobj, dobj, relgap, pinf, dinf, iter};
      since_best = 0;
    } else if (++since_best >= opt_.stall_iterations) {
      sol.status = SolveStatus::NumericalFailure;
      sol.message = "no progress";
      break;
    }
    if (!std::isfinite(pobj) || !std::isfinite(dobj) || !std::isfinite(mu)) {
      sol.status = SolveStatus::NumericalFailure;
      sol.message = "non-finite iterate";
      break;
    }
    if (relgap <= opt_.gap_tol && pinf <= opt_.feas_tol && dinf <= opt_.feas_tol) {
      sol.status = SolveStatus::Optimal;
      break;
    }
    // Certificates: an improving ray on either side.
    {
      const double ray_d = (c_ - rd).norm();
      if (dobj > 0.0 && dobj > 1e6 * (1.0 + normc) && ray_d / dobj < 1e-8) {
        sol.status = SolveStatus::Infeasible;
        sol.message = "dual improving ray: relaxation infeasible";
        break;
      }
      const double ray_p = normC + std::sqrt(rp_norm2) + (neq_ ? (bvec - rB).norm() : 0.0);
      if (pobj < 0.0 && -pobj > 1e6 * (1.0 + normC) && ray_p / -pobj < 1e-8) {
        sol.status = SolveStatus::Unbounded;
        sol.message = "primal improving ray: relaxation unbounded";
        break;
      }
    }
    if (iter == opt_.max_iter) {
      sol.status = SolveStatus::MaxIterations;
      break;
    }

    // Schur complement.
    bool chol_ok = true;
#pragma omp parallel for schedule(dynamic) reduction(&& : chol_ok)
    for (int b = 0; b < nb_; ++b) {
      Eigen::LLT<MatrixXd> llt(S[b]);
      if (llt.info() != Eigen::Success) {
        chol_ok = false;
        continue;
      }
      S_inv[b] = llt.solve(MatrixXd::Identity(S[b].rows(), S[b].cols()));
    }
    if (!chol_ok) {
      sol.status = SolveStatus::NumericalFailure;
      sol.message = "slack matrix lost definiteness";
      break;
    }
    H_.assign(layout_.members.size(), MatrixXd());
    for (std::size_t c = 0; c < H_.size(); ++c) {
      H_[c] = MatrixXd::Zero(layout_.members[c].size(), layout_.members[c].size());
    }
    assemble_schur(schur_data_, layout_, X, S_inv, H_);
    if (!factorize()) {
      sol.status = SolveStatus::NumericalFailure;
      sol.message = "Schur complement factorization failed";
      break;
    }

    auto direction = [&](double sigma_mu, const std::vector<MatrixXd>* corr, VectorXd& dy,
                         VectorXd& dl) {
      // G = sigma mu S^{-1} - X - sym(X Rp S^{-1}) - sym(dXa dSa S^{-1}).
      std::vector<MatrixXd> Gfull(nb_);
#pragma omp parallel for schedule(dynamic)
      for (int b = 0; b < nb_; ++b) {
        G[b] = sigma_mu * S_inv[b] - X[b];
        if (corr) G[b] -= sym((*corr)[b] * S_inv[b]);
        Gfull[b] = G[b] - sym(X[b] * Rp[b] * S_inv[b]);
      }
      const VectorXd rhs = adjoint(Gfull) - rd;
      solve_kkt(rhs, rB, dy, dl);
#pragma omp parallel for schedule(dynamic)
      for (int b = 0; b < nb_; ++b) {
        dS[b] = apply_block(b, dy) + Rp[b];
        dX[b] = G[b] - sym(X[b] * dS[b] * S_inv[b]);
      }
    };
    auto step_lengths = [&](double& ap, double& ad) {
      std::vector<double> sp(nb_), sd(nb_);
#pragma omp parallel for schedule(dynamic)
      for (int b = 0; b < nb_; ++b) {
        sp[b] = max_step(S[b], dS[b]);
        sd[b] = max_step(X[b], dX[b]);
      }
      ap = std::numeric_limits<double>::infinity();
      ad = ap;
      for (int b = 0; b < nb_; ++b) {
        ap = std::min(ap, sp[b]);
        ad = std::min(ad, sd[b]);
      }
    };

    VectorXd dy, dl;
    direction(0.0, nullptr, dy, dl);
    double ap = 0.0, ad = 0.0;
    step_lengths(ap, ad);
    const double ap_aff = std::min(1.0, ap);
    const double ad_aff = std::min(1.0, ad);
    double mu_aff = 0.0;
    for (int b = 0; b < nb_; ++b) {
      mu_aff += inner(X[b] + ad_aff * dX[b], S[b] + ap_aff * dS[b]);
    }
    mu_aff /= total_size_;
    const double ratio = std::clamp(mu_aff / mu, 0.0, 1.0);
    const double expon = std::min(ap_aff, ad_aff) > 0.1 ? 3.0 : 2.0;
    const double sigma = std::max(std::pow(ratio, expon), 0.0);
    for (int b = 0; b < nb_; ++b) {
      dXa[b] = dX[b] * dS[b];
    }
    direction(sigma * mu, &dXa, dy, dl);
    step_lengths(ap, ad);
    const double gamma = 0.9 + 0.09 * std::min(ap_aff, ad_aff);
    ap = std::min(1.0, gamma * ap);
    ad = std::min(1.0, gamma * ad);

    y += ap * dy;
    for (int b = 0; b < nb_; ++b) {
      S[b] = sym(S[b] + ap * dS[b]);
      X[b] = sym(X[b] + ad * dX[b]);
    }
    if (neq_) lambda -= ad * dl;

    if (ap < 1e-8 && ad < 1e-8) {
      if (++stalls >= 5) {
        sol.status = SolveStatus::NumericalFailure;
        sol.message = "step lengths collapsed";
        sol.iterations = iter + 1;
        break;
      }
    } else {
      stalls = 0;
    }
  }

  // Ill-conditioning near the optimum can undo progress; fall back to the
  // best iterate seen and accept it at reduced accuracy if it is close.
  if ((sol.status == SolveStatus::MaxIterations || sol.status == SolveStatus::NumericalFailure) &&
      best.y.size() == m_) {
    y = best.y;
    sol.objective = best.pobj;
    sol.dual_objective = best.dobj;
    sol.gap = best.gap;
    sol.primal_infeasibility = best.pinf;
    sol.dual_infeasibility = best.dinf;
    if (best.gap <= opt_.accept_tol && best.pinf <= opt_.accept_tol && best.dinf <= opt_.accept_tol) {
      sol.message = std::string(to_string(sol.status)) + (sol.message.empty() ? "" : " (" + sol.message + ")") +
                    "; best iterate " + std::to_string(best.iter) + " accepted at reduced accuracy";
      sol.status = SolveStatus::Optimal;
      sol.reduced_accuracy = true;
    }
  }
  sol.y.assign(y.data(), y.data() + m_);
  sol.block_min_eigenvalue.resize(nb_);
  for (int b = 0; b < nb_; ++b) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(block_matrix(p_.blocks[b], y), Eigen::EigenvaluesOnly);
    sol.block_min_eigenvalue[b] = es.eigenvalues().size() ? es.eigenvalues().minCoeff() : 0.0;
  }
  return sol;
}

}  // namespace

SDPSolution solve(const SDPProblem& problem, const SolverOptions& options) {
  problem.validate();
  if (problem.num_vars == 0) {
    SDPSolution s;
    s.status = SolveStatus::Optimal;
    for (const auto& b : problem.blocks) {
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(block_matrix(b, VectorXd()), Eigen::EigenvaluesOnly);
      s.block_min_eigenvalue.push_back(es.eigenvalues().minCoeff());
    }
    return s;
  }
  InteriorPoint ipm(problem, options);
  return ipm.run();
}

}  // namespace ratopt
