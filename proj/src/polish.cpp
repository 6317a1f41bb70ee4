#include "ratopt/polish.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "ratopt/error.hpp"

namespace ratopt {

double constraint_violation(const RationalProgram& program, const std::vector<double>& x) {
  double worst = 0.0;
  for (const auto& c : program.constraints) {
    const double g = c.g.evaluate(x);
    worst = std::max(worst, c.relation == Relation::Equal ? std::abs(g) : std::max(0.0, -g));
  }
  return worst;
}

namespace {

// Derivatives of one term in the coordinates of its own support, which keeps
// the Hessian polynomials small even when n is large.
struct TermDerivatives {
  std::vector<int> vars;
  Polynomial p, q;
  std::vector<Polynomial> dp, dq;
  std::vector<std::vector<Polynomial>> hp, hq;  // lower triangle used
};

TermDerivatives differentiate(const RationalTerm& term) {
  TermDerivatives d;
  d.vars = term.support();
  if (d.vars.empty()) d.vars.push_back(0);  // constant term; any coordinate works
  d.p = term.numerator.restrict_to(d.vars);
  d.q = term.denominator.restrict_to(d.vars);
  d.dp = d.p.gradient();
  d.dq = d.q.gradient();
  const std::size_t m = d.vars.size();
  d.hp.resize(m);
  d.hq.resize(m);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      d.hp[a].push_back(d.dp[a].partial(b));
      d.hq[a].push_back(d.dq[a].partial(b));
    }
  }
  return d;
}

struct Evaluation {
  bool ok = true;
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

class Objective {
 public:
  Objective(const RationalProgram& program) : n_(program.n) {
    sign_ = program.sense == Sense::Maximize ? -1.0 : 1.0;
    for (const auto& t : program.terms) terms_.push_back(differentiate(t));
  }

  // phi = sign * f; derivatives only when asked.
  Evaluation operator()(const std::vector<double>& x, bool derivatives) const {
    Evaluation e;
    if (derivatives) {
      e.grad = Eigen::VectorXd::Zero(n_);
      e.hess = Eigen::MatrixXd::Zero(n_, n_);
    }
    std::vector<double> local;
    for (const auto& t : terms_) {
      const std::size_t m = t.vars.size();
      local.resize(m);
      for (std::size_t a = 0; a < m; ++a) local[a] = x[t.vars[a]];
      const double p = t.p.evaluate(local);
      const double q = t.q.evaluate(local);
      if (!(std::abs(q) > 1e-14 * (1.0 + std::abs(p)))) {
        e.ok = false;
        return e;
      }
      const double h = p / q;
      e.value += sign_ * h;
      if (!derivatives) continue;
      // grad h = (grad p - h grad q) / q
      // hess h = (hess p - h hess q - grad h grad q^T - grad q grad h^T) / q
      Eigen::VectorXd gq(m), gh(m);
      for (std::size_t a = 0; a < m; ++a) {
        gq[a] = t.dq[a].evaluate(local);
        gh[a] = (t.dp[a].evaluate(local) - h * gq[a]) / q;
      }
      for (std::size_t a = 0; a < m; ++a) {
        e.grad[t.vars[a]] += sign_ * gh[a];
        for (std::size_t b = 0; b <= a; ++b) {
          const double v = (t.hp[a][b].evaluate(local) - h * t.hq[a][b].evaluate(local) -
                            gh[a] * gq[b] - gq[a] * gh[b]) / q;
          e.hess(t.vars[a], t.vars[b]) += sign_ * v;
          if (a != b) e.hess(t.vars[b], t.vars[a]) += sign_ * v;
        }
      }
    }
    return e;
  }

  double sign() const { return sign_; }

 private:
  std::size_t n_;
  double sign_ = 1.0;
  std::vector<TermDerivatives> terms_;
};

}  // namespace

PolishResult polish(const RationalProgram& program, const std::vector<double>& x0,
                    const PolishOptions& options) {
  if (x0.size() != program.n) throw ModelingError("polish: starting point has the wrong dimension");
  const std::size_t n = program.n;
  const auto& box = options.bounds;
  if (box && box->size() != n) throw ModelingError("polish: bounds have the wrong dimension");

  auto project = [&](std::vector<double>& x) {
    if (!box) return;
    for (std::size_t j = 0; j < n; ++j) x[j] = std::clamp(x[j], (*box)[j].lo, (*box)[j].hi);
  };

  const Objective phi(program);
  PolishResult out;
  out.x = x0;
  project(out.x);
  auto cur = phi(out.x, true);
  if (!cur.ok) {
    out.aborted = true;
    out.x = x0;
    out.value = program.objective(x0);
    out.message = "a denominator vanishes at the starting point";
    return out;
  }
  const double allowed = std::max(constraint_violation(program, out.x), 1e-9);

  // Gradient with components that push against an active bound removed.
  auto projected_gradient_norm = [&](const std::vector<double>& x, const Eigen::VectorXd& g) {
    double norm = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double gj = g[j];
      if (box && ((x[j] <= (*box)[j].lo && gj > 0) || (x[j] >= (*box)[j].hi && gj < 0))) gj = 0.0;
      norm = std::max(norm, std::abs(gj));
    }
    return norm;
  };

  for (; out.iterations < options.max_iter; ++out.iterations) {
    if (projected_gradient_norm(out.x, cur.grad) <= options.step_tol) {
      out.converged = true;
      break;
    }
    // Levenberg shift until the model Hessian is positive definite.
    Eigen::LLT<Eigen::MatrixXd> llt;
    const double scale = std::max(1.0, cur.hess.cwiseAbs().maxCoeff());
    double tau = 0.0;
    for (int attempt = 0; attempt < 60; ++attempt) {
      llt.compute(cur.hess + tau * Eigen::MatrixXd::Identity(n, n));
      if (llt.info() == Eigen::Success) break;
      tau = tau == 0.0 ? 1e-8 * scale : 4.0 * tau;
    }
    const Eigen::VectorXd d = -llt.solve(cur.grad);

    bool accepted = false;
    bool hit_pole = false;
    for (double alpha = 1.0; alpha > 1e-12; alpha *= 0.5) {
      std::vector<double> trial(n);
      for (std::size_t j = 0; j < n; ++j) trial[j] = out.x[j] + alpha * d[j];
      project(trial);
      double slope = 0.0;
      for (std::size_t j = 0; j < n; ++j) slope += cur.grad[j] * (trial[j] - out.x[j]);
      if (slope >= 0.0) continue;
      auto next = phi(trial, false);
      if (!next.ok) {
        hit_pole = true;
        continue;
      }
      if (next.value <= cur.value + 1e-4 * slope && constraint_violation(program, trial) <= allowed) {
        out.x = std::move(trial);
        cur = phi(out.x, true);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (hit_pole) {
        out.aborted = true;
        out.message = "a denominator vanishes along the search direction";
      } else {
        out.message = "line search made no progress";
        out.converged = projected_gradient_norm(out.x, cur.grad) <= std::sqrt(options.step_tol);
      }
      break;
    }
  }
  if (out.iterations == options.max_iter && !out.converged && out.message.empty()) {
    out.message = "iteration limit reached";
  }
  out.value = program.objective(out.x);
  return out;
}

}  // namespace ratopt
