#include "ratopt/schur.hpp"

#include <algorithm>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ratopt {

namespace {

int find_root(std::vector<int>& parent, int v) {
  while (parent[v] != v) {
    parent[v] = parent[parent[v]];
    v = parent[v];
  }
  return v;
}

}  // namespace

SchurLayout SchurLayout::from_problem(const SDPProblem& problem) {
  const int m = problem.num_vars;
  std::vector<int> parent(m);
  std::iota(parent.begin(), parent.end(), 0);
  for (const auto& b : problem.blocks) {
    if (b.terms.empty()) continue;
    int r0 = find_root(parent, b.terms.front().var);
    for (const auto& t : b.terms) {
      const int r = find_root(parent, t.var);
      if (r == r0) continue;
      const int lo = std::min(r, r0);
      parent[std::max(r, r0)] = lo;
      r0 = lo;
    }
  }
  SchurLayout layout;
  layout.component.assign(m, -1);
  layout.local_index.assign(m, -1);
  std::vector<int> root_to_comp(m, -1);
  for (int v = 0; v < m; ++v) {
    int r = find_root(parent, v);
    if (root_to_comp[r] < 0) {
      root_to_comp[r] = static_cast<int>(layout.members.size());
      layout.members.emplace_back();
    }
    int c = root_to_comp[r];
    layout.component[v] = c;
    layout.local_index[v] = static_cast<int>(layout.members[c].size());
    layout.members[c].push_back(v);
  }
  for (const auto& b : problem.blocks) {
    layout.block_component.push_back(b.terms.empty() ? -1 : layout.component[b.terms.front().var]);
  }
  return layout;
}

std::vector<SchurBlockData> SchurBlockData::from_problem(const SDPProblem& problem) {
  std::vector<SchurBlockData> out;
  out.reserve(problem.blocks.size());
  for (const auto& b : problem.blocks) {
    SchurBlockData d;
    for (const auto& t : b.terms) {
      d.vars.push_back(t.var);
      std::vector<Entry> full;
      full.reserve(2 * t.entries.size());
      for (const auto& e : t.entries) {
        full.push_back({e.row, e.col, e.value});
        if (e.row != e.col) full.push_back({e.col, e.row, e.value});
      }
      d.total_entries += full.size();
      d.full.push_back(std::move(full));
    }
    out.push_back(std::move(d));
  }
  return out;
}

void assemble_schur(const std::vector<SchurBlockData>& blocks, const SchurLayout& layout,
                    const std::vector<Eigen::MatrixXd>& X, const std::vector<Eigen::MatrixXd>& S_inv,
                    std::vector<Eigen::MatrixXd>& H) {
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& d = blocks[b];
    const int t = static_cast<int>(d.vars.size());
    if (t == 0) continue;
    const int comp = layout.block_component[b];
    Eigen::MatrixXd& Hc = H[comp];
    const Eigen::MatrixXd& Xb = X[b];
    const Eigen::MatrixXd& Sb = S_inv[b];
    const int s = static_cast<int>(Xb.rows());

    // Suffix sums of entry counts decide per row between the direct double
    // sum and forming Q_p = X A_p S^{-1} first.
    std::vector<std::size_t> suffix(t + 1, 0);
    for (int p = t - 1; p >= 0; --p) suffix[p] = suffix[p + 1] + d.full[p].size();

#pragma omp parallel
    {
      Eigen::MatrixXd W;
      Eigen::MatrixXd Q;
      std::vector<int> cols;
#pragma omp for schedule(dynamic, 1)
      for (int p = 0; p < t; ++p) {
        const auto& Ep = d.full[p];
        const int lp = layout.local_index[d.vars[p]];
        const double direct_cost = static_cast<double>(Ep.size()) * suffix[p];
        const double q_cost = static_cast<double>(s) * Ep.size() +
                              static_cast<double>(s) * s * std::min<std::size_t>(s, Ep.size()) +
                              suffix[p];
        if (direct_cost <= q_cost) {
          for (int q = p; q < t; ++q) {
            double h = 0.0;
            for (const auto& e : Ep) {
              double inner = 0.0;
              for (const auto& f : d.full[q]) inner += f.value * Xb(e.col, f.row) * Sb(f.col, e.row);
              h += e.value * inner;
            }
            Hc(lp, layout.local_index[d.vars[q]]) += h;
          }
        } else {
          // W = X A_p restricted to the nonzero columns of A_p, then Q = W S^{-1}.
          W.setZero(s, s);
          cols.clear();
          for (const auto& e : Ep) {
            W.col(e.col) += e.value * Xb.col(e.row);
            cols.push_back(e.col);
          }
          std::sort(cols.begin(), cols.end());
          cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
          Q.setZero(s, s);
          for (int j : cols) Q.noalias() += W.col(j) * Sb.row(j);
          for (int q = p; q < t; ++q) {
            double h = 0.0;
            for (const auto& f : d.full[q]) h += f.value * Q(f.row, f.col);
            Hc(lp, layout.local_index[d.vars[q]]) += h;
          }
        }
      }
    }
  }
  // Only the upper triangle was accumulated.
  for (auto& Hc : H) Hc.triangularView<Eigen::StrictlyLower>() = Hc.transpose();
}

Eigen::MatrixXd block_matrix(const Block& block, const Eigen::VectorXd& y) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(block.size, block.size);
  for (const auto& e : block.constant) {
    m(e.row, e.col) += e.value;
    if (e.row != e.col) m(e.col, e.row) += e.value;
  }
  for (const auto& t : block.terms) {
    for (const auto& e : t.entries) {
      m(e.row, e.col) += y[t.var] * e.value;
      if (e.row != e.col) m(e.col, e.row) += y[t.var] * e.value;
    }
  }
  return m;
}

Eigen::MatrixXd var_matrix(const Block& block, const VarMatrix& term) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(block.size, block.size);
  for (const auto& e : term.entries) {
    m(e.row, e.col) += e.value;
    if (e.row != e.col) m(e.col, e.row) += e.value;
  }
  return m;
}

void assemble_schur_reference(const SDPProblem& problem, const SchurLayout& layout,
                              const std::vector<Eigen::MatrixXd>& X,
                              const std::vector<Eigen::MatrixXd>& S_inv,
                              std::vector<Eigen::MatrixXd>& H) {
  for (std::size_t b = 0; b < problem.blocks.size(); ++b) {
    const auto& block = problem.blocks[b];
    std::vector<Eigen::MatrixXd> dense;
    for (const auto& t : block.terms) dense.push_back(var_matrix(block, t));
    for (std::size_t p = 0; p < block.terms.size(); ++p) {
      const int va = block.terms[p].var;
      const Eigen::MatrixXd left = dense[p] * X[b];
      for (std::size_t q = 0; q < block.terms.size(); ++q) {
        const int vb = block.terms[q].var;
        const double h = (left * dense[q] * S_inv[b]).trace();
        H[layout.component[va]](layout.local_index[va], layout.local_index[vb]) += h;
      }
    }
  }
}

}  // namespace ratopt
