#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ratopt/sdp_problem.hpp"

namespace ratopt {

/// Partition of the scalar variables into groups that never share a block,
/// so the Schur complement is block diagonal over groups.
struct SchurLayout {
  std::vector<int> component;    // var -> group
  std::vector<int> local_index;  // var -> position inside its group
  std::vector<std::vector<int>> members;
  std::vector<int> block_component;  // block -> group (-1 for an empty block)

  static SchurLayout from_problem(const SDPProblem& problem);
};

/// Per-block data laid out for the Schur kernels: every A_{b,a} expanded to
/// both triangles so the inner loops need no symmetry branches.
struct SchurBlockData {
  struct Entry {
    int row, col;
    double value;
  };
  std::vector<int> vars;
  std::vector<std::vector<Entry>> full;  // parallel to vars
  std::size_t total_entries = 0;

  static std::vector<SchurBlockData> from_problem(const SDPProblem& problem);
};

/// Adds H_{a,a'} = sum_b tr(A_{b,a} X_b A_{b,a'} S_b^{-1}) into the group
/// matrices (which must be sized and zeroed by the caller). OpenMP-parallel
/// over the rows of each block; every (a, a') cell is written by one thread
/// and blocks are visited in order, so results are bitwise reproducible.
void assemble_schur(const std::vector<SchurBlockData>& blocks, const SchurLayout& layout,
                    const std::vector<Eigen::MatrixXd>& X, const std::vector<Eigen::MatrixXd>& S_inv,
                    std::vector<Eigen::MatrixXd>& H);

/// Serial reference: forms each A_{b,a} densely and evaluates the trace with
/// plain matrix products. Kept for tests and the benchmark.
void assemble_schur_reference(const SDPProblem& problem, const SchurLayout& layout,
                              const std::vector<Eigen::MatrixXd>& X,
                              const std::vector<Eigen::MatrixXd>& S_inv,
                              std::vector<Eigen::MatrixXd>& H);

/// Dense A_b(y) for block b.
Eigen::MatrixXd block_matrix(const Block& block, const Eigen::VectorXd& y);
/// Dense A_{b,a} (linear part only) for the var matrix `term`.
Eigen::MatrixXd var_matrix(const Block& block, const VarMatrix& term);

}  // namespace ratopt
