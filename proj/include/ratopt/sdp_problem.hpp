#pragma once

#include <string>
#include <utility>
#include <vector>

namespace ratopt {

/// Upper-triangular entry (row <= col), 0-based.
struct MatrixEntry {
  int row = 0;
  int col = 0;
  double value = 0.0;

  friend bool operator==(const MatrixEntry&, const MatrixEntry&) = default;
};

/// Coefficient matrix A_{b,a} of scalar variable `var` in one block.
struct VarMatrix {
  int var = 0;
  std::vector<MatrixEntry> entries;

  friend bool operator==(const VarMatrix&, const VarMatrix&) = default;
};

/// Affine symmetric map y -> A_0 + sum_a y_a A_a constrained to be PSD.
/// A diagonal block only ever carries diagonal entries (SDPA negative size).
struct Block {
  int size = 0;
  bool diagonal = false;
  std::vector<MatrixEntry> constant;
  std::vector<VarMatrix> terms;  // ascending var, no duplicates

  friend bool operator==(const Block&, const Block&) = default;
};

struct EqualityRow {
  std::vector<std::pair<int, double>> coeffs;  // ascending var
  double rhs = 0.0;

  friend bool operator==(const EqualityRow&, const EqualityRow&) = default;
};

/// min c^T y  s.t.  A_b(y) PSD for every block,  B y = b.
struct SDPProblem {
  int num_vars = 0;
  std::vector<double> objective;
  std::vector<Block> blocks;
  std::vector<EqualityRow> equalities;

  /// Throws ModelingError on out-of-range indices, lower-triangular entries,
  /// empty equality rows or unsorted/duplicate variable matrices.
  void validate() const;

  friend bool operator==(const SDPProblem&, const SDPProblem&) = default;
};

/// Accumulates triplets for a block and sorts/merges them into canonical form.
class BlockBuilder {
 public:
  explicit BlockBuilder(int size, bool diagonal = false) : size_(size), diagonal_(diagonal) {}

  /// Adds value at (row, col) of A_var (var < 0 means the constant matrix).
  /// Either triangle may be given; it is folded to the upper one.
  void add(int var, int row, int col, double value);

  Block build() const;

 private:
  struct Triplet {
    int var, row, col;
    double value;
  };
  int size_;
  bool diagonal_;
  std::vector<Triplet> triplets_;
};

/// Evaluates A_b(y) densely (row-major, size*size) for checks and tests.
std::vector<double> evaluate_block(const Block& block, const std::vector<double>& y);

}  // namespace ratopt
