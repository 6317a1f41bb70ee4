#include "ratopt/sdp_problem.hpp"

#include <algorithm>
#include <tuple>

#include "ratopt/error.hpp"

namespace ratopt {

void SDPProblem::validate() const {
  if (num_vars < 0) throw ModelingError("negative variable count");
  if (static_cast<int>(objective.size()) != num_vars) {
    throw ModelingError("objective length does not match the variable count");
  }
  auto check_entries = [](const std::vector<MatrixEntry>& entries, const Block& b) {
    for (const auto& e : entries) {
      if (e.row < 0 || e.col < e.row || e.col >= b.size) {
        throw ModelingError("block entry outside the upper triangle");
      }
      if (b.diagonal && e.row != e.col) throw ModelingError("off-diagonal entry in diagonal block");
    }
  };
  for (const auto& b : blocks) {
    if (b.size <= 0) throw ModelingError("block size must be positive");
    check_entries(b.constant, b);
    int prev = -1;
    for (const auto& t : b.terms) {
      if (t.var <= prev || t.var >= num_vars) {
        throw ModelingError("block variable matrices must be sorted and in range");
      }
      prev = t.var;
      check_entries(t.entries, b);
    }
  }
  for (const auto& row : equalities) {
    if (row.coeffs.empty()) throw ModelingError("empty equality row");
    for (const auto& [v, c] : row.coeffs) {
      if (v < 0 || v >= num_vars) throw ModelingError("equality variable out of range");
    }
  }
}

void BlockBuilder::add(int var, int row, int col, double value) {
  if (row > col) std::swap(row, col);
  triplets_.push_back({var, row, col, value});
}

Block BlockBuilder::build() const {
  auto sorted = triplets_;
  std::sort(sorted.begin(), sorted.end(), [](const Triplet& a, const Triplet& b) {
    return std::tie(a.var, a.row, a.col) < std::tie(b.var, b.row, b.col);
  });
  Block block;
  block.size = size_;
  block.diagonal = diagonal_;
  std::size_t i = 0;
  while (i < sorted.size()) {
    const int var = sorted[i].var;
    std::vector<MatrixEntry> entries;
    while (i < sorted.size() && sorted[i].var == var) {
      MatrixEntry e{sorted[i].row, sorted[i].col, 0.0};
      while (i < sorted.size() && sorted[i].var == var && sorted[i].row == e.row &&
             sorted[i].col == e.col) {
        e.value += sorted[i].value;
        ++i;
      }
      if (e.value != 0.0) entries.push_back(e);
    }
    if (entries.empty()) continue;
    if (var < 0) {
      block.constant = std::move(entries);
    } else {
      block.terms.push_back({var, std::move(entries)});
    }
  }
  return block;
}

std::vector<double> evaluate_block(const Block& block, const std::vector<double>& y) {
  const int s = block.size;
  std::vector<double> m(static_cast<std::size_t>(s) * s, 0.0);
  auto put = [&](const MatrixEntry& e, double scale) {
    m[e.row * s + e.col] += scale * e.value;
    if (e.row != e.col) m[e.col * s + e.row] += scale * e.value;
  };
  for (const auto& e : block.constant) put(e, 1.0);
  for (const auto& t : block.terms) {
    for (const auto& e : t.entries) put(e, y.at(t.var));
  }
  return m;
}

}  // namespace ratopt
