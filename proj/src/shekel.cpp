#include "ratopt/shekel.hpp"

#include <charconv>
#include <sstream>
#include <string>
#include <vector>

#include "ratopt/error.hpp"

namespace ratopt {

ProblemFile shekel_problem(std::string_view data) {
  using Kind = ParseError::Kind;
  std::vector<std::vector<double>> rows;
  std::vector<int> line_of;
  int line_no = 0;
  std::size_t start = 0;
  while (start < data.size()) {
    std::size_t end = data.find('\n', start);
    if (end == std::string_view::npos) end = data.size();
    std::string_view line = data.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    std::vector<double> row;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      if (i == line.size()) break;
      std::size_t j = i;
      while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(line.data() + i, line.data() + j, v);
      if (ec != std::errc() || ptr != line.data() + j) {
        throw ParseError(Kind::NonNumeric, line_no, static_cast<int>(i) + 1,
                         "'" + std::string(line.substr(i, j - i)) + "' is not a number");
      }
      row.push_back(v);
      i = j;
    }
    if (!row.empty()) {
      rows.push_back(std::move(row));
      line_of.push_back(line_no);
    }
  }
  if (rows.size() < 2) throw ParseError(Kind::Header, line_no, 0, "need at least one centre row and the c row");
  const std::size_t N = rows.size() - 1;
  const std::size_t n = rows[0].size();
  for (std::size_t i = 1; i < N; ++i) {
    if (rows[i].size() != n) {
      throw ParseError(Kind::Syntax, line_of[i], 0,
                       "centre row has " + std::to_string(rows[i].size()) + " entries, expected " + std::to_string(n));
    }
  }
  if (rows[N].size() != N) {
    throw ParseError(Kind::Syntax, line_of[N], 0,
                     "c row has " + std::to_string(rows[N].size()) + " entries, expected one per centre (" +
                         std::to_string(N) + ")");
  }

  ProblemFile file;
  for (std::size_t j = 0; j < n; ++j) file.variables.push_back("x" + std::to_string(j + 1));
  file.sense = Sense::Minimize;
  for (std::size_t i = 0; i < N; ++i) {
    if (!(rows[N][i] > 0.0)) throw ParseError(Kind::Syntax, line_of[N], 0, "c_i must be positive");
    Polynomial q = Polynomial::constant(n, rows[N][i]);
    for (std::size_t j = 0; j < n; ++j) {
      const Polynomial d = Polynomial::variable(n, j) - Polynomial::constant(n, rows[i][j]);
      q += d * d;
    }
    file.terms.push_back({Polynomial::constant(n, -1.0), q});
  }
  return file;
}

}  // namespace ratopt
