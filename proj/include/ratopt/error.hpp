#pragma once

#include <stdexcept>
#include <string>

namespace ratopt {

/// Inconsistent problem data: dimension mismatch, bad sparsity pattern,
/// missing bounds that the formulation needs.
class ModelingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Relaxation order too small for the problem degrees.
class OrderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed SDPA file or problem file. Carries a 1-based line (and column
/// when known, 0 otherwise).
class ParseError : public std::runtime_error {
 public:
  enum class Kind {
    Syntax,
    UndeclaredIdentifier,
    MalformedExponent,
    MisplacedDivision,
    EmptyObjective,
    Header,
    IndexOutOfRange,
    NonNumeric,
  };

  ParseError(Kind kind, int line, int column, const std::string& what)
      : std::runtime_error(format(line, column, what)),
        kind_(kind),
        line_(line),
        column_(column) {}

  Kind kind() const { return kind_; }
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  static std::string format(int line, int column, const std::string& what) {
    std::string s = "line " + std::to_string(line);
    if (column > 0) s += ", column " + std::to_string(column);
    return s + ": " + what;
  }

  Kind kind_;
  int line_;
  int column_;
};

}  // namespace ratopt
