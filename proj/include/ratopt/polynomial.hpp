#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace ratopt {

/// Exponent vector x^alpha over a fixed ambient dimension.
class Monomial {
 public:
  Monomial() = default;
  explicit Monomial(std::size_t dimension) : exponents_(dimension, 0) {}
  explicit Monomial(std::vector<int> exponents);

  static Monomial unit(std::size_t dimension, std::size_t variable);

  std::size_t dimension() const { return exponents_.size(); }
  int degree() const { return degree_; }
  int operator[](std::size_t j) const { return exponents_[j]; }
  const std::vector<int>& exponents() const { return exponents_; }

  Monomial operator*(const Monomial& other) const;

  /// Variables with a positive exponent, ascending.
  std::vector<int> support() const;

  friend bool operator==(const Monomial& a, const Monomial& b) {
    return a.exponents_ == b.exponents_;
  }

 private:
  std::vector<int> exponents_;
  int degree_ = 0;
};

/// Graded lexicographic order: lower degree first, then x1 > x2 > ... within a
/// degree, so monomials_up_to(2, 1) is [1, x1, x2].
struct GradedLexLess {
  bool operator()(const Monomial& a, const Monomial& b) const;
};

struct MonomialHash {
  std::size_t operator()(const Monomial& m) const noexcept;
};

/// All monomials in `dimension` variables of degree <= max_degree, graded lex.
std::vector<Monomial> monomials_up_to(std::size_t dimension, int max_degree);

/// Binomial coefficient C(n, k) as a size_t (no overflow checks beyond what
/// the relaxation sizes need).
std::size_t binomial(std::size_t n, std::size_t k);

class Polynomial {
 public:
  using TermMap = std::map<Monomial, double, GradedLexLess>;

  Polynomial() = default;
  explicit Polynomial(std::size_t dimension) : dimension_(dimension) {}

  static Polynomial constant(std::size_t dimension, double value);
  static Polynomial variable(std::size_t dimension, std::size_t j);
  static Polynomial monomial(const Monomial& m, double coefficient = 1.0);

  std::size_t dimension() const { return dimension_; }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  /// Max term degree; 0 for the zero polynomial.
  int degree() const;
  double coefficient(const Monomial& m) const;
  /// Variables that occur in some term, ascending.
  std::vector<int> support() const;

  /// Adds c * m, pruning the entry if it cancels to exactly zero.
  void add_term(const Monomial& m, double c);

  Polynomial operator+(const Polynomial& other) const;
  Polynomial operator-(const Polynomial& other) const;
  Polynomial operator*(const Polynomial& other) const;
  Polynomial operator*(double scalar) const;
  Polynomial operator-() const { return *this * -1.0; }
  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator-=(const Polynomial& other);

  Polynomial pow(int exponent) const;

  double evaluate(std::span<const double> x) const;

  /// d/dx_j.
  Polynomial partial(std::size_t j) const;
  std::vector<Polynomial> gradient() const;

  /// Re-expresses the polynomial over a subset of the variables. Every
  /// variable in the support must appear in `variables`; the result has
  /// dimension variables.size() with variable i -> variables[i].
  Polynomial restrict_to(std::span<const int> variables) const;
  /// Inverse of restrict_to: embeds into `dimension` variables.
  Polynomial embed(std::size_t dimension, std::span<const int> variables) const;

  /// Expanded form such as "3*x1^2 - x1*x2 + 0.5"; coefficients print with
  /// shortest round-trip precision so parsing the string back is exact.
  std::string to_string(std::span<const std::string> names = {}) const;

  friend bool operator==(const Polynomial& a, const Polynomial& b) {
    return a.dimension_ == b.dimension_ && a.terms_ == b.terms_;
  }

 private:
  std::size_t dimension_ = 0;
  TermMap terms_;
};

inline Polynomial operator*(double scalar, const Polynomial& p) { return p * scalar; }

Polynomial multiply(const Polynomial& a, const Polynomial& b);
Polynomial add(const Polynomial& a, const Polynomial& b);

/// Affine change of variables x_j = a_j z_j + b_j.
struct VariableScaling {
  std::vector<double> multiplier;
  std::vector<double> offset;

  static VariableScaling identity(std::size_t dimension);

  std::size_t dimension() const { return multiplier.size(); }
  /// The map z_j = (x_j - b_j) / a_j.
  VariableScaling inverse() const;
  /// x = a * z + b.
  std::vector<double> to_original(std::span<const double> z) const;
  /// z = (x - b) / a.
  std::vector<double> to_scaled(std::span<const double> x) const;
};

/// p(a*z + b) expanded in the monomial basis of z.
Polynomial apply_scaling(const Polynomial& p, const VariableScaling& s);

std::string format_double(double value);

}  // namespace ratopt
