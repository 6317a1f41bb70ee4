#include "ratopt/polynomial.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ratopt/error.hpp"

namespace ratopt {

namespace {

void require_same_dimension(std::size_t a, std::size_t b, const char* op) {
  if (a != b) {
    throw ModelingError(std::string(op) + ": dimension mismatch (" + std::to_string(a) +
                        " vs " + std::to_string(b) + ")");
  }
}

double int_power(double base, int e) {
  double r = 1.0;
  while (e > 0) {
    if (e & 1) r *= base;
    base *= base;
    e >>= 1;
  }
  return r;
}

void enumerate_degree(std::size_t dimension, int degree, std::size_t position,
                      std::vector<int>& current, std::vector<Monomial>& out) {
  if (position + 1 == dimension) {
    current[position] = degree;
    out.emplace_back(current);
    current[position] = 0;
    return;
  }
  for (int e = degree; e >= 0; --e) {
    current[position] = e;
    enumerate_degree(dimension, degree - e, position + 1, current, out);
  }
  current[position] = 0;
}

}  // namespace

Monomial::Monomial(std::vector<int> exponents) : exponents_(std::move(exponents)) {
  for (int e : exponents_) {
    if (e < 0) throw ModelingError("negative exponent in monomial");
    degree_ += e;
  }
}

Monomial Monomial::unit(std::size_t dimension, std::size_t variable) {
  std::vector<int> e(dimension, 0);
  e.at(variable) = 1;
  return Monomial(std::move(e));
}

Monomial Monomial::operator*(const Monomial& other) const {
  require_same_dimension(dimension(), other.dimension(), "monomial product");
  std::vector<int> e(exponents_);
  for (std::size_t j = 0; j < e.size(); ++j) e[j] += other.exponents_[j];
  return Monomial(std::move(e));
}

std::vector<int> Monomial::support() const {
  std::vector<int> s;
  for (std::size_t j = 0; j < exponents_.size(); ++j) {
    if (exponents_[j] > 0) s.push_back(static_cast<int>(j));
  }
  return s;
}

bool GradedLexLess::operator()(const Monomial& a, const Monomial& b) const {
  if (a.degree() != b.degree()) return a.degree() < b.degree();
  // Within a degree, larger leading exponents come first.
  return a.exponents() > b.exponents();
}

std::size_t MonomialHash::operator()(const Monomial& m) const noexcept {
  std::size_t h = 0xcbf29ce484222325ULL;
  for (int e : m.exponents()) {
    h ^= static_cast<std::size_t>(e) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

std::vector<Monomial> monomials_up_to(std::size_t dimension, int max_degree) {
  std::vector<Monomial> out;
  if (dimension == 0 || max_degree < 0) return out;
  out.reserve(binomial(dimension + static_cast<std::size_t>(max_degree), dimension));
  std::vector<int> current(dimension, 0);
  for (int d = 0; d <= max_degree; ++d) enumerate_degree(dimension, d, 0, current, out);
  return out;
}

std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

Polynomial Polynomial::constant(std::size_t dimension, double value) {
  Polynomial p(dimension);
  p.add_term(Monomial(dimension), value);
  return p;
}

Polynomial Polynomial::variable(std::size_t dimension, std::size_t j) {
  Polynomial p(dimension);
  p.add_term(Monomial::unit(dimension, j), 1.0);
  return p;
}

Polynomial Polynomial::monomial(const Monomial& m, double coefficient) {
  Polynomial p(m.dimension());
  p.add_term(m, coefficient);
  return p;
}

int Polynomial::degree() const {
  // Terms are graded, so the last key has the top degree.
  return terms_.empty() ? 0 : terms_.rbegin()->first.degree();
}

double Polynomial::coefficient(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

std::vector<int> Polynomial::support() const {
  std::vector<bool> used(dimension_, false);
  for (const auto& [m, c] : terms_) {
    for (std::size_t j = 0; j < dimension_; ++j) used[j] = used[j] || m[j] > 0;
  }
  std::vector<int> s;
  for (std::size_t j = 0; j < dimension_; ++j) {
    if (used[j]) s.push_back(static_cast<int>(j));
  }
  return s;
}

void Polynomial::add_term(const Monomial& m, double c) {
  require_same_dimension(dimension_, m.dimension(), "add_term");
  if (c == 0.0) return;
  auto [it, inserted] = terms_.try_emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  require_same_dimension(dimension_, other.dimension_, "add");
  for (const auto& [m, c] : other.terms_) add_term(m, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) {
  require_same_dimension(dimension_, other.dimension_, "subtract");
  for (const auto& [m, c] : other.terms_) add_term(m, -c);
  return *this;
}

Polynomial Polynomial::operator+(const Polynomial& other) const {
  Polynomial r(*this);
  r += other;
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& other) const {
  Polynomial r(*this);
  r -= other;
  return r;
}

Polynomial Polynomial::operator*(const Polynomial& other) const {
  require_same_dimension(dimension_, other.dimension_, "multiply");
  Polynomial r(dimension_);
  for (const auto& [ma, ca] : terms_) {
    for (const auto& [mb, cb] : other.terms_) r.add_term(ma * mb, ca * cb);
  }
  return r;
}

Polynomial Polynomial::operator*(double scalar) const {
  Polynomial r(dimension_);
  if (scalar == 0.0) return r;
  for (const auto& [m, c] : terms_) r.add_term(m, c * scalar);
  return r;
}

Polynomial Polynomial::pow(int exponent) const {
  if (exponent < 0) throw ModelingError("negative polynomial power");
  Polynomial r = constant(dimension_, 1.0);
  for (int i = 0; i < exponent; ++i) r = r * *this;
  return r;
}

double Polynomial::evaluate(std::span<const double> x) const {
  require_same_dimension(dimension_, x.size(), "evaluate");
  double sum = 0.0;
  for (const auto& [m, c] : terms_) {
    double v = c;
    for (std::size_t j = 0; j < dimension_; ++j) {
      if (m[j] > 0) v *= int_power(x[j], m[j]);
    }
    sum += v;
  }
  return sum;
}

Polynomial Polynomial::partial(std::size_t j) const {
  if (j >= dimension_) throw ModelingError("partial: variable index out of range");
  Polynomial r(dimension_);
  for (const auto& [m, c] : terms_) {
    if (m[j] == 0) continue;
    std::vector<int> e = m.exponents();
    double factor = e[j];
    e[j] -= 1;
    r.add_term(Monomial(std::move(e)), c * factor);
  }
  return r;
}

std::vector<Polynomial> Polynomial::gradient() const {
  std::vector<Polynomial> g;
  g.reserve(dimension_);
  for (std::size_t j = 0; j < dimension_; ++j) g.push_back(partial(j));
  return g;
}

Polynomial Polynomial::restrict_to(std::span<const int> variables) const {
  std::vector<int> position(dimension_, -1);
  for (std::size_t i = 0; i < variables.size(); ++i) {
    if (variables[i] < 0 || static_cast<std::size_t>(variables[i]) >= dimension_) {
      throw ModelingError("restrict_to: variable index out of range");
    }
    position[variables[i]] = static_cast<int>(i);
  }
  Polynomial r(variables.size());
  for (const auto& [m, c] : terms_) {
    std::vector<int> e(variables.size(), 0);
    for (std::size_t j = 0; j < dimension_; ++j) {
      if (m[j] == 0) continue;
      if (position[j] < 0) {
        throw ModelingError("restrict_to: polynomial uses variable " + std::to_string(j + 1) +
                            " outside the requested subset");
      }
      e[position[j]] = m[j];
    }
    r.add_term(Monomial(std::move(e)), c);
  }
  return r;
}

Polynomial Polynomial::embed(std::size_t dimension, std::span<const int> variables) const {
  require_same_dimension(dimension_, variables.size(), "embed");
  Polynomial r(dimension);
  for (const auto& [m, c] : terms_) {
    std::vector<int> e(dimension, 0);
    for (std::size_t i = 0; i < variables.size(); ++i) e.at(variables[i]) = m[i];
    r.add_term(Monomial(std::move(e)), c);
  }
  return r;
}

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string Polynomial::to_string(std::span<const std::string> names) const {
  if (terms_.empty()) return "0";
  auto name = [&](std::size_t j) {
    return j < names.size() ? names[j] : "x" + std::to_string(j + 1);
  };
  std::ostringstream os;
  bool first = true;
  for (const auto& [m, c] : terms_) {
    double mag = std::abs(c);
    if (first) {
      if (c < 0) os << "-";
    } else {
      os << (c < 0 ? " - " : " + ");
    }
    first = false;
    bool wrote = false;
    if (mag != 1.0 || m.degree() == 0) {
      os << format_double(mag);
      wrote = true;
    }
    for (std::size_t j = 0; j < dimension_; ++j) {
      if (m[j] == 0) continue;
      if (wrote) os << "*";
      os << name(j);
      if (m[j] > 1) os << "^" << m[j];
      wrote = true;
    }
  }
  return os.str();
}

Polynomial multiply(const Polynomial& a, const Polynomial& b) { return a * b; }
Polynomial add(const Polynomial& a, const Polynomial& b) { return a + b; }

VariableScaling VariableScaling::identity(std::size_t dimension) {
  return {std::vector<double>(dimension, 1.0), std::vector<double>(dimension, 0.0)};
}

VariableScaling VariableScaling::inverse() const {
  VariableScaling inv;
  inv.multiplier.resize(dimension());
  inv.offset.resize(dimension());
  for (std::size_t j = 0; j < dimension(); ++j) {
    if (multiplier[j] == 0.0) throw ModelingError("scaling multiplier must be nonzero");
    inv.multiplier[j] = 1.0 / multiplier[j];
    inv.offset[j] = -offset[j] / multiplier[j];
  }
  return inv;
}

std::vector<double> VariableScaling::to_original(std::span<const double> z) const {
  require_same_dimension(dimension(), z.size(), "scaling");
  std::vector<double> x(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) x[j] = multiplier[j] * z[j] + offset[j];
  return x;
}

std::vector<double> VariableScaling::to_scaled(std::span<const double> x) const {
  require_same_dimension(dimension(), x.size(), "scaling");
  std::vector<double> z(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) z[j] = (x[j] - offset[j]) / multiplier[j];
  return z;
}

Polynomial apply_scaling(const Polynomial& p, const VariableScaling& s) {
  require_same_dimension(p.dimension(), s.dimension(), "apply_scaling");
  const std::size_t n = p.dimension();
  for (double a : s.multiplier) {
    if (a == 0.0) throw ModelingError("scaling multiplier must be nonzero");
  }
  // Powers of each substituted variable, built lazily.
  std::vector<std::vector<Polynomial>> powers(n);
  auto power = [&](std::size_t j, int e) -> const Polynomial& {
    auto& cache = powers[j];
    if (cache.empty()) cache.push_back(Polynomial::constant(n, 1.0));
    while (static_cast<int>(cache.size()) <= e) {
      Polynomial lin = Polynomial::variable(n, j) * s.multiplier[j];
      lin.add_term(Monomial(n), s.offset[j]);
      cache.push_back(cache.back() * lin);
    }
    return cache[e];
  };
  Polynomial r(n);
  for (const auto& [m, c] : p.terms()) {
    Polynomial t = Polynomial::constant(n, c);
    for (std::size_t j = 0; j < n; ++j) {
      if (m[j] > 0) t = t * power(j, m[j]);
    }
    r += t;
  }
  return r;
}

}  // namespace ratopt
