#pragma once

#include "thermokam/rational.hpp"

#include <json.hpp>

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace thermokam {

/// Names and grading weights of the variables of a polynomial ring.
class VariableTable {
 public:
  struct Variable {
    std::string name;
    int weight = 1;
    bool operator==(const Variable&) const = default;
  };

  explicit VariableTable(std::vector<Variable> variables);

  std::size_t size() const { return variables_.size(); }
  const Variable& operator[](std::size_t i) const { return variables_[i]; }
  const std::vector<Variable>& variables() const { return variables_; }
  /// Index of a variable by name; throws std::out_of_range if absent.
  std::size_t index(const std::string& name) const;

  bool operator==(const VariableTable&) const = default;

 private:
  std::vector<Variable> variables_;
};

using TablePtr = std::shared_ptr<const VariableTable>;
TablePtr make_table(std::vector<VariableTable::Variable> variables);

using Exponents = std::vector<int>;

/// Truncated multivariate polynomial over exact rationals, graded by the
/// weights of its variable table. No stored monomial has weighted degree
/// above `order()`; products drop every term above it.
class GradedPoly {
 public:
  using TermMap = std::map<Exponents, Rational>;

  GradedPoly(TablePtr table, int order);

  static GradedPoly constant(TablePtr table, int order, const Rational& value);
  static GradedPoly variable(TablePtr table, int order, const std::string& name);
  static GradedPoly monomial(TablePtr table, int order, Exponents exponents, const Rational& coefficient);

  const VariableTable& variables() const { return *table_; }
  const TablePtr& table() const { return table_; }
  int order() const { return order_; }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  int weighted_degree(const Exponents& e) const;
  /// Lowest weighted degree present; order() + 1 for the zero polynomial.
  int valuation() const;
  Rational coefficient(const Exponents& e) const;
  /// Coefficient addressed by variable names, e.g. {{"x", 3}, {"U", 1}}.
  Rational coefficient(const std::map<std::string, int>& powers) const;

  GradedPoly homogeneous_part(int degree) const;
  /// Same table, order lowered to `order` (terms above it dropped).
  GradedPoly truncated(int order) const;
  GradedPoly derivative(std::size_t var) const;
  GradedPoly derivative(const std::string& name) const { return derivative(table_->index(name)); }

  template <class Scalar>
  Scalar evaluate(std::span<const Scalar> point) const;

  GradedPoly& operator+=(const GradedPoly& rhs);
  GradedPoly& operator-=(const GradedPoly& rhs);
  GradedPoly& operator*=(const GradedPoly& rhs);
  GradedPoly& operator*=(const Rational& s);

  friend GradedPoly operator+(GradedPoly a, const GradedPoly& b) { return a += b; }
  friend GradedPoly operator-(GradedPoly a, const GradedPoly& b) { return a -= b; }
  friend GradedPoly operator*(GradedPoly a, const GradedPoly& b) { return a *= b; }
  friend GradedPoly operator*(GradedPoly a, const Rational& s) { return a *= s; }
  friend GradedPoly operator*(const Rational& s, GradedPoly a) { return a *= s; }
  GradedPoly operator-() const;
  GradedPoly pow(int k) const;

  bool operator==(const GradedPoly& rhs) const;

  /// Adds c * x^e, dropping it if it exceeds the order.
  void add_term(const Exponents& e, const Rational& c);

  /// Terms in canonical order: ascending weighted degree, then lexicographic
  /// with higher powers of earlier variables first.
  std::vector<std::pair<Exponents, Rational>> canonical_terms() const;
  std::string to_string() const;
  /// {"variables": [...], "order": N, "terms": {"e1,e2,..": [num, den]}}
  nlohmann::json to_json() const;
  static GradedPoly from_json(const nlohmann::json& j);

 private:
  void check_compatible(const GradedPoly& rhs) const;

  TablePtr table_;
  int order_;
  TermMap terms_;
};

/// Coordinate substitution: one image polynomial per source variable, all in
/// a common target ring.
struct SeriesMap {
  std::vector<GradedPoly> images;
};

/// Substitutes `sub` into `f`. Each image of a weight-d variable must have
/// valuation >= d, and `f` must be known at least to the target order.
GradedPoly compose(const GradedPoly& f, const SeriesMap& sub);

/// Identity substitution of a ring into itself.
SeriesMap identity_map(const TablePtr& table, int order);

enum class StdSeries { log_one_minus, pow_neg2, binomial };

/// Maclaurin series in a single weight-1 variable `name`:
/// ln(1-t), (1-t)^-2 or (1-t)^exponent.
GradedPoly std_series(StdSeries kind, int order, const Rational& exponent = Rational(0),
                      const std::string& name = "t");

/// A linear unknown of an order-by-order solve, tagged with the weighted
/// degree at which it first enters the residual.
struct Unknown {
  std::string name;
  int degree = 0;
};

/// Residual identities as a function of the current unknown values.
using ResidualFunction = std::function<std::vector<GradedPoly>(std::span<const Rational>)>;

class TriangularSolveError : public std::runtime_error {
 public:
  enum class Kind { inconsistent, underdetermined };
  TriangularSolveError(Kind kind, int degree, std::vector<std::string> residual_monomials);

  Kind kind() const { return kind_; }
  int degree() const { return degree_; }
  const std::vector<std::string>& residual_monomials() const { return monomials_; }

 private:
  Kind kind_;
  int degree_;
  std::vector<std::string> monomials_;
};

/// Solves a system that is block-triangular by weighted degree: the degree-d
/// part of every residual is affine in the degree-d unknowns once all lower
/// unknowns are fixed, and independent of higher ones. Throws
/// TriangularSolveError naming the first degree that fails.
std::vector<Rational> solve_triangular(std::span<const Unknown> unknowns, const ResidualFunction& residual);

/// Dense univariate polynomial with exact coefficients, lowest degree first.
class RationalPolynomial {
 public:
  RationalPolynomial() = default;
  explicit RationalPolynomial(std::vector<Rational> coefficients);

  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  bool is_zero() const { return coeffs_.empty(); }
  const std::vector<Rational>& coefficients() const { return coeffs_; }
  Rational coefficient(int k) const;
  /// Terms in ascending degree, e.g. "-1/12 - 13/6*x - 5/4*x^2".
  std::string to_string(const std::string& var = "x") const;

  Rational operator()(const Rational& x) const;
  double operator()(double x) const;
  RationalPolynomial derivative() const;

  friend RationalPolynomial operator-(const RationalPolynomial& a, const RationalPolynomial& b);
  friend RationalPolynomial operator*(const RationalPolynomial& a, const RationalPolynomial& b);
  bool operator==(const RationalPolynomial&) const = default;

  /// Euclidean division; throws on division by zero.
  static std::pair<RationalPolynomial, RationalPolynomial> divmod(const RationalPolynomial& a,
                                                                 const RationalPolynomial& b);
  static RationalPolynomial gcd(RationalPolynomial a, RationalPolynomial b);
  RationalPolynomial squarefree() const;
  /// Number of distinct real roots in (lo, hi] by Sturm's theorem.
  int count_real_roots(const Rational& lo, const Rational& hi) const;
  /// Exact interpolation through (xs[i], ys[i]) with distinct xs.
  static RationalPolynomial interpolate(std::span<const Rational> xs, std::span<const Rational> ys);

 private:
  void normalize();
  std::vector<Rational> coeffs_;
};

template <class Scalar>
Scalar GradedPoly::evaluate(std::span<const Scalar> point) const {
  if (point.size() != table_->size()) throw std::invalid_argument("GradedPoly::evaluate: dimension mismatch");
  Scalar sum(0);
  for (const auto& [e, c] : terms_) {
    Scalar term = to_scalar<Scalar>(c);
    for (std::size_t i = 0; i < e.size(); ++i) {
      for (int k = 0; k < e[i]; ++k) term *= point[i];
    }
    sum += term;
  }
  return sum;
}

}  // namespace thermokam
