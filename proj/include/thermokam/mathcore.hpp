#pragma once

#include "thermokam/linalg.hpp"

#include <json.hpp>

#include <Eigen/Dense>
#include <boost/math/constants/constants.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <variant>
#include <vector>

namespace thermokam {

/// Constant inner product on R^n. Covectors are measured with the dual
/// metric g^-1; `sharp` and `flat` convert between the two.
class FlatMetric {
 public:
  explicit FlatMetric(Eigen::MatrixXd g);
  static FlatMetric identity(Eigen::Index dim);

  Eigen::Index dim() const { return g_.rows(); }
  const Eigen::MatrixXd& g() const { return g_; }
  const Eigen::MatrixXd& dual() const { return g_inv_; }
  bool is_identity() const { return identity_; }

  /// Covector -> vector (index raising).
  template <class Derived>
  typename Derived::PlainObject sharp(const Eigen::MatrixBase<Derived>& covector) const {
    using Scalar = typename Derived::Scalar;
    check_dim(covector.size());
    if (identity_) return covector;
    return g_inv_.cast<Scalar>() * covector;
  }
  /// Vector -> covector (index lowering).
  template <class Derived>
  typename Derived::PlainObject flat(const Eigen::MatrixBase<Derived>& vector) const {
    using Scalar = typename Derived::Scalar;
    check_dim(vector.size());
    if (identity_) return vector;
    return g_.cast<Scalar>() * vector;
  }

  void check_dim(Eigen::Index n) const {
    if (n != dim()) throw std::invalid_argument("dimension mismatch with metric");
  }

 private:
  Eigen::MatrixXd g_;
  Eigen::MatrixXd g_inv_;
  bool identity_ = false;
};

/// Dual inner product of two covectors.
template <class DerivedA, class DerivedB>
typename DerivedA::Scalar inner(const FlatMetric& metric, const Eigen::MatrixBase<DerivedA>& a,
                                const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  metric.check_dim(a.size());
  metric.check_dim(b.size());
  if (metric.is_identity()) return a.dot(b);
  return a.dot(metric.dual().cast<Scalar>() * b);
}

template <class Derived>
typename Derived::Scalar norm2(const FlatMetric& metric, const Eigen::MatrixBase<Derived>& a) {
  return inner(metric, a, a);
}

/// Trigonometric polynomial on R^n / Z^n:
///   V(q) = sum_k  c_k cos(2 pi k.q) + s_k sin(2 pi k.q).
class TorusPotential {
 public:
  struct Mode {
    Eigen::VectorXi k;
    double cos = 0.0;
    double sin = 0.0;
  };

  TorusPotential(Eigen::Index dim, std::vector<Mode> modes);
  static TorusPotential zero(Eigen::Index dim) { return TorusPotential(dim, {}); }

  Eigen::Index dim() const { return dim_; }
  const std::vector<Mode>& modes() const { return modes_; }

  template <class Derived>
  typename Derived::Scalar value(const Eigen::MatrixBase<Derived>& q) const;
  template <class Derived>
  typename Derived::PlainObject gradient(const Eigen::MatrixBase<Derived>& q) const;

 private:
  Eigen::Index dim_;
  std::vector<Mode> modes_;
};

/// V(q) = k/2 |q|^2 in the Euclidean coordinates of R^n. Not periodic; used
/// for the oscillator reduction of the Nose-Hoover equations.
class HarmonicPotential {
 public:
  HarmonicPotential(Eigen::Index dim, double stiffness);

  Eigen::Index dim() const { return dim_; }
  double stiffness() const { return stiffness_; }

  template <class Derived>
  typename Derived::Scalar value(const Eigen::MatrixBase<Derived>& q) const {
    using Scalar = typename Derived::Scalar;
    return Scalar(0.5 * stiffness_) * q.squaredNorm();
  }
  template <class Derived>
  typename Derived::PlainObject gradient(const Eigen::MatrixBase<Derived>& q) const {
    using Scalar = typename Derived::Scalar;
    return Scalar(stiffness_) * q;
  }

 private:
  Eigen::Index dim_;
  double stiffness_;
};

using Potential = std::variant<TorusPotential, HarmonicPotential>;

inline Eigen::Index potential_dim(const Potential& v) {
  return std::visit([](const auto& p) { return p.dim(); }, v);
}

template <class Derived>
typename Derived::Scalar potential_value(const Potential& v, const Eigen::MatrixBase<Derived>& q) {
  return std::visit([&](const auto& p) { return p.value(q); }, v);
}

template <class Derived>
typename Derived::PlainObject potential_gradient(const Potential& v, const Eigen::MatrixBase<Derived>& q) {
  return std::visit([&](const auto& p) -> typename Derived::PlainObject { return p.gradient(q); }, v);
}

/// {"dim": n, "modes": [{"k": [..], "cos": a, "sin": b}]}, or
/// {"kind": "harmonic", "dim": n, "stiffness": k}.
Potential potential_from_json(const nlohmann::json& j);
nlohmann::json potential_to_json(const Potential& v);

/// Covector of unit dual length.
class UnitCovector {
 public:
  /// Normalizes `components` under the dual metric.
  UnitCovector(const FlatMetric& metric, const Eigen::VectorXd& components);
  /// The covector metric.flat(e_i) / |e_i|, exact when the metric is the identity.
  static UnitCovector axis(const FlatMetric& metric, Eigen::Index i);

  const Eigen::VectorXd& components() const { return c_; }
  Eigen::Index dim() const { return c_.size(); }
  bool exact() const { return exact_; }
  /// The rank-one map C C' : covector v -> <C, v> C.
  Eigen::MatrixXd projector(const FlatMetric& metric) const;

 private:
  UnitCovector() = default;
  Eigen::VectorXd c_;
  bool exact_ = false;
};

// ---------------------------------------------------------------------------

template <class Derived>
typename Derived::Scalar TorusPotential::value(const Eigen::MatrixBase<Derived>& q) const {
  using Scalar = typename Derived::Scalar;
  using std::cos;
  using std::sin;
  if (q.size() != dim_) throw std::invalid_argument("potential: dimension mismatch");
  const Scalar two_pi = Scalar(2) * boost::math::constants::pi<Scalar>();
  Scalar v(0);
  for (const auto& m : modes_) {
    const Scalar phase = two_pi * m.k.cast<Scalar>().dot(q);
    v += Scalar(m.cos) * cos(phase) + Scalar(m.sin) * sin(phase);
  }
  return v;
}

template <class Derived>
typename Derived::PlainObject TorusPotential::gradient(const Eigen::MatrixBase<Derived>& q) const {
  using Scalar = typename Derived::Scalar;
  using std::cos;
  using std::sin;
  if (q.size() != dim_) throw std::invalid_argument("potential: dimension mismatch");
  const Scalar two_pi = Scalar(2) * boost::math::constants::pi<Scalar>();
  typename Derived::PlainObject grad = Derived::PlainObject::Zero(dim_);
  for (const auto& m : modes_) {
    const Scalar phase = two_pi * m.k.cast<Scalar>().dot(q);
    grad += (two_pi * (Scalar(m.sin) * cos(phase) - Scalar(m.cos) * sin(phase))) * m.k.cast<Scalar>();
  }
  return grad;
}

}  // namespace thermokam
