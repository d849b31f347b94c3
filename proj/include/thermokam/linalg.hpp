#pragma once

#include "thermokam/rational.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <type_traits>

namespace thermokam {

template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixQ = Matrix<Rational>;
using VectorQ = Vector<Rational>;

namespace detail {
template <class Scalar>
bool is_zero(const Scalar& x) {
  if constexpr (std::is_floating_point_v<Scalar>) {
    return x == Scalar(0);
  } else {
    return x == 0;
  }
}
}  // namespace detail

/// Determinant by Gaussian elimination. Exact for `Rational` (first nonzero
/// pivot); partial pivoting by magnitude otherwise.
template <class Scalar>
Scalar determinant(Matrix<Scalar> a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("determinant: matrix not square");
  const Eigen::Index n = a.rows();
  Scalar det(1);
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index pivot = -1;
    if constexpr (std::is_same_v<Scalar, Rational>) {
      for (Eigen::Index i = k; i < n; ++i) {
        if (a(i, k) != 0) {
          pivot = i;
          break;
        }
      }
    } else {
      using std::abs;
      Scalar best(0);
      for (Eigen::Index i = k; i < n; ++i) {
        if (abs(a(i, k)) > best) {
          best = abs(a(i, k));
          pivot = i;
        }
      }
    }
    if (pivot < 0) return Scalar(0);
    if (pivot != k) {
      a.row(k).swap(a.row(pivot));
      det = -det;
    }
    det *= a(k, k);
    for (Eigen::Index i = k + 1; i < n; ++i) {
      if (detail::is_zero(a(i, k))) continue;
      const Scalar f = a(i, k) / a(k, k);
      for (Eigen::Index j = k; j < n; ++j) a(i, j) -= f * a(k, j);
    }
  }
  return det;
}

/// Outcome of an exact linear solve.
struct ExactSolve {
  enum class Status { unique, inconsistent, underdetermined };
  Status status = Status::unique;
  VectorQ solution;
  Eigen::Index rank = 0;
};

/// Solves a x = b exactly by row reduction. `a` may be rectangular.
ExactSolve solve_exact(MatrixQ a, VectorQ b);

/// Canonical symplectic matrix for states laid out as
/// [q_1..q_d, p_1..p_d]: Omega = [[0, 1], [-1, 0]].
Eigen::MatrixXd canonical_form(Eigen::Index half_dim);

/// Central-difference Jacobian of a map R^m -> R^k.
Eigen::MatrixXd numerical_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& map,
                                   const Eigen::VectorXd& at, double step = 1e-6);

/// max-abs entry of J^T Omega J - Omega.
double symplectic_defect(const Eigen::MatrixXd& jacobian, const Eigen::MatrixXd& omega);

}  // namespace thermokam
