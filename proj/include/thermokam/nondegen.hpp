#pragma once

#include "thermokam/linalg.hpp"
#include "thermokam/normalform.hpp"
#include "thermokam/series.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace thermokam {

/// f = G0_nf + G1_nf on action space (I, J) together with the partial
/// derivatives needed for gradients and Hessians along J = rho C.
class ActionModel {
 public:
  explicit ActionModel(const NormalFormCoeffs& nf);
  /// Model built directly from scalarized coefficients (no solve).
  static ActionModel from_coefficients(const Rational& alpha, const Rational& beta_scalar, const Rational& gamma_par,
                                       const Rational& gamma_perp, int order = 4);

  const GradedPoly& f() const { return f_; }

  /// Partials of f(I, c, m) at (I, rho, rho^2):
  /// [f_I, f_c, f_m, f_II, f_Ic, f_Im, f_cc, f_cm, f_mm].
  template <class Scalar>
  std::array<Scalar, 9> partials(const Scalar& I, const Scalar& rho) const;

 private:
  explicit ActionModel(GradedPoly f);
  GradedPoly f_;
  std::array<GradedPoly, 9> d_;
};

/// Gradient (dI, dJ) of G0 + G1 at (I, J = rho C); C is a unit vector in an
/// orthonormal frame of covector space.
template <class Scalar>
Vector<Scalar> action_gradient(const ActionModel& model, const Vector<Scalar>& C, const Scalar& I, const Scalar& rho);

/// (n+1) x (n+1) Hessian in (I, J).
template <class Scalar>
Matrix<Scalar> action_hessian(const ActionModel& model, const Vector<Scalar>& C, const Scalar& I, const Scalar& rho);

/// (n+2) x (n+2) Hessian bordered by the gradient.
template <class Scalar>
Matrix<Scalar> bordered_hessian(const ActionModel& model, const Vector<Scalar>& C, const Scalar& I, const Scalar& rho);

/// det(P^T A P) / det(P^T P): determinant of A restricted to the column
/// span of P (exact when A leaves the span invariant).
template <class Scalar>
Scalar restricted_det(const Matrix<Scalar>& A, const Matrix<Scalar>& P);

/// Basis of the orthocomplement of unit C in R^n (n - 1 columns).
template <class Scalar>
Matrix<Scalar> complement_basis(const Vector<Scalar>& C);

template <class Scalar>
struct Determinants {
  Scalar kolmogorov_full, A_V, A_Vperp;
  Scalar isoenergetic_full, B_W, B_Wperp;
};

template <class Scalar>
Determinants<Scalar> determinants(const ActionModel& model, const Vector<Scalar>& C, const Scalar& I,
                                  const Scalar& rho);

/// Orthonormal-frame components of a unit covector: L^T C with
/// g^-1 = L L^T.
Eigen::VectorXd orthonormal_components(const UnitCovector& C, const FlatMetric& g);

enum class RestrictedDet { A_V, B_W };

/// Exact polynomial rho -> det(A|V) or det(B|W) at the given I, recovered by
/// interpolation at rational nodes and confirmed at extra nodes.
RationalPolynomial restricted_det_polynomial(const ActionModel& model, RestrictedDet which, const Rational& I = 0);

/// Closed forms through rho^2 in scalarized (alpha, beta, gamma = gamma_par):
///   det(A|V) = -2a - b^2 - 4(a + b g) rho - (6a + 4 g^2) rho^2
///   det(B|W) = 1 - 2a - 2b + (-4g - 2b^2 - 4a + 2) rho
///              + (-6bg - 2g - b^2 + 2b - 6a + 3) rho^2
RationalPolynomial det_A_V_closed_form(const Rational& alpha, const Rational& beta, const Rational& gamma);
RationalPolynomial det_B_W_closed_form(const Rational& alpha, const Rational& beta, const Rational& gamma);

/// Truncation of a polynomial to degree <= k.
RationalPolynomial truncate_degree(const RationalPolynomial& p, int k);

struct ScanRow {
  double rho;
  Determinants<double> dets;
};

struct ZeroCrossing {
  std::string determinant;
  double rho;  // linear interpolation between the bracketing grid points
};

struct ScanReport {
  std::vector<ScanRow> rows;
  std::vector<ZeroCrossing> crossings;
  /// Log-log slope of |det| over rho in [1e-4, 1e-2].
  double order_A_V = 0.0;
  double order_B_W = 0.0;
  /// Lowest nonzero power in the exact rho-expansion (-1 if identically 0).
  int exact_order_A_V = -1;
  int exact_order_B_W = -1;
};

ScanReport degeneracy_scan(const ActionModel& model, const Eigen::VectorXd& C, const std::vector<double>& rho_grid,
                           double I = 0.0);
std::vector<double> linear_grid(double lo, double hi, int points);
void write_scan_csv(std::ostream& out, const ScanReport& report);

/// Simultaneous vanishing of the rho^0 terms of det(A|V) and det(B|W) along
/// the family beta = 1 - a/2, b = 16 alpha + 3a^2/2 - 5a + 22/3.
struct LocusAudit {
  RationalPolynomial constraint;  // det(A|V)_0 after eliminating alpha via det(B|W)_0 = 0
  int common_zeros = 0;           // distinct real roots in (lo, hi]
  std::vector<Rational> roots;    // exact when recognizable as small-denominator rationals
  Rational a, alpha, b;           // the point, if unique
  bool solver_confirms = false;   // solve_nf at (a, b) reproduces alpha and both zero constant terms
  std::optional<NormalFormCoeffs> solved;
};
LocusAudit degeneracy_locus_audit(const Rational& lo = -3, const Rational& hi = 3);

// ---------------------------------------------------------------------------

template <class Scalar>
std::array<Scalar, 9> ActionModel::partials(const Scalar& I, const Scalar& rho) const {
  const std::array<Scalar, 3> pt{I, rho, rho * rho};
  std::array<Scalar, 9> out;
  for (std::size_t k = 0; k < 9; ++k) out[k] = d_[k].evaluate<Scalar>(pt);
  return out;
}

template <class Scalar>
Vector<Scalar> action_gradient(const ActionModel& model, const Vector<Scalar>& C, const Scalar& I, const Scalar& rho) {
  const auto d = model.partials(I, rho);
  const Eigen::Index n = C.size();
  Vector<Scalar> grad(n + 1);
  grad(0) = d[0];
  grad.tail(n) = (d[1] + Scalar(2) * rho * d[2]) * C;
  return grad;
}

template <class Scalar>
Matrix<Scalar> action_hessian(const ActionModel& model, const Vector<Scalar>& C, const Scalar& I, const Scalar& rho) {
  const auto d = model.partials(I, rho);
  const Eigen::Index n = C.size();
  Matrix<Scalar> H(n + 1, n + 1);
  H(0, 0) = d[3];
  const Vector<Scalar> mixed = (d[4] + Scalar(2) * rho * d[5]) * C;
  H.block(1, 0, n, 1) = mixed;
  H.block(0, 1, 1, n) = mixed.transpose();
  const Scalar radial = d[6] + Scalar(4) * rho * d[7] + Scalar(4) * rho * rho * d[8];
  H.block(1, 1, n, n) = radial * (C * C.transpose());
  for (Eigen::Index i = 1; i <= n; ++i) H(i, i) += Scalar(2) * d[2];
  return H;
}

template <class Scalar>
Matrix<Scalar> bordered_hessian(const ActionModel& model, const Vector<Scalar>& C, const Scalar& I, const Scalar& rho) {
  const Eigen::Index n = C.size();
  Matrix<Scalar> B = Matrix<Scalar>::Zero(n + 2, n + 2);
  B.topLeftCorner(n + 1, n + 1) = action_hessian(model, C, I, rho);
  const Vector<Scalar> grad = action_gradient(model, C, I, rho);
  B.block(0, n + 1, n + 1, 1) = grad;
  B.block(n + 1, 0, 1, n + 1) = grad.transpose();
  return B;
}

template <class Scalar>
Scalar restricted_det(const Matrix<Scalar>& A, const Matrix<Scalar>& P) {
  if (P.cols() == 0) return Scalar(1);
  const Matrix<Scalar> PtP = P.transpose() * P;
  const Matrix<Scalar> PtAP = P.transpose() * A * P;
  return determinant<Scalar>(PtAP) / determinant<Scalar>(PtP);
}

template <class Scalar>
Matrix<Scalar> complement_basis(const Vector<Scalar>& C) {
  using std::abs;
  const Eigen::Index n = C.size();
  Eigen::Index pivot = 0;
  for (Eigen::Index i = 1; i < n; ++i) {
    if (abs(C(i)) > abs(C(pivot))) pivot = i;
  }
  Matrix<Scalar> P(n, n - 1);
  Eigen::Index col = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (k == pivot) continue;
    // e_k minus its component along C.
    P.col(col) = -C(k) * C;
    P(k, col) += Scalar(1);
    ++col;
  }
  return P;
}

template <class Scalar>
Determinants<Scalar> determinants(const ActionModel& model, const Vector<Scalar>& C, const Scalar& I,
                                  const Scalar& rho) {
  const Eigen::Index n = C.size();
  const Matrix<Scalar> H = action_hessian(model, C, I, rho);
  const Matrix<Scalar> B = bordered_hessian(model, C, I, rho);
  const Matrix<Scalar> perp = complement_basis(C);

  Matrix<Scalar> V = Matrix<Scalar>::Zero(n + 1, 2);
  V(0, 0) = Scalar(1);
  V.block(1, 1, n, 1) = C;
  Matrix<Scalar> Vperp = Matrix<Scalar>::Zero(n + 1, n - 1);
  Vperp.bottomRows(n) = perp;

  Matrix<Scalar> W = Matrix<Scalar>::Zero(n + 2, 3);
  W(0, 0) = Scalar(1);
  W.block(1, 1, n, 1) = C;
  W(n + 1, 2) = Scalar(1);
  Matrix<Scalar> Wperp = Matrix<Scalar>::Zero(n + 2, n - 1);
  Wperp.block(1, 0, n, n - 1) = perp;

  return {determinant<Scalar>(H), restricted_det(H, V), restricted_det(H, Vperp),
          determinant<Scalar>(B), restricted_det(B, W), restricted_det(B, Wperp)};
}

}  // namespace thermokam
