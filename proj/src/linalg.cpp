#include "thermokam/linalg.hpp"

#include <algorithm>
#include <regex>

namespace thermokam {

Rational parse_rational(const std::string& text) {
  static const std::regex fraction(R"(\s*([+-]?\d+)\s*(/\s*(\d+))?\s*)");
  static const std::regex decimal(R"(\s*([+-]?)(\d*)\.(\d+)\s*)");
  std::smatch m;
  if (std::regex_match(text, m, fraction)) {
    Rational q(m[1].str());
    if (m[3].matched) {
      Rational den(m[3].str());
      if (den == 0) throw std::invalid_argument("zero denominator in '" + text + "'");
      q /= den;
    }
    return q;
  }
  if (std::regex_match(text, m, decimal)) {
    const std::string whole = m[2].str().empty() ? "0" : m[2].str();
    const std::string frac = m[3].str();
    Rational q(whole + frac);
    Rational scale(1);
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    q /= scale;
    return m[1].str() == "-" ? Rational(-q) : q;
  }
  throw std::invalid_argument("not a rational number: '" + text + "'");
}

ExactSolve solve_exact(MatrixQ a, VectorQ b) {
  if (a.rows() != b.size()) throw std::invalid_argument("solve_exact: dimension mismatch");
  const Eigen::Index rows = a.rows();
  const Eigen::Index cols = a.cols();
  std::vector<Eigen::Index> pivot_col;
  Eigen::Index r = 0;
  for (Eigen::Index c = 0; c < cols && r < rows; ++c) {
    Eigen::Index p = r;
    while (p < rows && a(p, c) == 0) ++p;
    if (p == rows) continue;
    if (p != r) {
      a.row(p).swap(a.row(r));
      std::swap(b(p), b(r));
    }
    const Rational inv = Rational(1) / a(r, c);
    a.row(r) *= inv;
    b(r) *= inv;
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (i == r || a(i, c) == 0) continue;
      const Rational f = a(i, c);
      a.row(i) -= f * a.row(r);
      b(i) -= f * b(r);
    }
    pivot_col.push_back(c);
    ++r;
  }
  ExactSolve out;
  out.rank = r;
  for (Eigen::Index i = r; i < rows; ++i) {
    if (b(i) != 0) {
      out.status = ExactSolve::Status::inconsistent;
      return out;
    }
  }
  if (r < cols) {
    out.status = ExactSolve::Status::underdetermined;
    return out;
  }
  out.solution = VectorQ::Zero(cols);
  for (Eigen::Index i = 0; i < r; ++i) out.solution(pivot_col[i]) = b(i);
  return out;
}

Eigen::MatrixXd canonical_form(Eigen::Index half_dim) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * half_dim, 2 * half_dim);
  omega.topRightCorner(half_dim, half_dim).setIdentity();
  omega.bottomLeftCorner(half_dim, half_dim) = -Eigen::MatrixXd::Identity(half_dim, half_dim);
  return omega;
}

Eigen::MatrixXd numerical_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& map,
                                   const Eigen::VectorXd& at, double step) {
  const Eigen::VectorXd f0 = map(at);
  Eigen::MatrixXd jac(f0.size(), at.size());
  for (Eigen::Index j = 0; j < at.size(); ++j) {
    Eigen::VectorXd plus = at, minus = at;
    plus(j) += step;
    minus(j) -= step;
    jac.col(j) = (map(plus) - map(minus)) / (2.0 * step);
  }
  return jac;
}

double symplectic_defect(const Eigen::MatrixXd& jacobian, const Eigen::MatrixXd& omega) {
  return (jacobian.transpose() * omega * jacobian - omega).cwiseAbs().maxCoeff();
}

}  // namespace thermokam
