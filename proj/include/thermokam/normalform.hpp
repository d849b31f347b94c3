#pragma once

#include "thermokam/mathcore.hpp"
#include "thermokam/series.hpp"

#include <json.hpp>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace thermokam {

/// Exact coefficients of Omega(sigma) = 1 + a d + b/2 d^2 + sum_j c_j d^j,
/// d = sigma - 1. `higher` holds c_3, c_4, ... .
struct MassSeries {
  Rational a{0};
  Rational b{0};
  std::vector<Rational> higher;

  bool is_constant() const;
};

/// G0 = F_0 pulled back by the generating function near the torus
/// {sigma = 1, Sigma = 0, W = C}, expanded in the ring
/// (u:1, U:1, c:1, m:2), c = <C,V>, m = |V|^2. Constants are kept.
struct ChartExpansion {
  GradedPoly g0;
  MassSeries mass;
  std::string generator = "phi(Sigma,W;u,v) = (1-u)|W| Sigma + <C-W, v>";
};

ChartExpansion build_chart_expansion(const MassSeries& mass, int order = 4);

/// Solution of the normal-form problem
///   G0(dnu/dU, U, c, m) = 1/2 + I + sum t_{p,j,l} I^p c^j m^l,
/// I = x^2 + X^2/2, X = dnu/dx, with nu = xU + (terms odd in U).
struct NormalFormCoeffs {
  MassSeries mass;
  int order = 4;
  std::optional<Rational> alpha;
  Rational beta_scalar;
  std::optional<Rational> gamma_par;
  std::optional<Rational> gamma_perp;
  GradedPoly nu;        // ring (x:1, U:1, c:1, m:2)
  GradedPoly g0_nf;     // ring (I:2, cJ:1, mJ:2), constant dropped
  Rational g0_constant{1, 2};
  GradedPoly g1_nf;     // same ring
  bool residual_ok = false;
};

NormalFormCoeffs solve_nf(const ChartExpansion& ce);

/// Relations between the mass-profile coefficients and the normal form,
/// exactly as printed for the variable-mass lemma:
///   beta = 1 - a/2,  b = 16 alpha + 3a^2/2 - 5a + 22/3,
///   gamma = (a-2)/4 + (4 alpha + a^2/2 - 2a + 10/3) CC'.
struct MassRelations {
  Rational beta_scalar;
  Rational b;
  Rational gamma_par;
  Rational gamma_perp;
};
MassRelations variable_mass_relations(const Rational& a, const Rational& alpha);

/// 1/2 ln(1 - t) with t = 2 cJ - mJ, in the ring (I:2, cJ:1, mJ:2).
GradedPoly g1_series(int order = 4);

/// The normal-form ring (I:2, cJ:1, mJ:2).
TablePtr action_table();

class SingularChartError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct ChartPoint {
  double u = 0.0;
  Eigen::VectorXd v;
  double U = 0.0;
  Eigen::VectorXd V;
};

/// The canonical map generated by phi(Sigma, W; u, v):
///   sigma = (1-u)|C-V|, Sigma = -U/|C-V|, W = C-V,
///   w = -v - (1-u) U g^-1 W / |W|^2.
/// Throws SingularChartError for u >= 1 or V = C.
struct FgenImage {
  Eigen::VectorXd w, W;
  double sigma, Sigma;
};
FgenImage fgen_numeric(const ChartPoint& pt, const UnitCovector& C, const FlatMetric& g);

using HighPrecision = boost::multiprecision::cpp_bin_float_50;

/// |F_0 - (1/2 + G0_nf + G1_nf)| at the point with normal-form coordinates
/// (x, X) and scalarized covector data (c, m), evaluated in 50-digit
/// arithmetic. U is recovered from X = dnu/dx by Newton iteration.
HighPrecision remainder_at(const NormalFormCoeffs& nf, const HighPrecision& x, const HighPrecision& X,
                           const HighPrecision& c, const HighPrecision& m);

/// Log-log slope of the remainder along (x, X, c, m) = (r x0, r X0, r c0, r^2 m0)
/// over the given radii (least squares).
struct RemainderFit {
  std::vector<double> radii;
  std::vector<double> errors;
  double slope = 0.0;
};
RemainderFit remainder_scaling(const NormalFormCoeffs& nf, const std::vector<double>& radii, double x0 = 0.7,
                               double X0 = 0.4, double c0 = 0.5, double m0 = 0.3);

nlohmann::json normal_form_report(const NormalFormCoeffs& nf);

/// Solves every (a, b) pair with at most `jobs` worker threads; results in
/// input order.
std::vector<NormalFormCoeffs> solve_nf_grid(const std::vector<MassSeries>& grid, int order, int jobs);

}  // namespace thermokam
