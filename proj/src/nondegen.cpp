#include "thermokam/nondegen.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <iomanip>
#include <ostream>

namespace thermokam {

ActionModel::ActionModel(GradedPoly f) : f_(std::move(f)), d_{f_, f_, f_, f_, f_, f_, f_, f_, f_} {
  const GradedPoly fI = f_.derivative("I"), fc = f_.derivative("cJ"), fm = f_.derivative("mJ");
  d_ = {fI,
        fc,
        fm,
        fI.derivative("I"),
        fI.derivative("cJ"),
        fI.derivative("mJ"),
        fc.derivative("cJ"),
        fc.derivative("mJ"),
        fm.derivative("mJ")};
}

ActionModel::ActionModel(const NormalFormCoeffs& nf) : ActionModel(nf.g0_nf + nf.g1_nf) {}

ActionModel ActionModel::from_coefficients(const Rational& alpha, const Rational& beta_scalar,
                                           const Rational& gamma_par, const Rational& gamma_perp, int order) {
  GradedPoly g0(action_table(), order);
  g0.add_term({1, 0, 0}, Rational(1));
  g0.add_term({2, 0, 0}, alpha);
  g0.add_term({1, 1, 0}, beta_scalar);
  g0.add_term({1, 0, 1}, gamma_perp);
  g0.add_term({1, 2, 0}, gamma_par - gamma_perp);
  return ActionModel(g0 + g1_series(order));
}

Eigen::VectorXd orthonormal_components(const UnitCovector& C, const FlatMetric& g) {
  if (g.is_identity()) return C.components();
  const Eigen::MatrixXd L = g.dual().llt().matrixL();
  return L.transpose() * C.components();
}

RationalPolynomial restricted_det_polynomial(const ActionModel& model, RestrictedDet which, const Rational& I) {
  const VectorQ C = VectorQ::Constant(1, Rational(1));
  const int order = model.f().order();
  const int fit_nodes = 3 * (order + 2) + 1;
  const int check_nodes = 3;
  std::vector<Rational> xs, ys;
  for (int k = 0; k < fit_nodes + check_nodes; ++k) {
    // Alternate signs around 0: 0, 1/7, -1/7, 2/7, ...
    const int j = (k + 1) / 2;
    const Rational rho = Rational(k % 2 ? j : -j, 7);
    const auto dets = determinants<Rational>(model, C, I, rho);
    xs.push_back(rho);
    ys.push_back(which == RestrictedDet::A_V ? dets.A_V : dets.B_W);
  }
  const RationalPolynomial p = RationalPolynomial::interpolate(std::span(xs).first(fit_nodes),
                                                               std::span(ys).first(fit_nodes));
  for (int k = fit_nodes; k < fit_nodes + check_nodes; ++k) {
    if (p(xs[k]) != ys[k]) throw std::logic_error("restricted determinant exceeds its degree bound");
  }
  return p;
}

RationalPolynomial det_A_V_closed_form(const Rational& a, const Rational& b, const Rational& g) {
  return RationalPolynomial({-2 * a - b * b, -4 * (a + b * g), -(6 * a + 4 * g * g)});
}

RationalPolynomial det_B_W_closed_form(const Rational& a, const Rational& b, const Rational& g) {
  return RationalPolynomial(
      {1 - 2 * a - 2 * b, -4 * g - 2 * b * b - 4 * a + 2, -6 * b * g - 2 * g - b * b + 2 * b - 6 * a + 3});
}

RationalPolynomial truncate_degree(const RationalPolynomial& p, int k) {
  std::vector<Rational> c;
  for (int j = 0; j <= std::min(k, p.degree()); ++j) c.push_back(p.coefficient(j));
  return RationalPolynomial(std::move(c));
}

namespace {

int lowest_power(const RationalPolynomial& p) {
  for (int j = 0; j <= p.degree(); ++j) {
    if (p.coefficient(j) != 0) return j;
  }
  return -1;
}

double loglog_order(const std::function<double(double)>& f) {
  constexpr int points = 25;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int used = 0;
  for (int k = 0; k < points; ++k) {
    const double rho = std::pow(10.0, -4.0 + 2.0 * k / (points - 1));
    const double v = std::abs(f(rho));
    if (!(v > 0.0)) continue;
    const double lx = std::log(rho), ly = std::log(v);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++used;
  }
  if (used < 2) return std::numeric_limits<double>::infinity();
  return (used * sxy - sx * sy) / (used * sxx - sx * sx);
}

}  // namespace

ScanReport degeneracy_scan(const ActionModel& model, const Eigen::VectorXd& C, const std::vector<double>& rho_grid,
                           double I) {
  ScanReport report;
  for (double rho : rho_grid) report.rows.push_back({rho, determinants<double>(model, C, I, rho)});

  using Member = double Determinants<double>::*;
  const std::array<std::pair<const char*, Member>, 6> columns{{
      {"det_kolmogorov_full", &Determinants<double>::kolmogorov_full},
      {"det_A_V", &Determinants<double>::A_V},
      {"det_A_Vperp", &Determinants<double>::A_Vperp},
      {"det_isoenergetic", &Determinants<double>::isoenergetic_full},
      {"det_B_W", &Determinants<double>::B_W},
      {"det_B_Wperp", &Determinants<double>::B_Wperp},
  }};
  for (const auto& [name, member] : columns) {
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
      const double v1 = report.rows[i].dets.*member;
      if (v1 == 0.0) {
        report.crossings.push_back({name, report.rows[i].rho});
        continue;
      }
      if (i == 0) continue;
      const double v0 = report.rows[i - 1].dets.*member;
      if (v0 != 0.0 && (v0 < 0.0) != (v1 < 0.0)) {
        const double r0 = report.rows[i - 1].rho, r1 = report.rows[i].rho;
        report.crossings.push_back({name, r0 + (r1 - r0) * v0 / (v0 - v1)});
      }
    }
  }

  report.order_A_V = loglog_order([&](double rho) { return determinants<double>(model, C, I, rho).A_V; });
  report.order_B_W = loglog_order([&](double rho) { return determinants<double>(model, C, I, rho).B_W; });
  const Rational Iq(I);
  report.exact_order_A_V = lowest_power(restricted_det_polynomial(model, RestrictedDet::A_V, Iq));
  report.exact_order_B_W = lowest_power(restricted_det_polynomial(model, RestrictedDet::B_W, Iq));
  return report;
}

std::vector<double> linear_grid(double lo, double hi, int points) {
  if (points < 2) throw std::invalid_argument("grid needs at least two points");
  std::vector<double> grid;
  for (int k = 0; k < points; ++k) grid.push_back(lo + (hi - lo) * k / (points - 1));
  return grid;
}

void write_scan_csv(std::ostream& out, const ScanReport& report) {
  out << "rho,det_kolmogorov_full,det_A_V,det_A_Vperp,det_isoenergetic,det_B_W,det_B_Wperp\n";
  out << std::setprecision(17);
  for (const auto& row : report.rows) {
    const auto& d = row.dets;
    out << row.rho << ',' << d.kolmogorov_full << ',' << d.A_V << ',' << d.A_Vperp << ',' << d.isoenergetic_full
        << ',' << d.B_W << ',' << d.B_Wperp << '\n';
  }
}

LocusAudit degeneracy_locus_audit(const Rational& lo, const Rational& hi) {
  // beta(a) = 1 - a/2; det(B|W)_0 = 1 - 2 alpha - 2 beta = 0 fixes alpha(a).
  const RationalPolynomial beta({Rational(1), Rational(-1, 2)});
  const RationalPolynomial half({Rational(1, 2)});
  const RationalPolynomial alpha = half - beta;
  const RationalPolynomial constraint = RationalPolynomial() - RationalPolynomial({Rational(2)}) * alpha - beta * beta;

  LocusAudit audit;
  audit.constraint = constraint;
  const RationalPolynomial q = constraint.squarefree();
  audit.common_zeros = q.count_real_roots(lo, hi);

  // Isolate each root by Sturm bisection, then look for an exact rational.
  std::function<void(Rational, Rational)> isolate = [&](Rational a, Rational b) {
    const int count = q.count_real_roots(a, b);
    if (count == 0) return;
    if (count > 1) {
      const Rational mid = (a + b) / 2;
      isolate(a, mid);
      isolate(mid, b);
      return;
    }
    for (int it = 0; it < 60; ++it) {
      const Rational mid = (a + b) / 2;
      if (q(mid) == 0) {
        audit.roots.push_back(mid);
        return;
      }
      if (q.count_real_roots(a, mid) == 1) {
        b = mid;
      } else {
        a = mid;
      }
    }
    const Rational approx = (a + b) / 2;
    for (int den = 1; den <= 1000; ++den) {
      const double scaled = approx.convert_to<double>() * den;
      const Rational cand(static_cast<long>(std::lround(scaled)), den);
      if (q(cand) == 0) {
        audit.roots.push_back(cand);
        return;
      }
    }
    if (q(b) == 0) {
      audit.roots.push_back(b);
      return;
    }
    audit.roots.push_back(approx);
  };
  isolate(lo, hi);

  if (audit.common_zeros == 1 && audit.roots.size() == 1 && q(audit.roots.front()) == 0) {
    audit.a = audit.roots.front();
    audit.alpha = alpha(audit.a);
    audit.b = variable_mass_relations(audit.a, audit.alpha).b;
    NormalFormCoeffs nf = solve_nf(build_chart_expansion(MassSeries{audit.a, audit.b, {}}, 4));
    const ActionModel model(nf);
    const auto detA = restricted_det_polynomial(model, RestrictedDet::A_V);
    const auto detB = restricted_det_polynomial(model, RestrictedDet::B_W);
    audit.solver_confirms = nf.residual_ok && nf.alpha && *nf.alpha == audit.alpha &&
                            nf.beta_scalar == beta(audit.a) && detA.coefficient(0) == 0 && detB.coefficient(0) == 0;
    audit.solved = std::move(nf);
  }
  return audit;
}

}  // namespace thermokam
