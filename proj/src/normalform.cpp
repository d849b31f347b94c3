#include "thermokam/normalform.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace thermokam {

bool MassSeries::is_constant() const {
  return a == 0 && b == 0 && std::all_of(higher.begin(), higher.end(), [](const Rational& c) { return c == 0; });
}

namespace {

TablePtr chart_table() {
  static const TablePtr table = make_table({{"u", 1}, {"U", 1}, {"c", 1}, {"m", 2}});
  return table;
}

TablePtr mixed_table() {
  static const TablePtr table = make_table({{"x", 1}, {"U", 1}, {"c", 1}, {"m", 2}});
  return table;
}

GradedPoly one_var_substitute(const GradedPoly& series, const GradedPoly& image) {
  return compose(series, SeriesMap{{image}});
}

// Monomials x^i U^k c^j m^l with k odd and weighted degree d.
std::vector<Exponents> odd_u_monomials(int d) {
  std::vector<Exponents> out;
  for (int i = d; i >= 0; --i) {
    for (int k = 1; k <= d - i; k += 2) {
      for (int j = d - i - k; j >= 0; --j) {
        const int rest = d - i - k - j;
        if (rest % 2 == 0) out.push_back({i, k, j, rest / 2});
      }
    }
  }
  return out;
}

// Exponents (p, j, l) of I^p c^j m^l with p >= 1 and weighted degree d.
std::vector<Exponents> action_monomials(int d) {
  std::vector<Exponents> out;
  for (int p = d / 2; p >= 1; --p) {
    for (int j = d - 2 * p; j >= 0; --j) {
      const int rest = d - 2 * p - j;
      if (rest % 2 == 0) out.push_back({p, j, rest / 2});
    }
  }
  return out;
}

std::string monomial_label(const char* prefix, const Exponents& e) {
  std::string s = prefix;
  for (int k : e) s += "_" + std::to_string(k);
  return s;
}

template <class Scalar>
Scalar omega_value(const MassSeries& mass, const Scalar& sigma) {
  const Scalar d = sigma - Scalar(1);
  Scalar tail(0);
  for (std::size_t j = mass.higher.size(); j-- > 0;) tail = tail * d + to_scalar<Scalar>(mass.higher[j]);
  return Scalar(1) + to_scalar<Scalar>(mass.a) * d + to_scalar<Scalar>(mass.b) / 2 * d * d + tail * d * d * d;
}

}  // namespace

TablePtr action_table() {
  static const TablePtr table = make_table({{"I", 2}, {"cJ", 1}, {"mJ", 2}});
  return table;
}

ChartExpansion build_chart_expansion(const MassSeries& mass, int order) {
  if (order < 3) throw std::invalid_argument("chart expansion needs order >= 3");
  const TablePtr R = chart_table();
  const auto var = [&](const char* name) { return GradedPoly::variable(R, order, name); };
  const auto constant = [&](const Rational& q) { return GradedPoly::constant(R, order, q); };
  const GradedPoly u = var("u"), U = var("U"), c = var("c"), m = var("m");
  const GradedPoly t = Rational(2) * c - m;  // 1 - |C-V|^2

  const GradedPoly inv_w2 = one_var_substitute(std_series(StdSeries::binomial, order, Rational(-1)), t);
  const GradedPoly w = one_var_substitute(std_series(StdSeries::binomial, order, Rational(1, 2)), t);
  const GradedPoly d = (constant(Rational(1)) - u) * w - constant(Rational(1));

  GradedPoly omega = constant(Rational(1)) + mass.a * d + (mass.b / 2) * d.pow(2);
  for (std::size_t j = 0; j < mass.higher.size(); ++j) omega += mass.higher[j] * d.pow(static_cast<int>(j) + 3);

  ChartExpansion ce{GradedPoly(R, order), mass};
  ce.g0 = Rational(1, 2) * one_var_substitute(std_series(StdSeries::pow_neg2, order), u) +
          Rational(1, 2) * omega * U.pow(2) * inv_w2 + one_var_substitute(std_series(StdSeries::log_one_minus, order), u);
  return ce;
}

NormalFormCoeffs solve_nf(const ChartExpansion& ce) {
  const int order = ce.g0.order();
  const TablePtr Q = mixed_table();
  const auto var = [&](const char* name) { return GradedPoly::variable(Q, order, name); };
  const GradedPoly x = var("x"), U = var("U"), c = var("c"), m = var("m");

  std::vector<Unknown> unknowns;
  std::vector<Exponents> nu_monos, target_monos;
  for (int d = 3; d <= order; ++d) {
    for (auto& e : odd_u_monomials(d)) {
      unknowns.push_back({monomial_label("nu", e), d});
      nu_monos.push_back(std::move(e));
    }
  }
  const std::size_t n_nu = nu_monos.size();
  for (int d = 3; d <= order; ++d) {
    for (auto& e : action_monomials(d)) {
      unknowns.push_back({monomial_label("g0", e), d});
      target_monos.push_back(std::move(e));
    }
  }

  const auto build_nu = [&](std::span<const Rational> values) {
    GradedPoly nu = x * U;
    for (std::size_t k = 0; k < n_nu; ++k) nu.add_term(nu_monos[k], values[k]);
    return nu;
  };
  const ResidualFunction residual = [&](std::span<const Rational> values) {
    const GradedPoly nu = build_nu(values);
    const GradedPoly big_x = nu.derivative("x");
    const GradedPoly I = x.pow(2) + Rational(1, 2) * big_x.pow(2);
    GradedPoly res = compose(ce.g0, SeriesMap{{nu.derivative("U"), U, c, m}});
    res -= GradedPoly::constant(Q, order, Rational(1, 2)) + I;
    std::vector<GradedPoly> i_pow{GradedPoly::constant(Q, order, Rational(1)), I};
    for (std::size_t k = 0; k < target_monos.size(); ++k) {
      const Rational& tk = values[n_nu + k];
      if (tk == 0) continue;
      const Exponents& e = target_monos[k];
      while (static_cast<int>(i_pow.size()) <= e[0]) i_pow.push_back(i_pow.back() * I);
      res -= tk * i_pow[e[0]] * c.pow(e[1]) * m.pow(e[2]);
    }
    return std::vector<GradedPoly>{res};
  };

  const std::vector<Rational> values = solve_triangular(unknowns, residual);

  NormalFormCoeffs nf{ce.mass, order, {}, Rational(0), {}, {}, build_nu(values),
                      GradedPoly(action_table(), order), Rational(1, 2), g1_series(order)};
  nf.g0_nf = GradedPoly::monomial(action_table(), order, {1, 0, 0}, Rational(1));
  for (std::size_t k = 0; k < target_monos.size(); ++k) nf.g0_nf.add_term(target_monos[k], values[n_nu + k]);

  nf.beta_scalar = nf.g0_nf.coefficient({1, 1, 0});
  if (order >= 4) {
    nf.alpha = nf.g0_nf.coefficient({2, 0, 0});
    nf.gamma_perp = nf.g0_nf.coefficient({1, 0, 1});
    nf.gamma_par = nf.g0_nf.coefficient({1, 2, 0}) + *nf.gamma_perp;
  }
  const std::vector<GradedPoly> check = residual(values);
  nf.residual_ok = std::all_of(check.begin(), check.end(), [](const GradedPoly& p) { return p.is_zero(); });
  return nf;
}

MassRelations variable_mass_relations(const Rational& a, const Rational& alpha) {
  MassRelations r;
  r.beta_scalar = 1 - a / 2;
  r.b = 16 * alpha + Rational(3, 2) * a * a - 5 * a + Rational(22, 3);
  r.gamma_perp = (a - 2) / 4;
  r.gamma_par = r.gamma_perp + 4 * alpha + a * a / 2 - 2 * a + Rational(10, 3);
  return r;
}

GradedPoly g1_series(int order) {
  const TablePtr A = action_table();
  const GradedPoly t = Rational(2) * GradedPoly::variable(A, order, "cJ") - GradedPoly::variable(A, order, "mJ");
  return Rational(1, 2) * one_var_substitute(std_series(StdSeries::log_one_minus, order), t);
}

FgenImage fgen_numeric(const ChartPoint& pt, const UnitCovector& C, const FlatMetric& g) {
  if (pt.v.size() != C.dim() || pt.V.size() != C.dim()) throw std::invalid_argument("fgen: dimension mismatch");
  if (!(pt.u < 1.0)) throw SingularChartError("chart is singular for u >= 1");
  FgenImage out;
  out.W = C.components() - pt.V;
  const double w2 = norm2(g, out.W);
  if (!(w2 > 0.0)) throw SingularChartError("chart is singular along V = C");
  const double len = std::sqrt(w2);
  out.sigma = (1.0 - pt.u) * len;
  out.Sigma = -pt.U / len;
  out.w = -pt.v - (1.0 - pt.u) * pt.U * g.sharp(out.W) / w2;
  return out;
}

HighPrecision remainder_at(const NormalFormCoeffs& nf, const HighPrecision& x, const HighPrecision& X,
                           const HighPrecision& c, const HighPrecision& m) {
  using HP = HighPrecision;
  using boost::multiprecision::abs;
  using boost::multiprecision::log;
  using boost::multiprecision::sqrt;
  const GradedPoly nu_x = nf.nu.derivative("x"), nu_U = nf.nu.derivative("U");
  const GradedPoly nu_xU = nu_x.derivative("U");
  HP U = X;
  const HP tol = HP(1e-45) * (1 + abs(X));
  for (int it = 0; it < 200; ++it) {
    const std::array<HP, 4> pt{x, U, c, m};
    const HP step = (nu_x.evaluate<HP>(pt) - X) / nu_xU.evaluate<HP>(pt);
    U -= step;
    if (abs(step) <= tol) break;
  }
  const std::array<HP, 4> pt{x, U, c, m};
  const HP u = nu_U.evaluate<HP>(pt);
  const HP w2 = 1 - 2 * c + m;
  const HP sigma = (1 - u) * sqrt(w2);
  const HP Sigma = -U / sqrt(w2);
  const HP f0 = w2 / (2 * sigma * sigma) + omega_value(nf.mass, sigma) * Sigma * Sigma / 2 + log(sigma);
  const std::array<HP, 3> act{x * x + X * X / 2, c, m};
  const HP g = to_scalar<HP>(nf.g0_constant) + nf.g0_nf.evaluate<HP>(act) + nf.g1_nf.evaluate<HP>(act);
  return abs(f0 - g);
}

RemainderFit remainder_scaling(const NormalFormCoeffs& nf, const std::vector<double>& radii, double x0, double X0,
                               double c0, double m0) {
  using HP = HighPrecision;
  RemainderFit fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (double r : radii) {
    const HP rr(r);
    const double err = remainder_at(nf, rr * x0, rr * X0, rr * c0, rr * rr * m0).convert_to<double>();
    fit.radii.push_back(r);
    fit.errors.push_back(err);
    const double lx = std::log(r), ly = std::log(err);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double n = static_cast<double>(radii.size());
  if (n >= 2) fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return fit;
}

nlohmann::json normal_form_report(const NormalFormCoeffs& nf) {
  auto opt = [](const std::optional<Rational>& q) { return q ? nlohmann::json(q->str()) : nlohmann::json(nullptr); };
  nlohmann::json higher = nlohmann::json::array();
  for (const auto& c : nf.mass.higher) higher.push_back(c.str());
  return {{"a", nf.mass.a.str()},
          {"b", nf.mass.b.str()},
          {"higher", higher},
          {"order", nf.order},
          {"alpha", opt(nf.alpha)},
          {"beta_scalar", nf.beta_scalar.str()},
          {"gamma_par", opt(nf.gamma_par)},
          {"gamma_perp", opt(nf.gamma_perp)},
          {"g0_constant", nf.g0_constant.str()},
          {"nu", nf.nu.to_json()},
          {"nu_text", nf.nu.to_string()},
          {"g0_nf", nf.g0_nf.to_string()},
          {"g1_nf", nf.g1_nf.to_string()},
          {"residual_ok", nf.residual_ok}};
}

std::vector<NormalFormCoeffs> solve_nf_grid(const std::vector<MassSeries>& grid, int order, int jobs) {
  std::vector<std::optional<NormalFormCoeffs>> slots(grid.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      try {
        slots[i] = solve_nf(build_chart_expansion(grid[i], order));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_threads = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(grid.size(), 1)));
  std::vector<std::thread> pool;
  for (int k = 1; k < n_threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  std::vector<NormalFormCoeffs> out;
  out.reserve(grid.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace thermokam
