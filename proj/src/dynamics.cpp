#include "thermokam/dynamics.hpp"

#include <cmath>

namespace thermokam {

MassProfile MassProfile::polynomial(double a, double b, std::vector<double> higher, double lo, double hi) {
  if (!(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("mass profile domain must satisfy 0 < lo < hi");
  MassProfile m;
  m.kind_ = Kind::polynomial;
  m.a_ = a;
  m.b_ = b;
  m.higher_ = std::move(higher);
  m.lo_ = lo;
  m.hi_ = hi;
  return m;
}

double MassProfile::omega(double sigma) const {
  if (kind_ == Kind::constant) return 1.0;
  const double d = sigma - 1.0;
  double tail = 0.0;
  for (std::size_t j = higher_.size(); j-- > 0;) tail = tail * d + higher_[j];
  return 1.0 + a_ * d + 0.5 * b_ * d * d + tail * d * d * d;
}

double MassProfile::omega_prime(double sigma) const {
  if (kind_ == Kind::constant) return 0.0;
  const double d = sigma - 1.0;
  double tail = 0.0, dpow = d * d;
  for (std::size_t j = 0; j < higher_.size(); ++j, dpow *= d) tail += static_cast<double>(j + 3) * higher_[j] * dpow;
  return a_ + b_ * d + tail;
}

void MassProfile::check_positive(int samples) const {
  if (kind_ == Kind::constant) return;
  for (int i = 0; i < samples; ++i) {
    const double sigma = lo_ + (hi_ - lo_) * i / std::max(samples - 1, 1);
    if (!(omega(sigma) > 0.0))
      throw DomainError("mass profile is not positive at sigma = " + std::to_string(sigma));
  }
}

ThermostatParams ThermostatParams::from_physical(Eigen::Index n, double M, double k, double T, MassProfile mass) {
  ThermostatParams p;
  p.n = n;
  p.M = M;
  p.kT_eff = static_cast<double>(n) * k * T;
  p.mass = std::move(mass);
  p.validate();
  return p;
}

void ThermostatParams::validate() const {
  if (n < 1) throw std::invalid_argument("n must be positive");
  if (!(M > 0.0)) throw std::invalid_argument("thermostat mass M must be positive");
  if (!(kT_eff > 0.0)) throw std::invalid_argument("temperature must be positive");
  mass.check_positive();
}

namespace {

Eigen::VectorXd concat(std::initializer_list<const Eigen::VectorXd*> parts, std::initializer_list<double> tail) {
  Eigen::Index size = static_cast<Eigen::Index>(tail.size());
  for (const auto* p : parts) size += p->size();
  Eigen::VectorXd x(size);
  Eigen::Index at = 0;
  for (const auto* p : parts) {
    x.segment(at, p->size()) = *p;
    at += p->size();
  }
  for (double t : tail) x(at++) = t;
  return x;
}

void check_flat_size(const Eigen::VectorXd& x, Eigen::Index expected) {
  if (x.size() != expected) throw std::invalid_argument("state vector has wrong length");
}

void check_positive(double s, const char* name) {
  if (!(s > 0.0)) throw DomainError(std::string(name) + " must be positive");
}

double omega_ext(const ThermostatParams& pr, double s) {
  return pr.mass.omega(s * std::sqrt(pr.M * pr.kT_eff)) / pr.M;
}

double omega_ext_prime(const ThermostatParams& pr, double s) {
  const double scale = std::sqrt(pr.M * pr.kT_eff);
  return scale * pr.mass.omega_prime(s * scale) / pr.M;
}

}  // namespace

Eigen::VectorXd ExtendedState::flatten() const { return concat({&q, &p}, {s, p_s}); }

ExtendedState ExtendedState::unflatten(const Eigen::VectorXd& x, Eigen::Index n) {
  check_flat_size(x, 2 * n + 2);
  return {x.head(n), x.segment(n, n), x(2 * n), x(2 * n + 1)};
}

Eigen::VectorXd RescaledState::flatten() const { return concat({&w, &W}, {sigma, Sigma}); }

RescaledState RescaledState::unflatten(const Eigen::VectorXd& x, Eigen::Index n) {
  check_flat_size(x, 2 * n + 2);
  return {x.head(n), x.segment(n, n), x(2 * n), x(2 * n + 1)};
}

Eigen::VectorXd NoseHooverState::flatten() const { return concat({&q, &rho}, {xi}); }

NoseHooverState NoseHooverState::unflatten(const Eigen::VectorXd& x, Eigen::Index n) {
  check_flat_size(x, 2 * n + 1);
  return {x.head(n), x.segment(n, n), x(2 * n)};
}

Eigen::MatrixXd extended_symplectic_form(Eigen::Index n) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * n + 2, 2 * n + 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    omega(i, n + i) = 1.0;
    omega(n + i, i) = -1.0;
  }
  omega(2 * n, 2 * n + 1) = 1.0;
  omega(2 * n + 1, 2 * n) = -1.0;
  return omega;
}

double nose_energy(const ExtendedState& st, const ThermostatParams& pr, const Potential& V, const FlatMetric& g) {
  check_positive(st.s, "s");
  return 0.5 * norm2(g, st.p) / (st.s * st.s) + potential_value(V, st.q) +
         0.5 * omega_ext(pr, st.s) * st.p_s * st.p_s + pr.kT_eff * std::log(st.s);
}

ExtendedState nose_vector_field(const ExtendedState& st, const ThermostatParams& pr, const Potential& V,
                                const FlatMetric& g) {
  check_positive(st.s, "s");
  const double s = st.s;
  ExtendedState d;
  d.q = g.sharp(st.p) / (s * s);
  d.p = -potential_gradient(V, st.q);
  d.s = omega_ext(pr, s) * st.p_s;
  d.p_s = norm2(g, st.p) / (s * s * s) - pr.kT_eff / s - 0.5 * omega_ext_prime(pr, s) * st.p_s * st.p_s;
  return d;
}

double rescaled_energy(const RescaledState& st, double beta, const ThermostatParams& pr, const Potential& V,
                       const FlatMetric& g) {
  return rescaled_energy_flat(st.flatten(), beta, pr, V, g);
}

RescaledState rescaled_vector_field(const RescaledState& st, double beta, const ThermostatParams& pr,
                                    const Potential& V, const FlatMetric& g) {
  return RescaledState::unflatten(rescaled_field_flat(st.flatten(), beta, pr, V, g), g.dim());
}

NoseHooverState nose_hoover_vector_field(const NoseHooverState& st, const ThermostatParams& pr, const Potential& V,
                                         const FlatMetric& g) {
  NoseHooverState d;
  d.q = g.sharp(st.rho);
  d.rho = -potential_gradient(V, st.q) - st.xi * st.rho;
  d.xi = (norm2(g, st.rho) - pr.kT_eff) / pr.M;
  return d;
}

Eigen::VectorXd nose_hoover_augmented_field(const Eigen::VectorXd& x, const ThermostatParams& pr, const Potential& V,
                                            const FlatMetric& g) {
  const Eigen::Index n = g.dim();
  check_flat_size(x, 2 * n + 2);
  const NoseHooverState st = NoseHooverState::unflatten(x.head(2 * n + 1), n);
  Eigen::VectorXd out(2 * n + 2);
  out.head(2 * n + 1) = nose_hoover_vector_field(st, pr, V, g).flatten();
  out(2 * n + 1) = st.xi;
  return out;
}

double nose_hoover_energy(const Eigen::VectorXd& x, const ThermostatParams& pr, const Potential& V,
                          const FlatMetric& g) {
  const Eigen::Index n = g.dim();
  check_flat_size(x, 2 * n + 2);
  const Eigen::VectorXd q = x.head(n), rho = x.segment(n, n);
  const double xi = x(2 * n), eta = x(2 * n + 1);
  return 0.5 * norm2(g, rho) + potential_value(V, q) + 0.5 * pr.M * xi * xi + pr.kT_eff * eta;
}

RescaledState rescale_state(const ExtendedState& st, const ThermostatParams& pr) {
  const double root_m = std::sqrt(pr.M), root_mt = std::sqrt(pr.M * pr.kT_eff);
  return {st.q / root_m, st.p * root_m, st.s * root_mt, st.p_s / root_mt};
}

ExtendedState unrescale_state(const RescaledState& st, const ThermostatParams& pr) {
  const double root_m = std::sqrt(pr.M), root_mt = std::sqrt(pr.M * pr.kT_eff);
  return {st.w * root_m, st.W / root_m, st.sigma / root_mt, st.Sigma * root_mt};
}

bool is_thermostatic_equilibrium(const Eigen::VectorXd& flat, Chart chart, const ThermostatParams& pr,
                                 const FlatMetric& g, double tol) {
  const Eigen::Index n = g.dim();
  check_flat_size(flat, 2 * n + 2);
  const Eigen::VectorXd mom = flat.segment(n, n);
  const double s = flat(2 * n), ps = flat(2 * n + 1);
  if (!(s > 0.0)) return false;
  const double target = chart == Chart::extended ? pr.kT_eff * s * s : s * s;
  return std::abs(ps) <= tol && std::abs(norm2(g, mom) - target) <= tol * std::max(1.0, target);
}

RescaledState equilibrium_point(const Eigen::VectorXd& w, const UnitCovector& C, double radius) {
  if (w.size() != C.dim()) throw std::invalid_argument("equilibrium_point: dimension mismatch");
  check_positive(radius, "radius");
  return {w, radius * C.components(), radius, 0.0};
}

CartesianState cartesian_from_polar(double sigma, double w, double Sigma, double W) {
  check_positive(sigma, "sigma");
  const double c = std::cos(w), s = std::sin(w);
  return {sigma * c, sigma * s, Sigma * c - W / sigma * s, Sigma * s + W / sigma * c};
}

double log_potential_energy(const CartesianState& st) {
  return 0.5 * (st.A * st.A + st.B * st.B) + 0.5 * std::log(st.a * st.a + st.b * st.b);
}

}  // namespace thermokam
