#pragma once

#include "thermokam/mathcore.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace thermokam {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Thermostat mass profile in the rescaled chart:
///   Omega(sigma) = 1 + a (sigma-1) + b/2 (sigma-1)^2 + sum_{j>=3} c_j (sigma-1)^j.
/// The constant profile is Omega = 1.
class MassProfile {
 public:
  enum class Kind { constant, polynomial };

  MassProfile() = default;
  static MassProfile constant() { return {}; }
  /// `higher` holds c_3, c_4, ... . Positivity is sampled on [lo, hi].
  static MassProfile polynomial(double a, double b, std::vector<double> higher = {}, double lo = 0.5, double hi = 2.0);

  Kind kind() const { return kind_; }
  double a() const { return a_; }
  double b() const { return b_; }
  const std::vector<double>& higher() const { return higher_; }
  double domain_lo() const { return lo_; }
  double domain_hi() const { return hi_; }

  double omega(double sigma) const;
  double omega_prime(double sigma) const;
  /// Throws DomainError unless Omega > 0 at `samples` points of the domain.
  void check_positive(int samples = 1001) const;

 private:
  Kind kind_ = Kind::constant;
  double a_ = 0.0;
  double b_ = 0.0;
  std::vector<double> higher_;
  double lo_ = 0.5;
  double hi_ = 2.0;
};

/// Model constants. `kT_eff` is the single amalgamated temperature constant
/// n k T used in every formula.
struct ThermostatParams {
  Eigen::Index n = 1;
  double M = 1.0;
  double kT_eff = 1.0;
  MassProfile mass;

  static ThermostatParams from_physical(Eigen::Index n, double M, double k, double T, MassProfile mass = {});
  double beta() const { return 1.0 / kT_eff; }
  void validate() const;
};

/// Point of T*(T^n x R+): flat layout [q, p, s, p_s].
struct ExtendedState {
  Eigen::VectorXd q, p;
  double s = 1.0;
  double p_s = 0.0;

  Eigen::VectorXd flatten() const;
  static ExtendedState unflatten(const Eigen::VectorXd& x, Eigen::Index n);
};

/// Rescaled chart: flat layout [w, W, sigma, Sigma].
struct RescaledState {
  Eigen::VectorXd w, W;
  double sigma = 1.0;
  double Sigma = 0.0;

  Eigen::VectorXd flatten() const;
  static RescaledState unflatten(const Eigen::VectorXd& x, Eigen::Index n);
};

/// Nose-Hoover chart: flat layout [q, rho, xi].
struct NoseHooverState {
  Eigen::VectorXd q, rho;
  double xi = 0.0;

  Eigen::VectorXd flatten() const;
  static NoseHooverState unflatten(const Eigen::VectorXd& x, Eigen::Index n);
};

/// Canonical two-form for the [q, p, s, p_s] (or [w, W, sigma, Sigma])
/// layout, pairing q_i with p_i and s with p_s.
Eigen::MatrixXd extended_symplectic_form(Eigen::Index n);

// Nose Hamiltonian
//   F = 1/2 |p/s|^2 + V(q) + 1/2 Omega_ext(s) p_s^2 + kT_eff ln s,
// with Omega_ext(s) = Omega(s sqrt(M kT_eff)) / M, so that the constant
// profile gives p_s^2 / 2M.
double nose_energy(const ExtendedState& st, const ThermostatParams& pr, const Potential& V, const FlatMetric& g);
ExtendedState nose_vector_field(const ExtendedState& st, const ThermostatParams& pr, const Potential& V,
                                const FlatMetric& g);

// Rescaled Hamiltonian
//   F_beta = 1/2 |W/sigma|^2 + 1/2 Omega(sigma) Sigma^2 + beta V(w sqrt(M)) + ln sigma.
double rescaled_energy(const RescaledState& st, double beta, const ThermostatParams& pr, const Potential& V,
                       const FlatMetric& g);
RescaledState rescaled_vector_field(const RescaledState& st, double beta, const ThermostatParams& pr,
                                    const Potential& V, const FlatMetric& g);

/// Heap-free state vector for n <= 3.
using SmallVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 8, 1>;

/// F_beta and its canonical field on flat [w, W, sigma, Sigma] vectors of
/// any Eigen vector type.
template <class Vec>
double rescaled_energy_flat(const Vec& x, double beta, const ThermostatParams& pr, const Potential& V,
                            const FlatMetric& g) {
  const Eigen::Index n = g.dim();
  if (x.size() != 2 * n + 2) throw std::invalid_argument("state vector has wrong length");
  const double sig = x(2 * n), Sig = x(2 * n + 1);
  if (!(sig > 0.0)) throw DomainError("sigma must be positive");
  double e = 0.5 * norm2(g, x.segment(n, n)) / (sig * sig) + 0.5 * pr.mass.omega(sig) * Sig * Sig + std::log(sig);
  if (beta != 0.0) e += beta * potential_value(V, (std::sqrt(pr.M) * x.head(n)).eval());
  return e;
}

template <class Vec>
Vec rescaled_field_flat(const Vec& x, double beta, const ThermostatParams& pr, const Potential& V,
                        const FlatMetric& g) {
  const Eigen::Index n = g.dim();
  if (x.size() != 2 * n + 2) throw std::invalid_argument("state vector has wrong length");
  const double sig = x(2 * n), Sig = x(2 * n + 1);
  if (!(sig > 0.0)) throw DomainError("sigma must be positive");
  Vec d(2 * n + 2);
  d.head(n) = g.sharp(x.segment(n, n)) / (sig * sig);
  if (beta != 0.0) {
    const double root_m = std::sqrt(pr.M);
    d.segment(n, n) = -beta * root_m * potential_gradient(V, (root_m * x.head(n)).eval());
  } else {
    d.segment(n, n).setZero();
  }
  d(2 * n) = pr.mass.omega(sig) * Sig;
  d(2 * n + 1) = norm2(g, x.segment(n, n)) / (sig * sig * sig) - 1.0 / sig -
                 0.5 * pr.mass.omega_prime(sig) * Sig * Sig;
  return d;
}

/// Nose-Hoover tangent (dq, drho, dxi).
NoseHooverState nose_hoover_vector_field(const NoseHooverState& st, const ThermostatParams& pr, const Potential& V,
                                         const FlatMetric& g);
/// Flat [q, rho, xi, eta] field with deta = xi, whose invariant is
/// nose_hoover_energy.
Eigen::VectorXd nose_hoover_augmented_field(const Eigen::VectorXd& x, const ThermostatParams& pr, const Potential& V,
                                            const FlatMetric& g);
/// 1/2 |rho|^2 + V(q) + M/2 xi^2 + kT_eff eta.
double nose_hoover_energy(const Eigen::VectorXd& x, const ThermostatParams& pr, const Potential& V,
                          const FlatMetric& g);

/// q = sqrt(M) w, p = W / sqrt(M), s = sigma / sqrt(M kT), p_s = sqrt(M kT) Sigma.
/// Then F = kT F_beta - kT/2 ln(M kT), and the flow of F at time t is the
/// flow of F_beta at time kT t.
RescaledState rescale_state(const ExtendedState& st, const ThermostatParams& pr);
ExtendedState unrescale_state(const RescaledState& st, const ThermostatParams& pr);

enum class Chart { extended, rescaled };

/// Thermostatic equilibria {ds = 0 = dp_s}: p_s = 0, |p|^2 = kT s^2
/// (extended) or Sigma = 0, |W| = sigma (rescaled).
bool is_thermostatic_equilibrium(const Eigen::VectorXd& flat, Chart chart, const ThermostatParams& pr,
                                 const FlatMetric& g, double tol = 1e-10);
/// The distinguished component w -> (w, C, 1, 0) in the rescaled chart.
RescaledState equilibrium_point(const Eigen::VectorXd& w, const UnitCovector& C, double radius = 1.0);

/// n = 1 Cartesian chart (a, b) = sigma (cos w, sin w) with conjugate (A, B).
struct CartesianState {
  double a, b, A, B;
};
CartesianState cartesian_from_polar(double sigma, double w, double Sigma, double W);
/// 1/2 (A^2 + B^2) + 1/2 ln(a^2 + b^2).
double log_potential_energy(const CartesianState& st);

}  // namespace thermokam
