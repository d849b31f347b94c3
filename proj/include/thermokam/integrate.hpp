#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace thermokam {

using Field = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using EnergyFn = std::function<double(const Eigen::VectorXd&)>;

struct IntegratorConfig {
  double h = 1e-2;
  double newton_tol = 1e-12;
  int newton_max_iter = 50;
  double rk_rel_tol = 1e-10;
  double rk_abs_tol = 1e-12;
  long max_steps = 50'000'000;
  /// Steps that would put state(sigma_index) below sigma_min are rejected
  /// and the orbit is flagged. -1 disables the check.
  Eigen::Index sigma_index = -1;
  double sigma_min = 1e-6;
  /// Keep every k-th step in the orbit (the final state is always kept).
  long sample_every = 1;

  void validate() const;
};

struct Orbit {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<double> energy;
  bool max_steps_exceeded = false;
  bool sigma_floor_hit = false;
  bool step_failed = false;
  long steps = 0;

  bool truncated() const { return max_steps_exceeded || sigma_floor_hit || step_failed; }
};

enum class StepStatus { converged, not_converged, domain_error };

struct StepResult {
  Eigen::VectorXd state;
  StepStatus status = StepStatus::converged;
  int iterations = 0;
};

/// One implicit-midpoint step x -> x + h f((x + x')/2), solved by Newton
/// iteration with a finite-difference Jacobian.
StepResult implicit_midpoint_step(const Field& field, const Eigen::VectorXd& x, double h, const IntegratorConfig& cfg);

/// Fixed-step implicit midpoint from t = 0 to t_end. A step whose Newton
/// solve fails is retried as two half steps, down to h / 1024.
Orbit integrate_midpoint(const Field& field, const Eigen::VectorXd& x0, double t_end, const IntegratorConfig& cfg,
                         const EnergyFn& energy = {});

namespace detail {

struct Dopri5Tableau {
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
};

// Fifth-order update from x with k1 = f(x). Fills the embedded error
// estimate and k7 = f(x_new) (reused as the next k1) when requested.
template <class Vec, class F>
Vec dopri5_update(const F& f, const Vec& x, double h, const Vec& k1, Vec* error, Vec* k7_out) {
  using T = Dopri5Tableau;
  const Vec k2 = f(Vec(x + h * (T::a21 * k1)));
  const Vec k3 = f(Vec(x + h * (T::a31 * k1 + T::a32 * k2)));
  const Vec k4 = f(Vec(x + h * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3)));
  const Vec k5 = f(Vec(x + h * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4)));
  const Vec k6 = f(Vec(x + h * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 + T::a64 * k4 + T::a65 * k5)));
  Vec y = x + h * (T::b1 * k1 + T::b3 * k3 + T::b4 * k4 + T::b5 * k5 + T::b6 * k6);
  if (error || k7_out) {
    const Vec k7 = f(y);
    if (error) *error = h * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 + T::e6 * k6 + T::e7 * k7);
    if (k7_out) *k7_out = k7;
  }
  return y;
}

}  // namespace detail

/// One Dormand-Prince 5(4) step. Returns the fifth-order solution and, if
/// requested, the embedded error estimate.
template <class Vec, class F>
Vec dopri5_step(const F& field, const Vec& x, double h, Vec* error = nullptr) {
  return detail::dopri5_update<Vec>(field, x, h, Vec(field(x)), error, static_cast<Vec*>(nullptr));
}

/// Adaptive Dormand-Prince driver exposing accepted steps one at a time.
/// `F` maps Vec -> Vec; stages that throw std::domain_error count as
/// rejections.
template <class Vec, class F>
class BasicDopri5 {
 public:
  enum class Status { accepted, step_underflow, sigma_floor };

  BasicDopri5(F field, Vec x0, double t0, const IntegratorConfig& cfg)
      : field_(std::move(field)), x_(std::move(x0)), t_(t0), h_(cfg.h), cfg_(cfg) {
    cfg_.validate();
    k1_ = field_(x_);
  }

  /// Advances by one accepted step without passing t_stop (either direction).
  Status step(double t_stop) {
    const double dir = t_stop >= t_ ? 1.0 : -1.0;
    bool rejected = false;
    while (true) {
      const double proposed = std::abs(h_);
      const bool clipped = std::abs(t_stop - t_) < proposed;
      const double h = dir * std::min(proposed, std::abs(t_stop - t_));
      if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(t_))) return Status::step_underflow;
      Vec err, k7, y;
      double e = std::numeric_limits<double>::infinity();
      try {
        y = detail::dopri5_update<Vec>(field_, x_, h, k1_, &err, &k7);
        if (y.allFinite() && err.allFinite()) e = error_norm(err, y);
      } catch (const std::domain_error&) {
      }
      if (e <= 1.0) {
        if (cfg_.sigma_index >= 0 && !(y(cfg_.sigma_index) >= cfg_.sigma_min)) return Status::sigma_floor;
        const double grow = e == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(e, -0.2), 0.2, rejected ? 1.0 : 5.0);
        x_ = std::move(y);
        k1_ = std::move(k7);
        t_ = std::abs(t_stop - t_ - h) <= 1e-15 * std::max(1.0, std::abs(t_stop)) ? t_stop : t_ + h;
        last_h_ = h;
        // A step shortened to hit t_stop does not shrink the next proposal.
        h_ = clipped ? std::max(proposed, std::abs(h) * grow) : std::abs(h) * grow;
        return Status::accepted;
      }
      rejected = true;
      h_ = std::abs(h) * (std::isfinite(e) ? std::clamp(0.9 * std::pow(e, -0.2), 0.1, 0.9) : 0.25);
    }
  }

  double t() const { return t_; }
  const Vec& x() const { return x_; }
  /// Field value at the current state.
  const Vec& derivative() const { return k1_; }
  double last_h() const { return last_h_; }
  const F& field() const { return field_; }

 private:
  double error_norm(const Vec& err, const Vec& y) const {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
      const double scale = cfg_.rk_abs_tol + cfg_.rk_rel_tol * std::max(std::abs(x_(i)), std::abs(y(i)));
      acc += (err(i) / scale) * (err(i) / scale);
    }
    return std::sqrt(acc / static_cast<double>(err.size()));
  }

  F field_;
  Vec x_;
  Vec k1_;
  double t_;
  double h_;
  double last_h_ = 0.0;
  IntegratorConfig cfg_;
};

using Dopri5 = BasicDopri5<Eigen::VectorXd, Field>;

/// Integrates from t_span.first to t_span.second (either direction),
/// recording accepted steps.
Orbit rk_adaptive_integrate(const Field& field, const Eigen::VectorXd& x0, std::pair<double, double> t_span,
                            const IntegratorConfig& cfg, const EnergyFn& energy = {});

/// max_i |E(x_i) - E(x_0)|.
double energy_drift(const Orbit& orbit, const EnergyFn& energy);

/// Header `t,<fields>,E`, 17 significant digits.
void write_orbit_csv(std::ostream& out, const Orbit& orbit, const std::vector<std::string>& fields);

}  // namespace thermokam
