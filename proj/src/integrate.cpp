#include "thermokam/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace thermokam {

void IntegratorConfig::validate() const {
  if (!(h > 0.0)) throw std::invalid_argument("step h must be positive");
  if (!(newton_tol > 0.0) || !(rk_rel_tol > 0.0) || !(rk_abs_tol > 0.0))
    throw std::invalid_argument("tolerances must be positive");
  if (newton_max_iter < 1) throw std::invalid_argument("newton_max_iter must be positive");
  if (max_steps < 1) throw std::invalid_argument("max_steps must be positive");
  if (sample_every < 1) throw std::invalid_argument("sample_every must be positive");
  if (!(sigma_min > 0.0)) throw std::invalid_argument("sigma_min must be positive");
}

namespace {

bool below_floor(const Eigen::VectorXd& x, const IntegratorConfig& cfg) {
  return cfg.sigma_index >= 0 && !(x(cfg.sigma_index) >= cfg.sigma_min);
}

void record(Orbit& orbit, double t, const Eigen::VectorXd& x, const EnergyFn& energy) {
  orbit.times.push_back(t);
  orbit.states.push_back(x);
  if (energy) orbit.energy.push_back(energy(x));
}

}  // namespace

StepResult implicit_midpoint_step(const Field& field, const Eigen::VectorXd& x, double h, const IntegratorConfig& cfg) {
  const Eigen::Index n = x.size();
  const double eps = std::numeric_limits<double>::epsilon();
  StepResult out;
  try {
    // Solve G(z) = z - x - h/2 f(z) = 0 for the midpoint z.
    Eigen::VectorXd z = x + 0.5 * h * field(x);
    Eigen::MatrixXd jac(n, n);
    for (int it = 1; it <= cfg.newton_max_iter; ++it) {
      const Eigen::VectorXd fz = field(z);
      const Eigen::VectorXd g = z - x - 0.5 * h * fz;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double dz = std::sqrt(eps) * std::max(1.0, std::abs(z(j)));
        Eigen::VectorXd zp = z;
        zp(j) += dz;
        jac.col(j) = -0.5 * h * (field(zp) - fz) / dz;
        jac(j, j) += 1.0;
      }
      const Eigen::VectorXd delta = jac.partialPivLu().solve(g);
      z -= delta;
      out.iterations = it;
      const double scale = std::max(1.0, z.cwiseAbs().maxCoeff());
      if (!delta.allFinite() || !z.allFinite()) break;
      if (delta.cwiseAbs().maxCoeff() <= std::max(cfg.newton_tol, 4 * eps) * scale) {
        out.state = 2.0 * z - x;
        out.status = StepStatus::converged;
        return out;
      }
    }
    out.status = StepStatus::not_converged;
  } catch (const std::domain_error&) {
    out.status = StepStatus::domain_error;
  }
  out.state = x;
  return out;
}

Orbit integrate_midpoint(const Field& field, const Eigen::VectorXd& x0, double t_end, const IntegratorConfig& cfg,
                         const EnergyFn& energy) {
  cfg.validate();
  Orbit orbit;
  record(orbit, 0.0, x0, energy);
  const long n_steps = std::max(1L, std::lround(std::abs(t_end) / cfg.h));
  const double h = t_end / static_cast<double>(n_steps);
  if (n_steps > cfg.max_steps) orbit.max_steps_exceeded = true;
  const long limit = std::min(n_steps, cfg.max_steps);

  // Advances x by `dt`, splitting into halves when Newton fails.
  std::function<StepStatus(Eigen::VectorXd&, double, int)> advance = [&](Eigen::VectorXd& x, double dt, int depth) {
    StepResult r = implicit_midpoint_step(field, x, dt, cfg);
    if (r.status == StepStatus::converged) {
      if (below_floor(r.state, cfg)) return StepStatus::domain_error;
      x = r.state;
      return StepStatus::converged;
    }
    if (r.status == StepStatus::domain_error || depth >= 10) return r.status;
    Eigen::VectorXd y = x;
    for (int half = 0; half < 2; ++half) {
      const StepStatus s = advance(y, 0.5 * dt, depth + 1);
      if (s != StepStatus::converged) return s;
    }
    x = y;
    return StepStatus::converged;
  };

  Eigen::VectorXd x = x0;
  for (long k = 1; k <= limit; ++k) {
    const StepStatus s = advance(x, h, 0);
    if (s != StepStatus::converged) {
      (s == StepStatus::domain_error ? orbit.sigma_floor_hit : orbit.step_failed) = true;
      if (orbit.times.back() != h * static_cast<double>(k - 1)) record(orbit, h * static_cast<double>(k - 1), x, energy);
      return orbit;
    }
    orbit.steps = k;
    if (k % cfg.sample_every == 0 || k == limit) record(orbit, h * static_cast<double>(k), x, energy);
  }
  return orbit;
}

Orbit rk_adaptive_integrate(const Field& field, const Eigen::VectorXd& x0, std::pair<double, double> t_span,
                            const IntegratorConfig& cfg, const EnergyFn& energy) {
  Orbit orbit;
  record(orbit, t_span.first, x0, energy);
  Dopri5 rk(field, x0, t_span.first, cfg);
  long k = 0;
  while (rk.t() != t_span.second) {
    if (k >= cfg.max_steps) {
      orbit.max_steps_exceeded = true;
      break;
    }
    const Dopri5::Status s = rk.step(t_span.second);
    if (s != Dopri5::Status::accepted) {
      (s == Dopri5::Status::sigma_floor ? orbit.sigma_floor_hit : orbit.step_failed) = true;
      break;
    }
    ++k;
    if (k % cfg.sample_every == 0 || rk.t() == t_span.second) record(orbit, rk.t(), rk.x(), energy);
  }
  orbit.steps = k;
  if (orbit.times.back() != rk.t()) record(orbit, rk.t(), rk.x(), energy);
  return orbit;
}

double energy_drift(const Orbit& orbit, const EnergyFn& energy) {
  if (orbit.states.empty()) return 0.0;
  const double e0 = energy(orbit.states.front());
  double drift = 0.0;
  for (const auto& x : orbit.states) drift = std::max(drift, std::abs(energy(x) - e0));
  return drift;
}

void write_orbit_csv(std::ostream& out, const Orbit& orbit, const std::vector<std::string>& fields) {
  out << "t";
  for (const auto& f : fields) out << ',' << f;
  out << ",E\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < orbit.states.size(); ++i) {
    const auto& x = orbit.states[i];
    if (static_cast<std::size_t>(x.size()) < fields.size()) throw std::invalid_argument("orbit CSV: too many field names");
    out << orbit.times[i];
    for (std::size_t j = 0; j < fields.size(); ++j) out << ',' << x(static_cast<Eigen::Index>(j));
    out << ',';
    if (i < orbit.energy.size()) out << orbit.energy[i];
    out << '\n';
  }
}

}  // namespace thermokam
