#include "thermokam/kamscan.hpp"

#include <boost/math/constants/constants.hpp>

#include <atomic>
#include <cmath>
#include <iomanip>
#include <limits>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace thermokam {

void SectionSpec::validate() const {
  if (direction != 1 && direction != -1) throw std::invalid_argument("section direction must be +1 or -1");
  if (!(crossing_tol > 0.0)) throw std::invalid_argument("crossing_tol must be positive");
  if (max_crossings < 1) throw std::invalid_argument("max_crossings must be positive");
  if (t_max < 0.0) throw std::invalid_argument("t_max must be non-negative");
  if (!(in_section_tol > 0.0) || !(in_section_dt > 0.0))
    throw std::invalid_argument("in-section tolerance and sampling period must be positive");
}

void ClassifierThresholds::validate() const {
  if (!(gap > 0.0) || !(resonance_tol > 0.0)) throw std::invalid_argument("classifier tolerances must be positive");
  if (max_denominator < 1) throw std::invalid_argument("max_denominator must be positive");
  if (min_crossings < 4) throw std::invalid_argument("min_crossings must be at least 4");
  if (!(sigma_lo > 0.0) || !(sigma_hi > sigma_lo)) throw std::invalid_argument("need 0 < sigma_lo < sigma_hi");
  if (!std::isfinite(thermo_level)) throw std::invalid_argument("thermo_level must be finite");
}

void ScanModel::validate() const {
  params.validate();
  if (params.n != g.dim() || potential_dim(V) != g.dim())
    throw std::invalid_argument("scan model: dimension mismatch between params, potential and metric");
  if (!std::isfinite(beta) || beta < 0.0) throw std::invalid_argument("beta must be finite and non-negative");
}

void IcGrid::validate() const {
  if (W_points < 1 || d_points < 1) throw std::invalid_argument("IC grid needs at least one point per axis");
  if (!(W_lo > 0.0) || W_hi < W_lo) throw std::invalid_argument("IC grid: need 0 < W_lo <= W_hi");
  if (!(d_lo > 0.0) || d_hi < d_lo) throw std::invalid_argument("IC grid: need 0 < d_lo <= d_hi");
}

namespace {

double grid_point(double lo, double hi, int k, int points) {
  return points == 1 ? lo : lo + (hi - lo) * k / (points - 1);
}

struct TraceFlags {
  bool max_steps_exceeded = false;
  bool time_limit = false;
  bool integration_failed = false;
  bool stopped = false;  // on_step asked to stop
  long crossings = 0;
  double t_end = 0.0;
};

// Root of g on a step from x_prev (g < 0) to the accepted end (g >= 0) by
// Illinois false position; states come from single steps of length tau.
template <class Vec, class F, class G>
std::pair<double, Vec> refine_crossing(const F& field, const Vec& x_prev, const Vec& x_new, double h, G&& g,
                                       double tol) {
  double lo = 0.0, hi = h, f_lo = g(x_prev), f_hi = g(x_new);
  if (std::abs(f_hi) <= tol) return {h, x_new};
  Vec xc = x_new;
  double tau = hi;
  int side = 0;
  for (int it = 0; it < 100; ++it) {
    tau = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
    if (!(tau > lo && tau < hi)) tau = 0.5 * (lo + hi);
    xc = dopri5_step<Vec>(field, x_prev, tau);
    const double f = g(xc);
    if (std::abs(f) <= tol || hi - lo <= 4 * std::numeric_limits<double>::epsilon() * h) break;
    if (f < 0.0) {
      lo = tau;
      f_lo = f;
      if (side == -1) f_hi *= 0.5;
      side = -1;
    } else {
      hi = tau;
      f_hi = f;
      if (side == 1) f_lo *= 0.5;
      side = 1;
    }
  }
  return {tau, xc};
}

// Integrates from x0 until spec.max_crossings crossings. Calls
// on_crossing(t, x) at each refined section crossing and on_step(t, x)
// after each accepted step (returning false stops the run). When
// lattice_offset is finite, on_lattice(t, x) also fires at each upward
// crossing of x(0) through lattice_offset + Z.
template <class Vec, class F, class OnCrossing, class OnStep, class OnLattice>
TraceFlags trace_section(const F& field, const Vec& x0, const SectionSpec& spec, const IntegratorConfig& cfg,
                         double lattice_offset, OnCrossing&& on_crossing, OnStep&& on_step, OnLattice&& on_lattice) {
  TraceFlags flags;
  const Eigen::Index c = spec.resolved_coordinate(x0.size());
  if (c >= x0.size()) throw std::invalid_argument("section coordinate out of range");
  const double dir = spec.direction;
  auto s_of = [&](const Vec& x) { return dir * (x(c) - spec.level); };
  const bool lattice = std::isfinite(lattice_offset);

  BasicDopri5<Vec, F> rk(field, x0, 0.0, cfg);
  const double t_limit = spec.t_max > 0.0 ? spec.t_max : std::numeric_limits<double>::infinity();
  double s_prev = s_of(x0);
  long steps = 0;

  while (flags.crossings < spec.max_crossings) {
    if (rk.t() >= t_limit) {
      flags.time_limit = true;
      break;
    }
    if (steps >= cfg.max_steps) {
      flags.max_steps_exceeded = true;
      break;
    }
    const double t_stop = std::isfinite(t_limit) ? t_limit : rk.t() + 1e6;
    const Vec x_prev = rk.x();
    const double t_prev = rk.t();
    if (rk.step(t_stop) != BasicDopri5<Vec, F>::Status::accepted) {
      flags.integration_failed = true;
      break;
    }
    ++steps;
    if (!on_step(rk.t(), rk.x())) {
      flags.stopped = true;
      break;
    }
    const double h = rk.t() - t_prev;
    const double s_new = s_of(rk.x());
    if (s_prev < 0.0 && s_new >= 0.0) {
      const auto [tau, xc] = refine_crossing(field, x_prev, rk.x(), h, s_of, spec.crossing_tol);
      on_crossing(t_prev + tau, xc);
      ++flags.crossings;
    }
    s_prev = s_new;
    if (lattice) {
      const double k_prev = std::floor(x_prev(0) - lattice_offset);
      const double k_new = std::floor(rk.x()(0) - lattice_offset);
      for (double k = k_prev + 1.0; k <= k_new; k += 1.0) {
        const double level = lattice_offset + k;
        const auto [tau, xc] = refine_crossing(
            field, x_prev, rk.x(), h, [level](const Vec& x) { return x(0) - level; }, spec.crossing_tol);
        on_lattice(t_prev + tau, xc);
      }
    }
  }
  flags.t_end = rk.t();
  return flags;
}

bool tangent_at_start(const Eigen::VectorXd& x0, const Eigen::VectorXd& f0, const SectionSpec& spec) {
  const Eigen::Index c = spec.resolved_coordinate(x0.size());
  return std::abs(x0(c) - spec.level) <= spec.in_section_tol && std::abs(f0(c)) <= spec.in_section_tol;
}

// Orbit starting tangent to the section: sample it every in_section_dt.
SectionResult sample_in_section(const Field& field, const Eigen::VectorXd& x0, const SectionSpec& spec,
                                const IntegratorConfig& cfg) {
  SectionResult out;
  out.in_section = true;
  out.points.push_back(x0);
  out.times.push_back(0.0);
  Dopri5 rk(field, x0, 0.0, cfg);
  long steps = 0;
  for (long k = 1; k < spec.max_crossings; ++k) {
    const double target = k * spec.in_section_dt;
    if (spec.t_max > 0.0 && target > spec.t_max) {
      out.time_limit = true;
      break;
    }
    while (rk.t() < target) {
      if (++steps > cfg.max_steps) {
        out.max_steps_exceeded = true;
        return out;
      }
      if (rk.step(target) != Dopri5::Status::accepted) {
        out.integration_failed = true;
        return out;
      }
    }
    out.points.push_back(rk.x());
    out.times.push_back(rk.t());
  }
  return out;
}

double wrap_half(double x) { return x - std::round(x); }

double mod1(double x) {
  const double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

// Smallest-denominator p/q (q <= qmax) within tol of x, if any.
bool near_rational(double x, int qmax, double tol) {
  for (int q = 1; q <= qmax; ++q) {
    if (std::abs(x * q - std::round(x * q)) <= tol * q) return true;
  }
  return false;
}

struct RescaledFieldFn {
  const ScanModel* model;
  SmallVector operator()(const SmallVector& x) const {
    return rescaled_field_flat(x, model->beta, model->params, model->V, model->g);
  }
};

}  // namespace

SectionResult poincare_section(const Field& field, const Eigen::VectorXd& x0, const SectionSpec& spec,
                               const IntegratorConfig& cfg) {
  spec.validate();
  cfg.validate();
  if (tangent_at_start(x0, field(x0), spec)) return sample_in_section(field, x0, spec, cfg);
  SectionResult out;
  const TraceFlags flags = trace_section<Eigen::VectorXd>(
      field, x0, spec, cfg, std::numeric_limits<double>::quiet_NaN(),
      [&](double t, const Eigen::VectorXd& x) {
        out.points.push_back(x);
        out.times.push_back(t);
      },
      [](double, const Eigen::VectorXd&) { return true; }, [](double, const Eigen::VectorXd&) {});
  out.max_steps_exceeded = flags.max_steps_exceeded;
  out.time_limit = flags.time_limit;
  out.integration_failed = flags.integration_failed;
  return out;
}

double birkhoff_weight(double t) {
  if (!(t > 0.0 && t < 1.0)) return 0.0;
  return std::exp(-1.0 / (t * (1.0 - t)));
}

double weighted_birkhoff_average(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) throw std::invalid_argument("weighted Birkhoff average of an empty sequence");
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double w = birkhoff_weight((static_cast<double>(k) + 0.5) / static_cast<double>(n));
    num += w * values[k];
    den += w;
  }
  return num / den;
}

RotationEstimate rotation_number(std::span<const double> theta, AngleLift lift) {
  if (theta.size() < 4) throw std::invalid_argument("rotation number needs at least 4 angle samples");
  std::vector<double> inc(theta.size() - 1);
  for (std::size_t k = 0; k + 1 < theta.size(); ++k) {
    const double d = theta[k + 1] - theta[k];
    inc[k] = lift == AngleLift::mod1 ? mod1(d) : d;
  }
  const std::span<const double> all(inc);
  const std::size_t half = inc.size() / 2;
  RotationEstimate r;
  r.value = weighted_birkhoff_average(all);
  r.gap = std::abs(weighted_birkhoff_average(all.first(half)) - weighted_birkhoff_average(all.subspan(half)));
  r.samples = static_cast<long>(theta.size());
  return r;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::quasiperiodic: return "quasiperiodic";
    case Verdict::resonant: return "resonant";
    case Verdict::irregular: return "irregular";
    case Verdict::escaped: return "escaped";
  }
  return "unknown";
}

OrbitClassification classify_orbit(const ScanModel& model, const Eigen::VectorXd& x0, const SectionSpec& spec,
                                   const IntegratorConfig& cfg, const ClassifierThresholds& thr,
                                   SectionResult* section) {
  spec.validate();
  thr.validate();
  const Eigen::Index n = model.g.dim();
  if (x0.size() != 2 * n + 2) throw std::invalid_argument("initial state has wrong length");
  const double two_pi = boost::math::constants::two_pi<double>();

  const SmallVector start = x0;
  const double e0 = rescaled_energy_flat(start, model.beta, model.params, model.V, model.g);
  auto thermo_angle = [&](const SmallVector& x) {
    return std::atan2(x(2 * n + 1), x(2 * n) - std::sqrt(norm2(model.g, x.segment(n, n)))) / two_pi;
  };

  OrbitClassification out;
  std::vector<double> w_samples, thermo_samples;
  w_samples.reserve(static_cast<std::size_t>(spec.max_crossings) + 1);
  w_samples.push_back(x0(0));
  double theta = thermo_angle(start), theta_raw = theta;
  bool escaped = false;
  if (section) *section = SectionResult{};

  const TraceFlags flags = trace_section<SmallVector>(
      RescaledFieldFn{&model}, start, spec, cfg, thr.thermo_level,
      [&](double t, const SmallVector& x) {
        w_samples.push_back(x(0));
        out.energy_drift =
            std::max(out.energy_drift, std::abs(rescaled_energy_flat(x, model.beta, model.params, model.V, model.g) - e0));
        if (section) {
          section->points.emplace_back(x);
          section->times.push_back(t);
        }
      },
      [&](double, const SmallVector& x) {
        const double sig = x(2 * n);
        if (!(sig >= thr.sigma_lo && sig <= thr.sigma_hi)) {
          escaped = true;
          return false;
        }
        const double now = thermo_angle(x);
        theta += wrap_half(now - theta_raw);
        theta_raw = now;
        return true;
      },
      [&](double, const SmallVector& x) { thermo_samples.push_back(theta + wrap_half(thermo_angle(x) - theta_raw)); });

  out.crossings = flags.crossings;
  out.t_end = flags.t_end;
  if (section) {
    section->max_steps_exceeded = flags.max_steps_exceeded;
    section->time_limit = flags.time_limit;
    section->integration_failed = flags.integration_failed;
  }
  // A step rejected down to underflow or through sigma <= 0 means the orbit left the chart.
  if (escaped || flags.integration_failed) {
    out.verdict = Verdict::escaped;
    return out;
  }
  if (out.crossings < thr.min_crossings || static_cast<long>(thermo_samples.size()) < thr.min_crossings) {
    out.verdict = Verdict::irregular;
    return out;
  }
  const RotationEstimate rw = rotation_number(w_samples, AngleLift::lifted);
  const RotationEstimate rt = rotation_number(thermo_samples, AngleLift::lifted);
  out.rot_w = mod1(rw.value);
  out.rot_thermo = mod1(rt.value);
  out.gap_w = rw.gap;
  out.gap_thermo = rt.gap;
  out.gap = std::max(rw.gap, rt.gap);
  if (!(out.gap < thr.gap)) {
    out.verdict = Verdict::irregular;
  } else if (near_rational(out.rot_w, thr.max_denominator, thr.resonance_tol)) {
    out.verdict = Verdict::resonant;
  } else {
    out.verdict = Verdict::quasiperiodic;
  }
  return out;
}

std::vector<Eigen::VectorXd> IcGrid::initial_states(const FlatMetric& g) const {
  validate();
  const Eigen::Index n = g.dim();
  const UnitCovector C(g, Eigen::VectorXd::Unit(n, 0));
  std::vector<Eigen::VectorXd> out;
  for (int i = 0; i < W_points; ++i) {
    const double W0 = grid_point(W_lo, W_hi, i, W_points);
    for (int j = 0; j < d_points; ++j) {
      const double d = grid_point(d_lo, d_hi, j, d_points);
      Eigen::VectorXd x = Eigen::VectorXd::Zero(2 * n + 2);
      x.segment(n, n) = W0 * C.components();
      x(2 * n) = W0 + d;
      out.push_back(std::move(x));
    }
  }
  return out;
}

TorusScan torus_fraction(const ScanModel& model, const IcGrid& grid, const SectionSpec& spec,
                         const IntegratorConfig& cfg, const ClassifierThresholds& thr, int jobs, bool keep_points) {
  model.validate();
  spec.validate();
  thr.validate();
  cfg.validate();
  if (jobs < 1) throw std::invalid_argument("jobs must be positive");
  const auto ics = grid.initial_states(model.g);

  TorusScan scan;
  scan.beta = model.beta;
  scan.results.resize(ics.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < ics.size(); i = next++) {
      try {
        IcResult& r = scan.results[i];
        r.index = static_cast<long>(i);
        r.x0 = ics[i];
        r.cls = classify_orbit(model, ics[i], spec, cfg, thr, keep_points ? &r.section : nullptr);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(jobs), ics.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  for (const auto& r : scan.results) ++scan.counts[static_cast<int>(r.cls.verdict)];
  scan.fraction = ics.empty() ? 0.0
                              : static_cast<double>(scan.counts[static_cast<int>(Verdict::quasiperiodic)]) /
                                    static_cast<double>(ics.size());
  return scan;
}

void write_section_csv(std::ostream& out, const TorusScan& scan, Eigen::Index n) {
  out << "ic_index,crossing_index";
  for (Eigen::Index i = 1; i <= n; ++i) out << ",w" << i;
  for (Eigen::Index i = 1; i <= n; ++i) out << ",W" << i;
  out << ",sigma,Sigma,t\n" << std::setprecision(17);
  for (const auto& r : scan.results) {
    for (std::size_t k = 0; k < r.section.points.size(); ++k) {
      out << r.index << ',' << k;
      const auto& x = r.section.points[k];
      for (Eigen::Index i = 0; i < x.size(); ++i) out << ',' << x(i);
      out << ',' << r.section.times[k] << '\n';
    }
  }
}

void write_classification_csv(std::ostream& out, const TorusScan& scan) {
  out << "ic_index,verdict,rot_w,rot_thermo,gap,energy_drift\n" << std::setprecision(17);
  for (const auto& r : scan.results) {
    out << r.index << ',' << to_string(r.cls.verdict) << ',' << r.cls.rot_w << ',' << r.cls.rot_thermo << ','
        << r.cls.gap << ',' << r.cls.energy_drift << '\n';
  }
}

void write_section_svg(std::ostream& out, const TorusScan& scan, Eigen::Index n) {
  constexpr double width = 640, height = 480, margin = 40;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& r : scan.results) {
    for (const auto& x : r.section.points) {
      lo = std::min(lo, x(n));
      hi = std::max(hi, x(n));
    }
  }
  if (!(hi > lo)) {
    lo = std::isfinite(lo) ? lo - 1.0 : 0.0;
    hi = lo + 2.0;
  }
  static constexpr const char* colors[] = {"#1f77b4", "#d62728", "#7f7f7f", "#ff7f0e"};
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"" << height - 8 << "\" text-anchor=\"middle\">w1 mod 1</text>\n";
  out << "<text x=\"12\" y=\"" << height / 2 << "\" transform=\"rotate(-90 12 " << height / 2
      << ")\" text-anchor=\"middle\">W1</text>\n";
  out << std::setprecision(6);
  for (const auto& r : scan.results) {
    const char* color = colors[static_cast<int>(r.cls.verdict)];
    for (const auto& x : r.section.points) {
      const double px = margin + mod1(x(0)) * (width - 2 * margin);
      const double py = height - margin - (x(n) - lo) / (hi - lo) * (height - 2 * margin);
      out << "<circle cx=\"" << px << "\" cy=\"" << py << "\" r=\"0.6\" fill=\"" << color << "\"/>\n";
    }
  }
  out << "</svg>\n";
}

}  // namespace thermokam
