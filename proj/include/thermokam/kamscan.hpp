#pragma once

#include "thermokam/dynamics.hpp"
#include "thermokam/integrate.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace thermokam {

/// Section {x(coordinate) = level}, crossed in `direction` (+1 upward,
/// -1 downward). The default coordinate (-1) means the last state entry,
/// Sigma in the rescaled chart.
struct SectionSpec {
  Eigen::Index coordinate = -1;
  double level = 0.0;
  int direction = +1;
  /// Crossings are refined until |x(coordinate) - level| <= crossing_tol.
  double crossing_tol = 1e-12;
  long max_crossings = 1000;
  /// Integration time limit; 0 means unlimited (max_steps still applies).
  double t_max = 0.0;
  /// If the flow at the start is tangent to the section to this tolerance the
  /// orbit is treated as lying inside it and sampled every in_section_dt.
  double in_section_tol = 1e-12;
  double in_section_dt = 1.0;

  Eigen::Index resolved_coordinate(Eigen::Index state_size) const {
    return coordinate < 0 ? state_size - 1 : coordinate;
  }
  void validate() const;
};

struct SectionResult {
  std::vector<Eigen::VectorXd> points;
  std::vector<double> times;
  bool in_section = false;
  bool max_steps_exceeded = false;
  bool time_limit = false;
  bool integration_failed = false;
};

/// Crossings of the section along the orbit of `field` from x0.
SectionResult poincare_section(const Field& field, const Eigen::VectorXd& x0, const SectionSpec& spec,
                               const IntegratorConfig& cfg);

struct RotationEstimate {
  double value = 0.0;  // mean increment per sample, in turns
  double gap = 0.0;    // |first-half estimate - second-half estimate|
  long samples = 0;
};

enum class AngleLift {
  lifted,  // samples are already continuous (increments used as given)
  mod1     // increments are reduced to [0, 1)
};

/// exp(-1 / (t (1 - t))) on (0, 1), zero elsewhere.
double birkhoff_weight(double t);
/// Weighted Birkhoff average of f_0..f_{N-1} with weights w(k / N).
double weighted_birkhoff_average(std::span<const double> values);

/// Rotation number from angle samples theta_k (in turns) by the weighted
/// Birkhoff average of their increments. Throws with fewer than 4 samples.
RotationEstimate rotation_number(std::span<const double> theta, AngleLift lift = AngleLift::mod1);

enum class Verdict { quasiperiodic, resonant, irregular, escaped };
std::string to_string(Verdict v);

/// Calibrated classifier settings.
struct ClassifierThresholds {
  double gap = 1e-7;
  double resonance_tol = 1e-9;
  int max_denominator = 12;
  double sigma_lo = 1e-3;
  double sigma_hi = 1e3;
  /// The thermostat angle is sampled at upward crossings of w_1 through
  /// thermo_level + Z (the minima of cos 2 pi w by default, so librating
  /// orbits are sampled too).
  double thermo_level = 0.5;
  /// Both the section count and the thermostat sample count must reach this.
  long min_crossings = 100;

  void validate() const;
};

struct OrbitClassification {
  Verdict verdict = Verdict::irregular;
  double rot_w = 0.0;       // w_1 advance per section return, mod 1
  double rot_thermo = 0.0;  // thermostat-angle advance per w_1 lattice crossing, mod 1
  double gap_w = 0.0;
  double gap_thermo = 0.0;
  double gap = 0.0;  // max of the two
  double energy_drift = 0.0;
  long crossings = 0;
  double t_end = 0.0;
};

/// Rescaled-chart model F_beta used by the scans.
struct ScanModel {
  ThermostatParams params;
  double beta = 0.0;
  Potential V = TorusPotential::zero(1);
  FlatMetric g = FlatMetric::identity(1);

  void validate() const;
};

/// Integrates one orbit of F_beta, records w_1 at section crossings and the
/// lifted thermostat angle atan2(Sigma, sigma - |W|) at w_1 lattice
/// crossings, and classifies the orbit from both rotation numbers.
OrbitClassification classify_orbit(const ScanModel& model, const Eigen::VectorXd& x0, const SectionSpec& spec,
                                   const IntegratorConfig& cfg, const ClassifierThresholds& thr,
                                   SectionResult* section = nullptr);

/// Initial conditions w = 0, Sigma = 0, W = W0 C (C = first axis),
/// sigma = |W| + d, on a W0 x d grid; index = iW * d_points + id.
struct IcGrid {
  double W_lo = 0.8, W_hi = 1.2;
  int W_points = 20;
  double d_lo = 0.01, d_hi = 0.2;
  int d_points = 20;

  void validate() const;
  std::vector<Eigen::VectorXd> initial_states(const FlatMetric& g) const;
};

struct IcResult {
  long index = 0;
  Eigen::VectorXd x0;
  OrbitClassification cls;
  SectionResult section;  // points kept only on request
};

struct TorusScan {
  double beta = 0.0;
  std::vector<IcResult> results;  // ordered by IC index
  double fraction = 0.0;          // share classified quasiperiodic
  long counts[4] = {0, 0, 0, 0};  // indexed by Verdict
};

TorusScan torus_fraction(const ScanModel& model, const IcGrid& grid, const SectionSpec& spec,
                         const IntegratorConfig& cfg, const ClassifierThresholds& thr, int jobs = 1,
                         bool keep_points = false);

/// `ic_index,crossing_index,w...,W...,sigma,Sigma,t`
void write_section_csv(std::ostream& out, const TorusScan& scan, Eigen::Index n);
/// `ic_index,verdict,rot_w,rot_thermo,gap,energy_drift`
void write_classification_csv(std::ostream& out, const TorusScan& scan);
/// Combined scatter of (w_1 mod 1, W_1) over all kept section points.
void write_section_svg(std::ostream& out, const TorusScan& scan, Eigen::Index n);

}  // namespace thermokam
