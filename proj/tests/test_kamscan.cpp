#include "thermokam/kamscan.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace thermokam;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.begin(), static_cast<Eigen::Index>(v.size()));
}

ScanModel cosine_model(double beta) {
  ScanModel m;
  m.beta = beta;
  m.V = TorusPotential(1, {{Eigen::VectorXi::Constant(1, 1), 1.0, 0.0}});
  return m;
}

Field rescaled_field(const ScanModel& m) {
  return [&m](const Eigen::VectorXd& x) { return rescaled_field_flat(x, m.beta, m.params, m.V, m.g); };
}

std::vector<Verdict> verdicts(const TorusScan& s) {
  std::vector<Verdict> v;
  for (const auto& r : s.results) v.push_back(r.cls.verdict);
  return v;
}

}  // namespace

TEST_CASE("bump weight") {
  CHECK(birkhoff_weight(0.0) == 0.0);
  CHECK(birkhoff_weight(1.0) == 0.0);
  CHECK(birkhoff_weight(-0.5) == 0.0);
  CHECK(birkhoff_weight(0.5) == doctest::Approx(std::exp(-4.0)));
  const std::vector<double> constant(50, 2.5);
  CHECK(weighted_birkhoff_average(constant) == doctest::Approx(2.5).epsilon(1e-14));
}

TEST_CASE("rotation number of a rigid rotation") {
  std::vector<double> theta;
  for (int k = 0; k < 2000; ++k) theta.push_back(std::fmod(0.381966 * k, 1.0));
  const RotationEstimate r = rotation_number(theta);
  CHECK(std::abs(r.value - 0.381966) < 1e-10);
  CHECK(r.gap < 1e-10);
  CHECK(r.samples == 2000);

  for (auto& t : theta) t = 0.0;
  for (int k = 0; k < 2000; ++k) theta[k] = 0.381966 * k;
  CHECK(std::abs(rotation_number(theta, AngleLift::lifted).value - 0.381966) < 1e-10);
}

TEST_CASE("rotation number of a noisy rotation") {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> noise(-1e-2, 1e-2);
  // Noise enters every step, so the lifted angle is a random walk around the rotation.
  std::vector<double> theta{0.0};
  for (int k = 1; k < 2000; ++k) theta.push_back(theta.back() + 0.381966 + noise(rng));
  for (auto& t : theta) t -= std::floor(t);
  const RotationEstimate r = rotation_number(theta);
  CHECK(std::abs(r.value - 0.381966) < 1e-3);
  CHECK(r.gap > ClassifierThresholds{}.gap);
}

TEST_CASE("rotation number of a period-two alternation") {
  std::vector<double> theta;
  for (int k = 0; k < 100; ++k) theta.push_back(k % 2 == 0 ? 0.0 : 0.5);
  CHECK(rotation_number(theta).value == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("rotation number needs samples") {
  const std::vector<double> few{0.1, 0.2, 0.3};
  CHECK_THROWS(rotation_number(few));
}

TEST_CASE("section crossings of a harmonic oscillator are equally spaced") {
  const Field harmonic = [](const Eigen::VectorXd& x) { return vec({x(1), -x(0)}); };
  SectionSpec spec;
  spec.max_crossings = 20;
  const SectionResult s = poincare_section(harmonic, vec({1.0, 0.3}), spec, {});
  REQUIRE(s.points.size() == 20);
  for (std::size_t k = 1; k < s.times.size(); ++k)
    CHECK(std::abs(s.times[k] - s.times[k - 1] - 2 * std::numbers::pi) < 1e-9);
  for (const auto& p : s.points) {
    CHECK(std::abs(p(1)) <= 1e-12);
    CHECK(p(0) < 0.0);  // upward crossings of y = 0 happen at x < 0
  }
}

TEST_CASE("section limits are flagged") {
  const Field harmonic = [](const Eigen::VectorXd& x) { return vec({x(1), -x(0)}); };
  SectionSpec spec;
  spec.max_crossings = 100;
  spec.t_max = 20.0;
  const SectionResult s = poincare_section(harmonic, vec({1.0, 0.0}), spec, {});
  CHECK(s.time_limit);
  CHECK(s.points.size() == 3);

  IntegratorConfig cfg;
  cfg.max_steps = 5;
  spec.t_max = 0.0;
  CHECK(poincare_section(harmonic, vec({1.0, 0.0}), spec, cfg).max_steps_exceeded);
}

TEST_CASE("an equilibrium torus lies inside the section") {
  const ScanModel m = cosine_model(0.0);
  SectionSpec spec;
  spec.max_crossings = 50;
  const Eigen::VectorXd x0 = vec({0.1, 1.2, 1.2, 0.0});
  const SectionResult s = poincare_section(rescaled_field(m), x0, spec, {});
  CHECK(s.in_section);
  REQUIRE(s.points.size() == 50);
  for (const auto& p : s.points) CHECK((p.tail(3) - x0.tail(3)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("beta = 0 section points fill a closed curve and keep both actions") {
  const ScanModel m = cosine_model(0.0);
  SectionSpec spec;
  spec.max_crossings = 500;
  IntegratorConfig tight;
  tight.rk_rel_tol = 1e-12;
  tight.rk_abs_tol = 1e-13;
  const SectionResult s = poincare_section(rescaled_field(m), vec({0.0, 1.0, 1.08, 0.0}), spec, tight);
  REQUIRE(s.points.size() == 500);
  std::vector<double> w;
  double dW = 0.0, dsigma = 0.0;
  for (const auto& p : s.points) {
    w.push_back(p(0) - std::floor(p(0)));
    dW = std::max(dW, std::abs(p(1) - 1.0));
    dsigma = std::max(dsigma, std::abs(p(2) - s.points.front()(2)));
  }
  CHECK(dW < 1e-8);
  CHECK(dsigma < 1e-8);
  std::sort(w.begin(), w.end());
  double max_gap = 1.0 - w.back() + w.front();
  for (std::size_t k = 1; k < w.size(); ++k) max_gap = std::max(max_gap, w[k] - w[k - 1]);
  CHECK(max_gap < 10.0 / 500);
}

TEST_CASE("orbit classification") {
  const ScanModel free = cosine_model(0.0);
  const SectionSpec spec;
  const ClassifierThresholds thr;
  SectionResult s;
  const OrbitClassification q = classify_orbit(free, vec({0.0, 1.0, 1.1, 0.0}), spec, {}, thr, &s);
  CHECK(q.verdict == Verdict::quasiperiodic);
  CHECK(q.gap < thr.gap);
  CHECK(q.crossings == 1000);
  CHECK(s.points.size() == 1000);
  CHECK(q.energy_drift < 1e-8);

  const OrbitClassification e = classify_orbit(free, vec({0.0, 1e-4, 1.0, 0.0}), spec, {}, thr);
  CHECK(e.verdict == Verdict::escaped);

  const ScanModel weak = cosine_model(1e-3);
  const OrbitClassification w = classify_orbit(weak, vec({0.0, 1.0, 1.1, 0.0}), spec, {}, thr);
  CHECK(w.energy_drift < 1e-8);

  CHECK(to_string(Verdict::quasiperiodic) == "quasiperiodic");
  CHECK(to_string(Verdict::resonant) == "resonant");
  CHECK(to_string(Verdict::irregular) == "irregular");
  CHECK(to_string(Verdict::escaped) == "escaped");
}

TEST_CASE("too few samples is irregular") {
  SectionSpec spec;
  spec.max_crossings = 50;
  const OrbitClassification c = classify_orbit(cosine_model(0.0), vec({0.0, 1.0, 1.1, 0.0}), spec, {}, {});
  CHECK(c.verdict == Verdict::irregular);
}

TEST_CASE("validation") {
  SectionSpec spec;
  spec.crossing_tol = 0;
  CHECK_THROWS(spec.validate());
  spec = {};
  spec.direction = 0;
  CHECK_THROWS(spec.validate());
  ClassifierThresholds thr;
  thr.min_crossings = 2;
  CHECK_THROWS(thr.validate());
  IcGrid grid;
  grid.W_lo = 0;
  CHECK_THROWS(grid.validate());
  ScanModel m = cosine_model(-1.0);
  CHECK_THROWS(m.validate());
}

TEST_CASE("initial-condition grid") {
  IcGrid grid;
  grid.W_points = 3;
  grid.d_points = 2;
  const auto xs = grid.initial_states(FlatMetric::identity(2));
  REQUIRE(xs.size() == 6);
  // index = iW * d_points + id
  CHECK(xs[3](2) == doctest::Approx(1.0));
  CHECK(xs[3](4) == doctest::Approx(1.0 + 0.2));
  CHECK(xs[0](4) == doctest::Approx(0.8 + 0.01));
  CHECK(xs[0](3) == 0.0);
  CHECK(xs[0](5) == 0.0);
}

TEST_CASE("scan output is independent of the worker count") {
  const ScanModel m = cosine_model(1e-3);
  IcGrid grid;
  grid.W_points = grid.d_points = 3;
  SectionSpec spec;
  spec.max_crossings = 200;
  const TorusScan one = torus_fraction(m, grid, spec, {}, {}, 1, true);
  const TorusScan two = torus_fraction(m, grid, spec, {}, {}, 3, true);
  REQUIRE(one.results.size() == 9);
  std::ostringstream a, b;
  write_classification_csv(a, one);
  write_classification_csv(b, two);
  CHECK(a.str() == b.str());
  for (std::size_t i = 0; i < one.results.size(); ++i) CHECK(one.results[i].index == static_cast<long>(i));

  std::istringstream lines(a.str());
  std::string header;
  std::getline(lines, header);
  CHECK(header == "ic_index,verdict,rot_w,rot_thermo,gap,energy_drift");

  std::ostringstream sec, svg;
  write_section_csv(sec, one, 1);
  CHECK(sec.str().rfind("ic_index,crossing_index,w1,W1,sigma,Sigma,t\n", 0) == 0);
  write_section_svg(svg, one, 1);
  CHECK(svg.str().find("<svg") != std::string::npos);
  CHECK(svg.str().find("<circle") != std::string::npos);
}

TEST_CASE("beta = 0 scan classifies every orbit as quasiperiodic") {
  IcGrid grid;
  grid.W_points = grid.d_points = 4;
  const TorusScan s = torus_fraction(cosine_model(0.0), grid, {}, {}, {});
  CHECK(s.fraction == 1.0);
  CHECK(s.counts[0] == 16);
}

TEST_CASE("classification is stable when the orbit length doubles") {
  const ScanModel m = cosine_model(1e-3);
  IcGrid grid;
  grid.W_points = grid.d_points = 10;
  SectionSpec shorter;
  shorter.max_crossings = 500;
  SectionSpec longer;
  longer.max_crossings = 1000;
  const auto a = verdicts(torus_fraction(m, grid, shorter, {}, {}));
  const TorusScan fine = torus_fraction(m, grid, longer, {}, {});
  const auto b = verdicts(fine);
  int changed = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    changed += (a[i] == Verdict::quasiperiodic) != (b[i] == Verdict::quasiperiodic);
  CHECK(changed < 0.02 * static_cast<double>(a.size()));

  SUBCASE("torus fraction is stable under grid refinement") {
    IcGrid coarse = grid;
    coarse.W_points = coarse.d_points = 5;
    const TorusScan c = torus_fraction(m, coarse, longer, {}, {});
    CHECK(std::abs(c.fraction - fine.fraction) < 0.05);
  }
}
