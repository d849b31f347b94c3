#include "thermokam/cli.hpp"
#include "thermokam/nondegen.hpp"

#include <boost/version.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace thermokam::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Output files of one run: `<dir>/<subcommand>-<hash>.<suffix>`.
class RunOutputs {
 public:
  RunOutputs(const RunConfig& cfg, std::string subcommand)
      : cfg_(cfg), subcommand_(std::move(subcommand)), hash_(hash_hex(config_hash(cfg.source))),
        start_(std::chrono::steady_clock::now()) {
    fs::create_directories(cfg.output_dir);
  }

  std::string path(const std::string& suffix) {
    const std::string p = (fs::path(cfg_.output_dir) / (subcommand_ + "-" + hash_ + "." + suffix)).string();
    files_.push_back(p);
    return p;
  }

  std::ofstream open(const std::string& suffix) {
    std::ofstream f(path(suffix));
    if (!f) throw std::runtime_error("cannot write " + files_.back());
    return f;
  }

  /// Writes the manifest and returns its path.
  std::string finish(const json& summary) {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json manifest = {
        {"subcommand", subcommand_},
        {"config_hash", hash_},
        {"config", cfg_.source},
        {"seed", cfg_.seed},
        {"outputs", files_},
        {"summary", summary},
        {"versions",
         {{"thermokam", "0.1.0"},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", BOOST_LIB_VERSION},
          {"compiler", __VERSION__}}},
        {"wall_time_s", wall},
    };
    const std::string p = (fs::path(cfg_.output_dir) / (subcommand_ + "-" + hash_ + ".manifest.json")).string();
    std::ofstream(p) << manifest.dump(2) << '\n';
    return p;
  }

  const std::string& hash() const { return hash_; }

 private:
  const RunConfig& cfg_;
  std::string subcommand_;
  std::string hash_;
  std::vector<std::string> files_;
  std::chrono::steady_clock::time_point start_;
};

std::vector<std::string> indexed(const std::string& stem, Eigen::Index n) {
  std::vector<std::string> out;
  for (Eigen::Index i = 1; i <= n; ++i) out.push_back(stem + std::to_string(i));
  return out;
}

struct SimulationSetup {
  Field field;
  EnergyFn energy;
  std::vector<std::string> names;
  Eigen::VectorXd x0;
  Eigen::Index sigma_index = -1;
};

SimulationSetup simulation_setup(const RunConfig& cfg) {
  const ModelConfig& m = cfg.model;
  const Eigen::Index n = m.n;
  const FlatMetric g = m.flat_metric();
  const Potential V = cfg.simulate.sho ? Potential(HarmonicPotential(n, 1.0)) : m.potential_or_throw();
  const ThermostatParams pr = m.params();
  const Eigen::VectorXd e1 = Eigen::VectorXd::Unit(n, 0);
  SimulationSetup s;
  const std::string& chart = cfg.simulate.chart;
  if (chart == "rescaled") {
    const double beta = m.effective_beta();
    s.field = [=](const Eigen::VectorXd& x) { return rescaled_field_flat(x, beta, pr, V, g); };
    s.energy = [=](const Eigen::VectorXd& x) { return rescaled_energy_flat(x, beta, pr, V, g); };
    s.names = indexed("w", n);
    for (auto& f : indexed("W", n)) s.names.push_back(f);
    s.names.insert(s.names.end(), {"sigma", "Sigma"});
    s.x0 = Eigen::VectorXd::Zero(2 * n + 2);
    s.x0.segment(n, n) = UnitCovector(g, e1).components();
    s.x0(2 * n) = 1.1;
    s.sigma_index = 2 * n;
  } else if (chart == "nose") {
    s.field = [=](const Eigen::VectorXd& x) {
      return nose_vector_field(ExtendedState::unflatten(x, n), pr, V, g).flatten();
    };
    s.energy = [=](const Eigen::VectorXd& x) { return nose_energy(ExtendedState::unflatten(x, n), pr, V, g); };
    s.names = indexed("q", n);
    for (auto& f : indexed("p", n)) s.names.push_back(f);
    s.names.insert(s.names.end(), {"s", "p_s"});
    s.x0 = Eigen::VectorXd::Zero(2 * n + 2);
    s.x0.segment(n, n) = std::sqrt(pr.kT_eff) * UnitCovector(g, e1).components();
    s.x0(2 * n) = 1.1;
    s.sigma_index = 2 * n;
  } else {
    s.field = [=](const Eigen::VectorXd& x) { return nose_hoover_augmented_field(x, pr, V, g); };
    s.energy = [=](const Eigen::VectorXd& x) { return nose_hoover_energy(x, pr, V, g); };
    s.names = indexed("q", n);
    for (auto& f : indexed("rho", n)) s.names.push_back(f);
    s.names.insert(s.names.end(), {"xi", "eta"});
    s.x0 = Eigen::VectorXd::Zero(2 * n + 2);
    s.x0(0) = 1.0;
  }
  if (cfg.simulate.initial) {
    const auto& v = *cfg.simulate.initial;
    if (static_cast<Eigen::Index>(v.size()) != s.x0.size())
      throw ConfigError("simulate.initial", "expected " + std::to_string(s.x0.size()) + " entries for chart " + chart);
    s.x0 = Eigen::Map<const Eigen::VectorXd>(v.data(), s.x0.size());
  }
  return s;
}

}  // namespace

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  const SimulationSetup s = simulation_setup(cfg);
  IntegratorConfig ic = cfg.integrator;
  ic.sigma_index = s.sigma_index;
  const Orbit orbit = cfg.simulate.method == "midpoint"
                          ? integrate_midpoint(s.field, s.x0, cfg.simulate.t_end, ic, s.energy)
                          : rk_adaptive_integrate(s.field, s.x0, {0.0, cfg.simulate.t_end}, ic, s.energy);

  RunOutputs outputs(cfg, "simulate");
  {
    auto f = outputs.open("orbit.csv");
    const bool derivs = cfg.simulate.with_derivatives || cfg.simulate.chart == "nose-hoover";
    f << "t";
    for (const auto& name : s.names) f << ',' << name;
    f << ",E";
    if (derivs)
      for (const auto& name : s.names) f << ",d" << name;
    f << '\n' << std::setprecision(17);
    for (std::size_t i = 0; i < orbit.states.size(); ++i) {
      const Eigen::VectorXd& x = orbit.states[i];
      f << orbit.times[i];
      for (Eigen::Index k = 0; k < x.size(); ++k) f << ',' << x(k);
      f << ',' << orbit.energy[i];
      if (derivs) {
        const Eigen::VectorXd d = s.field(x);
        for (Eigen::Index k = 0; k < d.size(); ++k) f << ',' << d(k);
      }
      f << '\n';
    }
  }
  const json summary = {{"chart", cfg.simulate.chart},
                        {"samples", orbit.states.size()},
                        {"steps", orbit.steps},
                        {"energy_drift", energy_drift(orbit, s.energy)},
                        {"truncated", orbit.truncated()},
                        {"sigma_floor_hit", orbit.sigma_floor_hit}};
  const std::string manifest = outputs.finish(summary);
  out << json{{"summary", summary}, {"manifest", manifest}}.dump(2) << '\n';
  return orbit.step_failed ? check_failure : ok;
}

int cmd_normal_form(const RunConfig& cfg, std::ostream& out) {
  const NormalFormConfig& c = cfg.normal_form;
  std::optional<NormalFormCoeffs> solved;
  try {
    solved = solve_nf(build_chart_expansion(MassSeries{c.a, c.b, cfg.model.mass_higher}, c.N));
  } catch (const TriangularSolveError& e) {
    json report = {{"error", e.what()}, {"degree", e.degree()}, {"monomials", e.residual_monomials()}};
    out << report.dump(2) << '\n';
    return solver_inconsistency;
  }
  const NormalFormCoeffs& nf = *solved;
  RunOutputs outputs(cfg, "normal-form");
  const json report = normal_form_report(nf);
  outputs.open("json") << report.dump(2) << '\n';
  outputs.finish({{"residual_ok", nf.residual_ok}});
  out << report.dump(2) << '\n';
  return nf.residual_ok ? ok : check_failure;
}

int cmd_nondegen(const RunConfig& cfg, std::ostream& out) {
  const NondegenConfig& c = cfg.nondegen;
  std::optional<NormalFormCoeffs> solved;
  try {
    solved = solve_nf(build_chart_expansion(MassSeries{c.a, c.b, {}}, c.N));
  } catch (const TriangularSolveError& e) {
    out << json{{"error", e.what()}, {"degree", e.degree()}}.dump(2) << '\n';
    return solver_inconsistency;
  }
  const ActionModel model(*solved);
  const Eigen::VectorXd C = Eigen::VectorXd::Unit(c.n, 0);
  const ScanReport report =
      degeneracy_scan(model, C, linear_grid(c.rho_lo, c.rho_hi, c.rho_points), c.I.convert_to<double>());

  const VectorQ Cq = VectorQ::Unit(c.n, 0);
  const auto exact = determinants<Rational>(model, Cq, c.I, Rational(0));
  json summary = {{"n", c.n},
                  {"a", c.a.str()},
                  {"b", c.b.str()},
                  {"I", c.I.str()},
                  {"at_rho_0",
                   {{"det_kolmogorov_full", exact.kolmogorov_full.str()},
                    {"det_A_V", exact.A_V.str()},
                    {"det_A_Vperp", exact.A_Vperp.str()},
                    {"det_isoenergetic", exact.isoenergetic_full.str()},
                    {"det_B_W", exact.B_W.str()},
                    {"det_B_Wperp", exact.B_Wperp.str()}}},
                  {"order_A_V", report.order_A_V},
                  {"order_B_W", report.order_B_W},
                  {"exact_order_A_V", report.exact_order_A_V},
                  {"exact_order_B_W", report.exact_order_B_W}};
  json crossings = json::array();
  for (const auto& z : report.crossings) crossings.push_back({{"determinant", z.determinant}, {"rho", z.rho}});
  summary["zero_crossings"] = crossings;

  if (c.audit) {
    const LocusAudit audit = degeneracy_locus_audit();
    json a = {{"constraint", audit.constraint.to_string("a")},
              {"common_zeros", audit.common_zeros},
              {"solver_confirms", audit.solver_confirms}};
    if (audit.common_zeros == 1) {
      a["a"] = audit.a.str();
      a["alpha"] = audit.alpha.str();
      a["b"] = audit.b.str();
      a["beta_scalar"] = (1 - audit.a / 2).str();
      if (audit.solved) {
        a["gamma_par"] = audit.solved->gamma_par ? audit.solved->gamma_par->str() : "";
        a["gamma_perp"] = audit.solved->gamma_perp ? audit.solved->gamma_perp->str() : "";
      }
      a["published_b"] = "-8";
      a["published_b_agrees"] = audit.b == Rational(-8);
    }
    summary["locus_audit"] = a;
  }

  RunOutputs outputs(cfg, "nondegen");
  {
    auto f = outputs.open("scan.csv");
    write_scan_csv(f, report);
  }
  const std::string manifest = outputs.finish(summary);
  out << json{{"summary", summary}, {"manifest", manifest}}.dump(2) << '\n';
  return ok;
}

int cmd_kam_scan(const RunConfig& cfg, std::ostream& out) {
  const ModelConfig& m = cfg.model;
  ScanModel model;
  model.params = m.params();
  model.V = m.potential_or_throw();
  model.g = m.flat_metric();
  RunOutputs outputs(cfg, "kam-scan");
  json rows = json::array();
  std::vector<std::pair<double, double>> ladder;
  for (std::size_t k = 0; k < cfg.scan.betas.size(); ++k) {
    model.beta = cfg.scan.betas[k];
    const bool keep = cfg.scan.keep_sections || cfg.scan.svg;
    const TorusScan scan = torus_fraction(model, cfg.scan.grid, cfg.scan.section, cfg.integrator,
                                          cfg.scan.thresholds, cfg.jobs, keep);
    const std::string tag = "beta" + std::to_string(k);
    {
      auto f = outputs.open(tag + ".classification.csv");
      write_classification_csv(f, scan);
    }
    if (cfg.scan.keep_sections) {
      auto f = outputs.open(tag + ".section.csv");
      write_section_csv(f, scan, m.n);
    }
    if (cfg.scan.svg) {
      auto f = outputs.open(tag + ".section.svg");
      write_section_svg(f, scan, m.n);
    }
    rows.push_back({{"beta", model.beta},
                    {"fraction", scan.fraction},
                    {"quasiperiodic", scan.counts[0]},
                    {"resonant", scan.counts[1]},
                    {"irregular", scan.counts[2]},
                    {"escaped", scan.counts[3]}});
    ladder.emplace_back(model.beta, scan.fraction);
  }
  std::sort(ladder.begin(), ladder.end());
  bool monotone = true;
  for (std::size_t k = 1; k < ladder.size(); ++k) monotone = monotone && ladder[k].second <= ladder[k - 1].second;
  const json summary = {{"scans", rows},
                        {"fraction_nonincreasing_in_beta", monotone},
                        {"note", "classifier thresholds are calibration settings, not model predictions"}};
  const std::string manifest = outputs.finish(summary);
  out << json{{"summary", summary}, {"manifest", manifest}}.dump(2) << '\n';
  return ok;
}

}  // namespace thermokam::cli
