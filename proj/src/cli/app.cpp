#include "thermokam/cli.hpp"

#include <CLI11.hpp>

#include <ostream>

namespace thermokam::cli {

namespace {

using nlohmann::json;

// Flag values collected by CLI11, applied on top of the config file.
struct Overrides {
  std::optional<std::string> config, out;
  std::optional<int> jobs;
  std::optional<long> seed;
  // simulate
  std::optional<std::string> chart, method;
  std::optional<long> n;
  std::optional<double> T, M, k, beta, t_end, h;
  bool sho = false, with_derivatives = false;
  // normal-form / nondegen
  std::optional<std::string> a, b, I;
  std::optional<long> N, nd_n, rho_points;
  std::optional<double> rho_lo, rho_hi;
  bool audit = false;
  // kam-scan
  std::vector<double> betas;
  std::optional<long> grid, max_crossings;
  bool svg = false, sections = false;
  // verify
  std::optional<std::string> perturb_alpha, json_out;
};

json apply(json base, const std::string& sub, const Overrides& o) {
  base["subcommand"] = sub;
  if (o.out) base["output"]["dir"] = *o.out;
  if (o.jobs) base["jobs"] = *o.jobs;
  if (o.seed) base["seed"] = *o.seed;
  auto model = [&]() -> json& { return base["model"]; };
  if (o.T) model()["T"] = *o.T;
  if (o.M) model()["M"] = *o.M;
  if (o.k) model()["k"] = *o.k;
  if (o.beta) model()["beta"] = *o.beta;
  if (sub == "simulate") {
    if (o.n) model()["n"] = *o.n;
    if (o.chart) base["simulate"]["chart"] = *o.chart;
    if (o.method) base["simulate"]["method"] = *o.method;
    if (o.t_end) base["simulate"]["t_end"] = *o.t_end;
    if (o.sho) base["simulate"]["sho"] = true;
    if (o.with_derivatives) base["simulate"]["with_derivatives"] = true;
  }
  if (o.h) base["integrator"]["h"] = *o.h;
  if (sub == "normal-form") {
    if (o.a) base["normal_form"]["a"] = *o.a;
    if (o.b) base["normal_form"]["b"] = *o.b;
    if (o.N) base["normal_form"]["N"] = *o.N;
  }
  if (sub == "nondegen") {
    if (o.nd_n) base["nondegen"]["n"] = *o.nd_n;
    if (o.a) base["nondegen"]["a"] = *o.a;
    if (o.b) base["nondegen"]["b"] = *o.b;
    if (o.N) base["nondegen"]["N"] = *o.N;
    if (o.I) base["nondegen"]["I"] = *o.I;
    if (o.rho_lo) base["nondegen"]["rho_lo"] = *o.rho_lo;
    if (o.rho_hi) base["nondegen"]["rho_hi"] = *o.rho_hi;
    if (o.rho_points) base["nondegen"]["rho_points"] = *o.rho_points;
    if (o.audit) base["nondegen"]["audit"] = true;
  }
  if (sub == "kam-scan") {
    if (o.n) model()["n"] = *o.n;
    if (!o.betas.empty()) base["scan"]["betas"] = o.betas;
    if (o.grid) {
      base["scan"]["W_points"] = *o.grid;
      base["scan"]["d_points"] = *o.grid;
    }
    if (o.max_crossings) base["scan"]["max_crossings"] = *o.max_crossings;
    if (o.svg) base["scan"]["svg"] = true;
    if (o.sections) base["scan"]["keep_sections"] = true;
  }
  if (sub == "verify") {
    if (o.perturb_alpha) base["verify"]["perturb_alpha"] = *o.perturb_alpha;
    if (o.json_out) base["verify"]["json"] = *o.json_out;
  }
  return base;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Thermostat normal forms, non-degeneracy determinants and invariant-torus scans"};
  app.require_subcommand(1);
  Overrides o;
  app.add_option("--config", o.config, "JSON run configuration");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--jobs", o.jobs, "worker threads for scans")->check(CLI::PositiveNumber);
  app.add_option("--seed", o.seed, "seed recorded in the manifest");

  auto* sim = app.add_subcommand("simulate", "integrate one orbit and write an orbit CSV");
  sim->add_option("--chart", o.chart, "nose | rescaled | nose-hoover");
  sim->add_option("--method", o.method, "midpoint | rk45");
  sim->add_option("--n", o.n, "degrees of freedom");
  sim->add_option("--T", o.T, "temperature");
  sim->add_option("--M", o.M, "thermostat mass");
  sim->add_option("--k", o.k, "Boltzmann constant");
  sim->add_option("--beta", o.beta, "coupling in the rescaled chart");
  sim->add_option("--t-end", o.t_end, "final time");
  sim->add_option("--step", o.h, "step size (midpoint) or initial step (rk45)");
  sim->add_flag("--sho", o.sho, "harmonic potential with unit stiffness");
  sim->add_flag("--with-derivatives", o.with_derivatives, "append the vector field to each row");

  auto* nf = app.add_subcommand("normal-form", "solve the normal form for a mass profile");
  nf->add_option("--a", o.a, "Omega'(1), exact rational");
  nf->add_option("--b", o.b, "Omega''(1), exact rational");
  nf->add_option("--N", o.N, "truncation order");

  auto* nd = app.add_subcommand("nondegen", "scan the non-degeneracy determinants along J = rho C");
  nd->add_option("--n", o.nd_n, "dimension of the action covector");
  nd->add_option("--a", o.a, "Omega'(1), exact rational");
  nd->add_option("--b", o.b, "Omega''(1), exact rational");
  nd->add_option("--N", o.N, "truncation order");
  nd->add_option("--I", o.I, "action I, exact rational");
  nd->add_option("--rho-lo", o.rho_lo);
  nd->add_option("--rho-hi", o.rho_hi);
  nd->add_option("--rho-points", o.rho_points);
  nd->add_flag("--audit", o.audit, "report the common zero of the constant terms over the mass family");
  nd->add_option("--T", o.T);

  auto* ks = app.add_subcommand("kam-scan", "classify orbits on an initial-condition grid");
  ks->add_option("--beta", o.betas, "coupling values (repeatable)");
  ks->add_option("--n", o.n, "degrees of freedom");
  ks->add_option("--M", o.M, "thermostat mass");
  ks->add_option("--grid", o.grid, "points per grid axis");
  ks->add_option("--max-crossings", o.max_crossings, "section crossings per orbit");
  ks->add_flag("--svg", o.svg, "write section scatter plots");
  ks->add_flag("--sections", o.sections, "write section CSVs");

  auto* vf = app.add_subcommand("verify", "replay the reference identities");
  vf->add_option("--perturb-alpha", o.perturb_alpha, "replace alpha (mutation test), exact rational");
  vf->add_option("--json", o.json_out, "write the results as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return ok;
    }
    err << "error: " << e.what() << '\n';
    return config_error;
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    const json base = o.config ? load_config_file(*o.config) : json::object();
    const RunConfig cfg = parse_run_config(apply(base, sub, o));
    if (sub == "simulate") return cmd_simulate(cfg, out);
    if (sub == "normal-form") return cmd_normal_form(cfg, out);
    if (sub == "nondegen") return cmd_nondegen(cfg, out);
    if (sub == "kam-scan") return cmd_kam_scan(cfg, out);
    return cmd_verify(cfg, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const TriangularSolveError& e) {
    err << "solver inconsistency at degree " << e.degree() << ": " << e.what() << '\n';
    return solver_inconsistency;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return check_failure;
  }
}

}  // namespace thermokam::cli
