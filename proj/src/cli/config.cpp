#include "thermokam/cli.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace thermokam::cli {

namespace {

using nlohmann::json;

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Field reader that tracks the JSON path for diagnostics and rejects keys
// outside the allowed set.
class Block {
 public:
  Block(const json& j, std::string path, std::set<std::string> allowed) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    for (const auto& [key, value] : j_.items()) {
      if (!allowed.count(key)) throw ConfigError(join(path_, key), "unknown key");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  const json& raw(const std::string& key) const { return j_.at(key); }
  std::string path(const std::string& key) const { return join(path_, key); }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(path(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(path(key), "must be finite");
    return x;
  }
  double positive(const std::string& key, double fallback) const {
    const double x = number(key, fallback);
    if (!(x > 0.0)) throw ConfigError(path(key), "must be positive");
    return x;
  }
  long integer(const std::string& key, long fallback, long lo, long hi) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(path(key), "expected an integer");
    const long x = v.get<long>();
    if (x < lo || x > hi)
      throw ConfigError(path(key), "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return x;
  }
  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_boolean()) throw ConfigError(path(key), "expected true or false");
    return j_.at(key).get<bool>();
  }
  std::string string(const std::string& key, const std::string& fallback, const std::set<std::string>& choices = {}) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_string()) throw ConfigError(path(key), "expected a string");
    std::string s = j_.at(key).get<std::string>();
    if (!choices.empty() && !choices.count(s)) {
      std::string list;
      for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c;
      throw ConfigError(path(key), "must be one of " + list);
    }
    return s;
  }
  Rational rational(const std::string& key, const Rational& fallback) const {
    if (!has(key)) return fallback;
    return rational_value(j_.at(key), path(key));
  }
  Block child(const std::string& key, std::set<std::string> allowed) const {
    return Block(j_.contains(key) ? j_.at(key) : empty_object(), path(key), std::move(allowed));
  }

  // Exact values travel as "p/q" strings; integers are accepted as is.
  static Rational rational_value(const json& v, const std::string& where) {
    if (v.is_number_integer()) return Rational(v.get<long>());
    if (!v.is_string()) throw ConfigError(where, "expected an exact rational string such as \"-2/3\"");
    try {
      return parse_rational(v.get<std::string>());
    } catch (const std::exception& e) {
      throw ConfigError(where, e.what());
    }
  }

 private:
  static const json& empty_object() {
    static const json e = json::object();
    return e;
  }
  const json& j_;
  std::string path_;
};

std::vector<double> number_list(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ConfigError(where + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

ModelConfig parse_model(const Block& root) {
  const Block m = root.child("model", {"n", "metric", "potential", "M", "T", "k", "beta", "mass"});
  ModelConfig out;
  out.n = m.integer("n", 1, 1, 3);
  if (m.has("metric")) {
    const json& g = m.raw("metric");
    if (!g.is_array() || g.size() != static_cast<std::size_t>(out.n))
      throw ConfigError(m.path("metric"), "expected an n x n array");
    out.metric.resize(out.n, out.n);
    for (Eigen::Index i = 0; i < out.n; ++i) {
      const auto row = number_list(g[i], m.path("metric") + "[" + std::to_string(i) + "]");
      if (row.size() != static_cast<std::size_t>(out.n))
        throw ConfigError(m.path("metric") + "[" + std::to_string(i) + "]", "row has wrong length");
      for (Eigen::Index k = 0; k < out.n; ++k) out.metric(i, k) = row[static_cast<std::size_t>(k)];
    }
    try {
      (void)FlatMetric(out.metric);
    } catch (const std::exception& e) {
      throw ConfigError(m.path("metric"), e.what());
    }
  }
  if (m.has("potential")) {
    try {
      const Potential V = potential_from_json(m.raw("potential"));
      if (potential_dim(V) != out.n) throw std::invalid_argument("dimension differs from model.n");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(m.path("potential"), e.what());
    }
    out.potential = m.raw("potential");
  }
  out.M = m.positive("M", 1.0);
  out.T = m.positive("T", 1.0);
  out.k = m.positive("k", 1.0);
  if (m.has("beta")) {
    out.beta = m.number("beta", 0.0);
    if (*out.beta < 0.0) throw ConfigError(m.path("beta"), "must be non-negative");
  }
  const Block mass = m.child("mass", {"a", "b", "higher"});
  out.mass_a = mass.rational("a", 0);
  out.mass_b = mass.rational("b", 0);
  if (mass.has("higher")) {
    const json& h = mass.raw("higher");
    if (!h.is_array()) throw ConfigError(mass.path("higher"), "expected an array");
    for (std::size_t i = 0; i < h.size(); ++i)
      out.mass_higher.push_back(Block::rational_value(h[i], mass.path("higher") + "[" + std::to_string(i) + "]"));
  }
  try {
    (void)out.params();
  } catch (const std::exception& e) {
    throw ConfigError(m.path("mass"), e.what());
  }
  return out;
}

IntegratorConfig parse_integrator(const Block& root) {
  const Block b = root.child("integrator", {"h", "newton_tol", "newton_max_iter", "rk_rel_tol", "rk_abs_tol",
                                            "max_steps", "sample_every", "sigma_min"});
  IntegratorConfig c;
  c.h = b.positive("h", c.h);
  c.newton_tol = b.positive("newton_tol", c.newton_tol);
  c.newton_max_iter = static_cast<int>(b.integer("newton_max_iter", c.newton_max_iter, 1, 1000));
  c.rk_rel_tol = b.positive("rk_rel_tol", c.rk_rel_tol);
  c.rk_abs_tol = b.positive("rk_abs_tol", c.rk_abs_tol);
  c.max_steps = b.integer("max_steps", c.max_steps, 1, 1'000'000'000'000L);
  c.sample_every = b.integer("sample_every", c.sample_every, 1, 1'000'000'000L);
  c.sigma_min = b.positive("sigma_min", c.sigma_min);
  return c;
}

SimulateConfig parse_simulate(const Block& root) {
  const Block b = root.child("simulate", {"chart", "sho", "with_derivatives", "initial", "method", "t_end"});
  SimulateConfig c;
  c.chart = b.string("chart", c.chart, {"nose", "rescaled", "nose-hoover"});
  c.sho = b.boolean("sho", false);
  c.with_derivatives = b.boolean("with_derivatives", false);
  c.method = b.string("method", c.method, {"midpoint", "rk45"});
  c.t_end = b.positive("t_end", c.t_end);
  if (b.has("initial")) c.initial = number_list(b.raw("initial"), b.path("initial"));
  return c;
}

NormalFormConfig parse_normal_form(const Block& root) {
  const Block b = root.child("normal_form", {"a", "b", "N"});
  NormalFormConfig c;
  c.a = b.rational("a", 0);
  c.b = b.rational("b", 0);
  c.N = static_cast<int>(b.integer("N", 4, 3, 12));
  return c;
}

NondegenConfig parse_nondegen(const Block& root) {
  const Block b = root.child("nondegen", {"n", "a", "b", "N", "I", "rho_lo", "rho_hi", "rho_points", "audit"});
  NondegenConfig c;
  c.n = b.integer("n", 2, 1, 6);
  c.a = b.rational("a", 0);
  c.b = b.rational("b", 0);
  c.N = static_cast<int>(b.integer("N", 4, 4, 8));
  c.I = b.rational("I", 0);
  c.rho_lo = b.number("rho_lo", c.rho_lo);
  c.rho_hi = b.number("rho_hi", c.rho_hi);
  if (!(c.rho_hi > c.rho_lo)) throw ConfigError(b.path("rho_hi"), "must exceed rho_lo");
  c.rho_points = static_cast<int>(b.integer("rho_points", c.rho_points, 2, 1'000'000));
  c.audit = b.boolean("audit", false);
  return c;
}

ScanConfig parse_scan(const Block& root) {
  const Block b = root.child("scan", {"betas", "W_lo", "W_hi", "W_points", "d_lo", "d_hi", "d_points",
                                      "max_crossings", "crossing_tol", "t_max", "gap", "resonance_tol",
                                      "max_denominator", "min_crossings", "sigma_lo", "sigma_hi", "thermo_level",
                                      "keep_sections", "svg"});
  ScanConfig c;
  if (b.has("betas")) {
    c.betas = number_list(b.raw("betas"), b.path("betas"));
    if (c.betas.empty()) throw ConfigError(b.path("betas"), "must not be empty");
    for (double beta : c.betas)
      if (!(beta >= 0.0)) throw ConfigError(b.path("betas"), "entries must be non-negative");
  }
  c.grid.W_lo = b.positive("W_lo", c.grid.W_lo);
  c.grid.W_hi = b.positive("W_hi", c.grid.W_hi);
  c.grid.W_points = static_cast<int>(b.integer("W_points", c.grid.W_points, 1, 10000));
  c.grid.d_lo = b.positive("d_lo", c.grid.d_lo);
  c.grid.d_hi = b.positive("d_hi", c.grid.d_hi);
  c.grid.d_points = static_cast<int>(b.integer("d_points", c.grid.d_points, 1, 10000));
  c.section.max_crossings = b.integer("max_crossings", c.section.max_crossings, 10, 100'000'000L);
  c.section.crossing_tol = b.positive("crossing_tol", c.section.crossing_tol);
  c.section.t_max = b.number("t_max", c.section.t_max);
  c.thresholds.gap = b.positive("gap", c.thresholds.gap);
  c.thresholds.resonance_tol = b.positive("resonance_tol", c.thresholds.resonance_tol);
  c.thresholds.max_denominator = static_cast<int>(b.integer("max_denominator", c.thresholds.max_denominator, 1, 1000));
  c.thresholds.min_crossings = b.integer("min_crossings", c.thresholds.min_crossings, 4, 100'000'000L);
  c.thresholds.sigma_lo = b.positive("sigma_lo", c.thresholds.sigma_lo);
  c.thresholds.sigma_hi = b.positive("sigma_hi", c.thresholds.sigma_hi);
  c.thresholds.thermo_level = b.number("thermo_level", c.thresholds.thermo_level);
  c.keep_sections = b.boolean("keep_sections", false);
  c.svg = b.boolean("svg", false);
  try {
    c.grid.validate();
    c.section.validate();
    c.thresholds.validate();
  } catch (const std::exception& e) {
    throw ConfigError("scan", e.what());
  }
  return c;
}

VerifyConfig parse_verify(const Block& root) {
  const Block b = root.child("verify", {"perturb_alpha", "json"});
  VerifyConfig c;
  if (b.has("perturb_alpha")) c.perturb_alpha = b.rational("perturb_alpha", 0);
  if (b.has("json")) c.json_path = b.string("json", "");
  return c;
}

}  // namespace

FlatMetric ModelConfig::flat_metric() const {
  return metric.size() == 0 ? FlatMetric::identity(n) : FlatMetric(metric);
}

Potential ModelConfig::potential_or_throw() const {
  if (!potential) throw ConfigError("model.potential", "missing potential block");
  return potential_from_json(*potential);
}

ThermostatParams ModelConfig::params() const {
  MassProfile mass;
  if (mass_a != 0 || mass_b != 0 || !mass_higher.empty()) {
    std::vector<double> higher;
    for (const auto& c : mass_higher) higher.push_back(c.convert_to<double>());
    mass = MassProfile::polynomial(mass_a.convert_to<double>(), mass_b.convert_to<double>(), higher);
  }
  ThermostatParams pr = ThermostatParams::from_physical(n, M, k, T, mass);
  pr.validate();
  return pr;
}

double ModelConfig::effective_beta() const { return beta ? *beta : params().beta(); }

MassSeries ModelConfig::mass_series() const { return MassSeries{mass_a, mass_b, mass_higher}; }

RunConfig parse_run_config(const nlohmann::json& j) {
  const Block root(j, "", {"subcommand", "model", "integrator", "simulate", "normal_form", "nondegen", "scan",
                           "verify", "output", "seed", "jobs"});
  RunConfig cfg;
  cfg.subcommand = root.string("subcommand", "", {"simulate", "normal-form", "nondegen", "kam-scan", "verify"});
  cfg.model = parse_model(root);
  cfg.integrator = parse_integrator(root);
  cfg.simulate = parse_simulate(root);
  cfg.normal_form = parse_normal_form(root);
  cfg.nondegen = parse_nondegen(root);
  cfg.scan = parse_scan(root);
  cfg.verify = parse_verify(root);
  const Block out = root.child("output", {"dir"});
  cfg.output_dir = out.string("dir", cfg.output_dir);
  cfg.seed = static_cast<std::uint64_t>(root.integer("seed", 0, 0, std::numeric_limits<long>::max()));
  cfg.jobs = static_cast<int>(root.integer("jobs", 1, 1, 1024));
  cfg.source = j;
  return cfg;
}

nlohmann::json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    // Translate the byte offset into line and column.
    std::ifstream again(path);
    std::string text((std::istreambuf_iterator<char>(again)), std::istreambuf_iterator<char>());
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(path + ":" + std::to_string(line) + ":" + std::to_string(col), "JSON syntax error");
  }
}

std::uint64_t config_hash(const nlohmann::json& j) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace thermokam::cli
