#pragma once

#include "thermokam/dynamics.hpp"
#include "thermokam/integrate.hpp"
#include "thermokam/kamscan.hpp"
#include "thermokam/normalform.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace thermokam::cli {

enum ExitCode : int { ok = 0, check_failure = 1, config_error = 2, solver_inconsistency = 3 };

/// Invalid configuration; `field` is the JSON path of the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct ModelConfig {
  Eigen::Index n = 1;
  Eigen::MatrixXd metric;  // empty means identity
  std::optional<nlohmann::json> potential;
  double M = 1.0;
  double T = 1.0;
  double k = 1.0;
  std::optional<double> beta;  // rescaled chart; defaults to 1 / (n k T)
  Rational mass_a{0}, mass_b{0};
  std::vector<Rational> mass_higher;

  FlatMetric flat_metric() const;
  Potential potential_or_throw() const;
  ThermostatParams params() const;
  double effective_beta() const;
  MassSeries mass_series() const;
};

struct SimulateConfig {
  std::string chart = "rescaled";  // nose | rescaled | nose-hoover
  bool sho = false;                // harmonic potential (stiffness 1) instead of the model potential
  bool with_derivatives = false;
  std::optional<std::vector<double>> initial;  // flat state in the chart layout
  std::string method = "midpoint";             // midpoint | rk45
  double t_end = 10.0;
};

struct NormalFormConfig {
  Rational a{0}, b{0};
  int N = 4;
};

struct NondegenConfig {
  Eigen::Index n = 2;
  Rational a{0}, b{0};
  int N = 4;
  Rational I{0};
  double rho_lo = -0.5, rho_hi = 0.5;
  int rho_points = 101;
  bool audit = false;
};

struct ScanConfig {
  std::vector<double> betas{0.0, 1e-3, 1.0};
  IcGrid grid;
  SectionSpec section;
  ClassifierThresholds thresholds;
  bool keep_sections = false;
  bool svg = false;
};

struct VerifyConfig {
  std::optional<Rational> perturb_alpha;
  std::optional<std::string> json_path;
};

struct RunConfig {
  std::string subcommand;
  ModelConfig model;
  IntegratorConfig integrator;
  SimulateConfig simulate;
  NormalFormConfig normal_form;
  NondegenConfig nondegen;
  ScanConfig scan;
  VerifyConfig verify;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  int jobs = 1;

  /// The validated input, echoed into manifests and hashed.
  nlohmann::json source;
};

/// Validates against the published schema rules (unknown keys rejected) and
/// fills defaults. Throws ConfigError naming the field.
RunConfig parse_run_config(const nlohmann::json& j);
/// Reads a JSON file; parse errors are reported with line and column.
nlohmann::json load_config_file(const std::string& path);

/// 64-bit FNV-1a of the compact JSON dump.
std::uint64_t config_hash(const nlohmann::json& j);
std::string hash_hex(std::uint64_t h);

/// Subcommands. Each returns an ExitCode and writes its outputs under
/// cfg.output_dir with a manifest naming the config hash.
int cmd_simulate(const RunConfig& cfg, std::ostream& out);
int cmd_normal_form(const RunConfig& cfg, std::ostream& out);
int cmd_nondegen(const RunConfig& cfg, std::ostream& out);
int cmd_kam_scan(const RunConfig& cfg, std::ostream& out);

enum class CheckStatus { pass, fail, known_discrepancy };
std::string to_string(CheckStatus s);

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::fail;
  std::string expected;
  std::string observed;
};

/// Replays the reference identities of the toolkit. Rows marked
/// known_discrepancy are published statements the solver contradicts; they
/// are reported but do not fail the run.
std::vector<CheckResult> run_verify_checks(const VerifyConfig& cfg);
nlohmann::json verify_json(const std::vector<CheckResult>& checks);
int cmd_verify(const RunConfig& cfg, std::ostream& out);

/// Entry point used by the executable; argv handling via CLI11.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace thermokam::cli
