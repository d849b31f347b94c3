#include "thermokam/cli.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace thermokam;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

// Runs the CLI in a fresh output directory under the system temp dir.
class Sandbox {
 public:
  explicit Sandbox(const std::string& name) : dir_(fs::temp_directory_path() / ("thermokam-cli-" + name)) {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Sandbox() { fs::remove_all(dir_); }

  Run run(std::vector<std::string> args) const {
    args.insert(args.begin(), {"thermokam", "--out", (dir_ / "out").string()});
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
  }

  std::string write(const std::string& name, const std::string& text) const {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }

  std::vector<fs::path> outputs(const std::string& suffix) const {
    std::vector<fs::path> found;
    if (!fs::exists(dir_ / "out")) return found;
    for (const auto& e : fs::directory_iterator(dir_ / "out")) {
      const std::string s = e.path().string();
      if (s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0)
        found.push_back(e.path());
    }
    std::sort(found.begin(), found.end());
    return found;
  }

 private:
  fs::path dir_;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  return {std::istreambuf_iterator<char>(f), {}};
}

std::vector<std::vector<double>> read_csv(const fs::path& p, std::vector<std::string>& header) {
  std::ifstream f(p);
  std::string line;
  std::getline(f, line);
  header.clear();
  std::stringstream hs(line);
  for (std::string cell; std::getline(hs, cell, ',');) header.push_back(cell);
  std::vector<std::vector<double>> rows;
  while (std::getline(f, line)) {
    std::stringstream ls(line);
    std::vector<double> row;
    for (std::string cell; std::getline(ls, cell, ',');) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  REQUIRE(it != header.end());
  return static_cast<std::size_t>(it - header.begin());
}

const std::string cosine_config = R"({"model": {"n": 1, "potential": {"dim": 1, "modes": [{"k": [1], "cos": 1.0}]}}})";

}  // namespace

TEST_CASE("normal-form reports exact coefficients") {
  Sandbox box("nf");
  const Run r = box.run({"normal-form", "--a", "0", "--b", "0"});
  CHECK(r.code == cli::ok);
  const json j = json::parse(r.out);
  CHECK(j["alpha"] == "-11/24");
  CHECK(j["beta_scalar"] == "1");
  CHECK(j["gamma_par"] == "1");
  CHECK(j["gamma_perp"] == "-1/2");
  CHECK(j["residual_ok"] == true);
  REQUIRE(box.outputs(".manifest.json").size() == 1);
  CHECK(json::parse(slurp(box.outputs("normal-form-" + json::parse(slurp(box.outputs(".manifest.json")[0]))["config_hash"].get<std::string>() + ".json")[0])) == j);

  const Run a2 = box.run({"normal-form", "--a", "2", "--b", "-2/3"});
  CHECK(a2.code == cli::ok);
  CHECK(json::parse(a2.out)["beta_scalar"] == "0");
}

TEST_CASE("normal-form truncated at N = 3") {
  Sandbox box("nf3");
  const json full = json::parse(box.run({"normal-form", "--a", "0", "--b", "0"}).out);
  const json low = json::parse(box.run({"normal-form", "--a", "0", "--b", "0", "--N", "3"}).out);
  CHECK(low["alpha"].is_null());
  CHECK(low["gamma_par"].is_null());
  CHECK(low["beta_scalar"] == full["beta_scalar"]);
  const json& vars = full["nu"]["variables"];
  for (const auto& [key, value] : full["nu"]["terms"].items()) {
    int deg = 0, idx = 0;
    std::stringstream ss(key);
    for (std::string e; std::getline(ss, e, ','); ++idx) deg += std::stoi(e) * vars[idx]["weight"].get<int>();
    if (deg <= 3) CHECK(low["nu"]["terms"][key] == value);
    else CHECK_FALSE(low["nu"]["terms"].contains(key));
  }
}

TEST_CASE("normal-form rejects a malformed rational") {
  Sandbox box("nfbad");
  const Run r = box.run({"normal-form", "--a", "zero"});
  CHECK(r.code == cli::config_error);
  CHECK(r.err.find("normal_form.a") != std::string::npos);
}

TEST_CASE("nondegen scan CSV and summary") {
  Sandbox box("nd");
  const Run r = box.run({"nondegen", "--n", "3", "--rho-lo", "-0.1", "--rho-hi", "0.1", "--rho-points", "21"});
  CHECK(r.code == cli::ok);
  const json j = json::parse(r.out)["summary"];
  CHECK(j["at_rho_0"]["det_isoenergetic"] == "-1/12");
  CHECK(j["at_rho_0"]["det_kolmogorov_full"] == "-1/12");
  CHECK(j["at_rho_0"]["det_B_Wperp"] == "1");

  std::vector<std::string> header;
  const auto rows = read_csv(box.outputs(".scan.csv").at(0), header);
  CHECK(header == std::vector<std::string>{"rho", "det_kolmogorov_full", "det_A_V", "det_A_Vperp", "det_isoenergetic",
                                           "det_B_W", "det_B_Wperp"});
  REQUIRE(rows.size() == 21);
  const auto& zero = rows[10];
  CHECK(std::abs(zero[0]) < 1e-15);
  CHECK(zero[column(header, "det_isoenergetic")] == doctest::Approx(-1.0 / 12).epsilon(1e-12));
  CHECK(zero[column(header, "det_B_Wperp")] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("nondegen audit flags the published locus value") {
  Sandbox box("audit");
  const Run r = box.run({"nondegen", "--audit"});
  CHECK(r.code == cli::ok);
  const json a = json::parse(r.out)["summary"]["locus_audit"];
  CHECK(a["common_zeros"] == 1);
  CHECK(a["a"] == "0");
  CHECK(a["alpha"] == "-1/2");
  CHECK(a["b"] == "-2/3");
}

TEST_CASE("simulate Nose-Hoover oscillator satisfies its ODE row by row") {
  Sandbox box("nh");
  const Run r = box.run({"simulate", "--chart", "nose-hoover", "--n", "1", "--sho", "--T", "1", "--M", "1"});
  CHECK(r.code == cli::ok);
  std::vector<std::string> h;
  const auto rows = read_csv(box.outputs(".orbit.csv").at(0), h);
  REQUIRE(rows.size() > 10);
  const auto q = column(h, "q1"), rho = column(h, "rho1"), xi = column(h, "xi"), dq = column(h, "dq1"),
             drho = column(h, "drho1"), dxi = column(h, "dxi");
  double worst = 0.0;
  for (const auto& row : rows) {
    worst = std::max(worst, std::abs(row[dxi] - (row[rho] * row[rho] - 1.0)));
    worst = std::max(worst, std::abs(row[drho] - (-row[q] - row[xi] * row[rho])));
    worst = std::max(worst, std::abs(row[dq] - row[rho]));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("simulate rescaled flow at beta = 0 keeps W constant") {
  Sandbox box("resc");
  const std::string cfg = box.write("cfg.json", cosine_config);
  const Run r = box.run({"--config", cfg, "simulate", "--chart", "rescaled", "--beta", "0", "--t-end", "5"});
  CHECK(r.code == cli::ok);
  std::vector<std::string> h;
  const auto rows = read_csv(box.outputs(".orbit.csv").at(0), h);
  const auto W = column(h, "W1");
  for (const auto& row : rows) CHECK(row[W] == rows.front()[W]);
}

TEST_CASE("configuration errors exit with code 2 and name the field") {
  Sandbox box("errors");
  const Run missing = box.run({"simulate", "--chart", "rescaled"});
  CHECK(missing.code == cli::config_error);
  CHECK(missing.err.find("model.potential") != std::string::npos);

  const Run unknown = box.run({"--config", box.write("u.json", R"({"model": {"n": 1, "mass": {"c": 1}}})"), "verify"});
  CHECK(unknown.code == cli::config_error);
  CHECK(unknown.err.find("model.mass.c") != std::string::npos);

  const Run syntax = box.run({"--config", box.write("s.json", "{\n  \"model\": {\"n\": 1,}\n}"), "verify"});
  CHECK(syntax.code == cli::config_error);
  CHECK(syntax.err.find(":2:") != std::string::npos);

  const Run range = box.run({"--config", box.write("r.json", R"({"model": {"n": 7}})"), "verify"});
  CHECK(range.code == cli::config_error);
  CHECK(range.err.find("model.n") != std::string::npos);

  CHECK(box.run({"frobnicate"}).code == cli::config_error);
  CHECK(box.run({"simulate", "--chart", "polar"}).code == cli::config_error);
}

TEST_CASE("config parsing applies defaults and keeps the source") {
  const cli::RunConfig cfg = cli::parse_run_config(json::parse(R"({"subcommand": "kam-scan", "model": {"n": 1}})"));
  CHECK(cfg.subcommand == "kam-scan");
  CHECK(cfg.scan.betas == std::vector<double>{0.0, 1e-3, 1.0});
  CHECK(cfg.scan.grid.W_points == 20);
  CHECK(cfg.jobs == 1);
  CHECK(cli::config_hash(cfg.source) == cli::config_hash(json::parse(R"({"subcommand": "kam-scan", "model": {"n": 1}})")));
  CHECK(cli::hash_hex(cli::config_hash(cfg.source)).size() == 16);
}

TEST_CASE("verify passes, and fails on a perturbed alpha") {
  Sandbox box("verify");
  const std::string json_path = box.write("placeholder", "");
  const Run good = box.run({"verify", "--json", json_path});
  CHECK(good.code == cli::ok);
  const json j = json::parse(slurp(json_path));
  int failures = 0, discrepancies = 0;
  for (const auto& c : j["checks"]) {
    failures += c["status"] == "FAIL";
    discrepancies += c["status"] == "DISCREPANCY";
  }
  CHECK(failures == 0);
  CHECK(discrepancies > 0);

  const Run bad = box.run({"verify", "--perturb-alpha", "-1/2"});
  CHECK(bad.code == cli::check_failure);
  CHECK(bad.out.find("FAIL        constant mass: alpha") != std::string::npos);
}

TEST_CASE("identical configurations produce identical outputs") {
  Sandbox box("determinism");
  const std::string cfg = box.write("cfg.json", cosine_config);
  const std::vector<std::string> args{"--config", cfg, "--seed", "5", "kam-scan", "--beta", "0.001", "--grid", "2",
                                      "--max-crossings", "150", "--sections"};
  REQUIRE(box.run(args).code == cli::ok);
  const auto first = box.outputs(".csv");
  REQUIRE(first.size() == 2);
  std::vector<std::string> before;
  for (const auto& p : first) before.push_back(slurp(p));
  REQUIRE(box.run(args).code == cli::ok);
  const auto second = box.outputs(".csv");
  REQUIRE(second == first);
  for (std::size_t i = 0; i < first.size(); ++i) CHECK(slurp(second[i]) == before[i]);

  const json manifest = json::parse(slurp(box.outputs(".manifest.json").at(0)));
  const std::string hash = manifest["config_hash"];
  CHECK(manifest["seed"] == 5);
  for (const auto& p : manifest["outputs"]) CHECK(p.get<std::string>().find(hash) != std::string::npos);
  CHECK(manifest["versions"].contains("eigen"));
  CHECK(manifest["wall_time_s"].is_number());

  std::istringstream cls(before[0]);
  std::string line;
  std::getline(cls, line);
  CHECK(line == "ic_index,verdict,rot_w,rot_thermo,gap,energy_drift");
  int rows = 0;
  while (std::getline(cls, line)) ++rows;
  CHECK(rows == 4);
}
