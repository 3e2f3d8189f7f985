#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gibbs/cli.hpp"
#include "gibbs/config.hpp"
#include "gibbs/io.hpp"

using namespace gibbs;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("gibbs_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const nlohmann::json& j) {
  fs::path p = dir / "config.json";
  std::ofstream out(p);
  out << j.dump(2);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// parse a CSV body into columns keyed by header
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("config round trip") {
  const std::string text = R"({
    "map": {"kind": "manneville_pomeau", "alpha": 0.5},
    "potential": {"kind": "geometric"},
    "scheme": "ulam",
    "N": [1024, 4096],
    "t": {"min": 0.0, "max": 1.5, "steps": 31},
    "oracle": {"depths": [8, 12], "x0": [0.125], "periodic_depth": 10},
    "out": "outdir",
    "workers": 2
  })";
  ExperimentConfig cfg = ExperimentConfig::parse_text(text);
  CHECK(cfg.scheme == SchemeKind::Ulam);
  CHECK(cfg.n_ladder.size() == 2);
  CHECK(cfg.t_steps == 31);
  // serialize -> reparse -> identical serialization
  nlohmann::json j1 = cfg.to_json();
  ExperimentConfig cfg2 = ExperimentConfig::parse(j1);
  CHECK(cfg2.to_json() == j1);
}

TEST_CASE("config validation errors") {
  CHECK_THROWS_AS(ExperimentConfig::parse_text("{"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse_text(R"({"potential":{"kind":"geometric"}})"),
                  ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse_text(
                      R"({"map":{"kind":"doubling"},"potential":{"kind":"constant","value":1},
                          "N":[64, 32]})"),
                  ConfigError);  // ladder must increase
  CHECK_THROWS_AS(ExperimentConfig::parse_text(
                      R"({"map":{"kind":"doubling"},"potential":{"kind":"constant","value":1},
                          "t":{"min":2.0,"max":1.0}})"),
                  ConfigError);  // empty t range
}

TEST_CASE("pressure-sweep subcommand writes the affine curve") {
  fs::path dir = scratch_dir("sweep");
  nlohmann::json cfg = {
      {"map", {{"kind", "doubling"}}},
      {"potential", {{"kind", "constant"}, {"value", 1.0}}},
      {"scheme", "collocation"},
      {"N", {16}},
      {"t", {{"min", -2.0}, {"max", 2.0}, {"steps", 41}}},
      {"workers", 2},
  };
  fs::path cfg_path = write_config(dir, cfg);
  int rc = cli::run({"pressure-sweep", "--config", cfg_path.string(), "--out",
                     (dir / "out").string()});
  CHECK(rc == 0);
  auto rows = parse_csv(slurp(dir / "out" / "pressure_16.csv"));
  REQUIRE(rows.size() == 42);  // header + 41 points
  CHECK(rows[0][0] == "t");
  for (std::size_t r = 1; r < rows.size(); ++r) {
    double t = std::stod(rows[r][0]);
    double P = std::stod(rows[r][1]);
    CHECK(std::fabs(P - (std::log(2.0) + t)) < 1e-12);
  }
  CHECK(fs::exists(dir / "out" / "summary.json"));
  CHECK(fs::exists(dir / "out" / "plot.gnuplot"));
  // no leftover temp files
  for (const auto& e : fs::directory_iterator(dir / "out"))
    CHECK(e.path().extension() != ".tmp");
}

TEST_CASE("oracle-check on PL agrees with the closed form") {
  fs::path dir = scratch_dir("oracle");
  nlohmann::json cfg = {
      {"map", {{"kind", "piecewise_linear"}, {"slopes", {2.0, 3.0}}}},
      {"potential", {{"kind", "geometric"}}},
      {"scheme", "collocation"},
      {"N", {64}},
      {"t", {{"min", 1.0}, {"max", 1.0}, {"steps", 1}}},
      {"oracle", {{"depths", {8, 12}}, {"x0", {0.125, 0.5}}, {"periodic_depth", 10}}},
  };
  fs::path cfg_path = write_config(dir, cfg);
  int rc = cli::run({"oracle-check", "--config", cfg_path.string(), "--out",
                     (dir / "out").string()});
  CHECK(rc == 0);
  nlohmann::json j = nlohmann::json::parse(slurp(dir / "out" / "oracle_check.json"));
  CHECK(j["oracle"]["closed_form_error"].get<double>() < 1e-6);
  CHECK(j["oracle"]["converged"].get<bool>());
  CHECK(j["oracle"].contains("periodic_sum"));
}

TEST_CASE("determinism across worker counts") {
  auto run_once = [](const std::string& tag, int workers) {
    fs::path dir = scratch_dir("det_" + tag);
    nlohmann::json cfg = {
        {"map", {{"kind", "manneville_pomeau"}, {"alpha", 0.5}}},
        {"potential", {{"kind", "geometric"}}},
        {"scheme", "ulam"},
        {"N", {256}},
        {"t", {{"min", 0.0}, {"max", 1.2}, {"steps", 13}}},
        {"workers", workers},
    };
    fs::path cfg_path = write_config(dir, cfg);
    int rc = cli::run({"pressure-sweep", "--config", cfg_path.string(), "--out",
                       (dir / "out").string()});
    REQUIRE(rc == 0);
    return slurp(dir / "out" / "pressure_256.csv");
  };
  std::string a = run_once("w1", 1);
  std::string b = run_once("w4", 4);
  std::string c = run_once("w1b", 1);
  CHECK(a == b);
  CHECK(a == c);
}

TEST_CASE("exit codes: config error and per-t convergence failure") {
  fs::path dir = scratch_dir("exit");
  // malformed config -> 1, no artifacts
  fs::path bad = dir / "bad.json";
  {
    std::ofstream out(bad);
    out << "{ not json";
  }
  CHECK(cli::run({"pressure-sweep", "--config", bad.string(), "--out",
                  (dir / "out1").string()}) == 1);
  CHECK(!fs::exists(dir / "out1" / "summary.json"));

  // starved iteration budget -> exit 2, artifacts still written with flags
  nlohmann::json cfg = {
      {"map", {{"kind", "manneville_pomeau"}, {"alpha", 0.5}}},
      {"potential", {{"kind", "geometric"}}},
      {"scheme", "ulam"},
      {"N", {256}},
      {"t", {{"min", 0.9}, {"max", 1.1}, {"steps", 3}}},
      {"tolerances", {{"max_iter", 3}}},
  };
  fs::path cfg_path = write_config(dir, cfg);
  int rc = cli::run({"pressure-sweep", "--config", cfg_path.string(), "--out",
                     (dir / "out2").string()});
  CHECK(rc == 2);
  auto rows = parse_csv(slurp(dir / "out2" / "pressure_256.csv"));
  REQUIRE(rows.size() == 4);
  for (std::size_t r = 1; r < rows.size(); ++r) CHECK(rows[r][6] == "0");  // converged
}

TEST_CASE("flatten-demo emits a monotone deviation table") {
  fs::path dir = scratch_dir("flat");
  // the intermittent boundary member of the perturbed-doubling family has
  // breakpoints {0, 1/2}, so every radius 2^-k down from 1/4 fits
  nlohmann::json cfg = {
      {"map", {{"kind", "analytic_perturbed_doubling"}, {"amplitude", -1.0}}},
      {"potential",
       {{"kind", "flattened"},
        {"epsilon", 0.125},
        {"inner", {{"kind", "bump"}, {"amplitude", 0.5}, {"center", 0.0}, {"kappa", 3.0},
                   {"axis", 0}}}}},
      {"N", {64}},
  };
  // flatten-demo re-flattens the *inner* potential at eps = 2^-k; feeding the
  // flattened spec directly exercises the factory path too
  fs::path cfg_path = write_config(dir, cfg);
  int rc = cli::run({"flatten-demo", "--config", cfg_path.string(), "--out",
                     (dir / "out").string()});
  CHECK(rc == 0);
  auto rows = parse_csv(slurp(dir / "out" / "flatten_demo.csv"));
  REQUIRE(rows.size() == 8);  // header + k = 2..8
  double prev = 1e300;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    double dev = std::stod(rows[r][2]);
    CHECK(dev <= prev + 1e-12);
    prev = dev;
  }
}

TEST_CASE("equilibrium subcommand emits spectral artifacts") {
  fs::path dir = scratch_dir("equi");
  nlohmann::json cfg = {
      {"map", {{"kind", "doubling"}}},
      {"potential", {{"kind", "trig_poly"},
                     {"terms", {{{"k", {1}}, {"cos", 1.0}}}}}},
      {"scheme", "collocation"},
      {"N", {32}},
  };
  fs::path cfg_path = write_config(dir, cfg);
  int rc = cli::run({"equilibrium", "--config", cfg_path.string(), "--out",
                     (dir / "out").string()});
  CHECK(rc == 0);
  nlohmann::json j = nlohmann::json::parse(slurp(dir / "out" / "spectral.json"));
  CHECK(j["converged"].get<bool>());
  CHECK(j["lambda1"].get<double>() > 2.0);  // cos weight raises the pressure
  CHECK(fs::exists(dir / "out" / "eigenvectors.csv"));
  nlohmann::json eq = nlohmann::json::parse(slurp(dir / "out" / "equilibrium.json"));
  CHECK(eq["expanding_on_average"]["certified"].get<bool>());
}

TEST_CASE("skew-analysis subcommand") {
  fs::path dir = scratch_dir("skew");
  nlohmann::json cfg = {
      {"map",
       {{"kind", "skew_product"},
        {"class", "TM2"},
        {"base", {{"kind", "doubling"}}},
        {"fiber", {{"kind", "manneville_pomeau"}, {"alpha", 0.5}}}}},
      {"potential", {{"kind", "constant"}, {"value", 0.0}}},
      {"scheme", "ulam"},
      {"N", {{32, 32}}},
      {"t", {{"min", -1.0}, {"max", 1.0}, {"steps", 5}}},
      {"tolerances", {{"quad_order", 4}}},
      {"workers", 4},
  };
  fs::path cfg_path = write_config(dir, cfg);
  int rc = cli::run({"skew-analysis", "--config", cfg_path.string(), "--out",
                     (dir / "out").string()});
  CHECK(rc == 0);
  nlohmann::json j = nlohmann::json::parse(slurp(dir / "out" / "skew_analysis.json"));
  for (const auto& label : j["labels"]) CHECK(label.get<std::string>() == "interior");
  auto rows = parse_csv(slurp(dir / "out" / "skew_analysis.csv"));
  REQUIRE(rows.size() == 6);
  for (std::size_t r = 1; r < rows.size(); ++r)
    CHECK(std::fabs(std::stod(rows[r][1]) - std::log(4.0)) < 1e-6);
}

TEST_CASE("csv number format is bit-stable") {
  CHECK(format_number(0.1) == "1.0000000000000001e-01");
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(format_number(-2.0) == "-2.0000000000000000e+00");
}

TEST_CASE("gap-scan subcommand: freezing candidate triggers local refinement") {
  fs::path dir = scratch_dir("gapscan_mp");
  nlohmann::json cfg = {
      {"map", {{"kind", "manneville_pomeau"}, {"alpha", 0.5}}},
      {"potential", {{"kind", "geometric"}}},
      {"scheme", "ulam"},
      {"N", {256, 1024}},
      {"t", {{"min", 0.0}, {"max", 1.5}, {"steps", 16}}},
      {"gap_scan_t_max", 1.0},
      {"workers", 2},
  };
  fs::path cfg_path = write_config(dir, cfg);
  int rc = cli::run({"gap-scan", "--config", cfg_path.string(), "--out",
                     (dir / "out").string()});
  CHECK(rc == 0);
  nlohmann::json j = nlohmann::json::parse(slurp(dir / "out" / "gap_scan.json"));
  REQUIRE(j["scan"]["candidates"].size() >= 1);
  // the candidate straddles the freezing point and was re-swept at 4x density
  const auto& cand = j["scan"]["candidates"][0];
  CHECK(cand["lo"].get<double>() <= 1.0);
  CHECK(cand["hi"].get<double>() >= 1.0);
  REQUIRE(j.contains("refined_csv"));
  auto rows = parse_csv(slurp(dir / "out" / j["refined_csv"].get<std::string>()));
  CHECK(rows.size() > 4);
}

TEST_CASE("gap-scan subcommand: smooth case has no candidates") {
  fs::path dir = scratch_dir("gapscan");
  nlohmann::json cfg = {
      {"map", {{"kind", "doubling"}}},
      {"potential", {{"kind", "trig_poly"}, {"terms", {{{"k", {1}}, {"cos", 1.0}}}}}},
      {"scheme", "collocation"},
      {"N", {32, 48}},
      {"t", {{"min", -2.0}, {"max", 2.0}, {"steps", 21}}},
      {"gap_scan_t_max", 2.0},
      {"workers", 2},
  };
  fs::path cfg_path = write_config(dir, cfg);
  int rc = cli::run({"gap-scan", "--config", cfg_path.string(), "--out",
                     (dir / "out").string()});
  CHECK(rc == 0);
  nlohmann::json j = nlohmann::json::parse(slurp(dir / "out" / "gap_scan.json"));
  CHECK(j["scan"]["candidates"].empty());
  CHECK(j["gap_onset"]["high_temp"]["threshold"].get<double>() ==
        doctest::Approx(2.0));  // entire scanned range has a gap

  // report subcommand summarizes the artifacts
  CHECK(cli::run({"report", "--config", cfg_path.string(), "--out",
                  (dir / "out").string()}) == 0);
}
