#include "gibbs/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gibbs/config.hpp"
#include "gibbs/io.hpp"
#include "gibbs/oracle.hpp"
#include "gibbs/thermo.hpp"

namespace gibbs::cli {

namespace {

namespace fs = std::filesystem;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  int workers = -1;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string scheme;
  std::vector<int> n_override;
  double t_min = 0.0, t_max = 0.0;
  int t_steps = 0;
  bool t_min_set = false, t_max_set = false, t_steps_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config_path, "JSON config path")->required();
  cmd->add_option("--out", a.out_dir, "output directory (overrides config)");
  cmd->add_option("--workers", a.workers, "worker count (overrides config)");
  cmd->add_option("--seed", a.seed, "RNG seed (Monte Carlo quadrature option only)")
      ->each([&a](const std::string&) { a.seed_set = true; });
  cmd->add_option("--scheme", a.scheme, "ulam | collocation (overrides config)");
  cmd->add_option("--n", a.n_override, "grid size override (one entry per axis)");
  cmd->add_option("--t-min", a.t_min, "t range lower end")
      ->each([&a](const std::string&) { a.t_min_set = true; });
  cmd->add_option("--t-max", a.t_max, "t range upper end")
      ->each([&a](const std::string&) { a.t_max_set = true; });
  cmd->add_option("--t-steps", a.t_steps, "t grid size")
      ->each([&a](const std::string&) { a.t_steps_set = true; });
}

ExperimentConfig load_config(const CommonArgs& a) {
  std::ifstream in(a.config_path);
  if (!in) throw ConfigError("cannot open config file '" + a.config_path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  ExperimentConfig cfg = ExperimentConfig::parse_text(ss.str());
  if (!a.out_dir.empty()) cfg.out_dir = a.out_dir;
  if (a.workers > 0) cfg.workers = a.workers;
  if (a.seed_set) cfg.seed = a.seed;
  if (!a.scheme.empty()) {
    if (a.scheme == "ulam")
      cfg.scheme = SchemeKind::Ulam;
    else if (a.scheme == "collocation")
      cfg.scheme = SchemeKind::Collocation;
    else
      throw ConfigError("unknown scheme override '" + a.scheme + "'");
  }
  if (!a.n_override.empty()) cfg.n_ladder = {a.n_override};
  if (a.t_min_set) cfg.t_min = a.t_min;
  if (a.t_max_set) cfg.t_max = a.t_max;
  if (a.t_steps_set) cfg.t_steps = a.t_steps;
  if (cfg.t_max < cfg.t_min) throw ConfigError("t range is empty after overrides");
  return cfg;
}

GridSpec grid_for(const std::vector<int>& axes, const MapSystem& map) {
  const int d = dimension(map);
  if (static_cast<int>(axes.size()) == d) return GridSpec{axes};
  if (axes.size() == 1) return GridSpec::uniform(axes.front(), d);
  throw ConfigError("N entry has " + std::to_string(axes.size()) +
                    " axes, map needs " + std::to_string(d));
}

SweepOptions sweep_options(const ExperimentConfig& cfg) {
  SweepOptions opts;
  opts.eig.tol = cfg.eig_tol;
  opts.eig.max_iter = cfg.max_iter;
  opts.quad_order = cfg.quad_order;
  opts.workers = cfg.workers;
  return opts;
}

std::string level_tag(const std::vector<int>& axes) {
  std::string s;
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(axes[static_cast<std::size_t>(i)]);
  }
  return s;
}

int cmd_pressure_sweep(const ExperimentConfig& cfg, bool with_scan) {
  MapSystem map = make_map(cfg.map_spec);
  Potential phi = make_potential(cfg.potential_spec, map);
  const std::vector<double> grid_t = cfg.t_grid();
  SweepOptions opts = sweep_options(cfg);

  std::vector<PressureCurve> ladder;
  bool any_nonconverged = false;
  for (const auto& axes : cfg.n_ladder) {
    GridSpec grid = grid_for(axes, map);
    PressureCurve curve = pressure_sweep(map, phi, grid_t, cfg.scheme, grid, opts);
    for (char c : curve.converged)
      if (!c) any_nonconverged = true;
    ladder.push_back(std::move(curve));
  }

  nlohmann::json summary;
  summary["config"] = cfg.to_json();
  summary["levels"] = nlohmann::json::array();
  for (std::size_t l = 0; l < ladder.size(); ++l) {
    const auto& curve = ladder[l];
    const std::string tag = level_tag(curve.axes);
    atomic_write(fs::path(cfg.out_dir) / ("pressure_" + tag + ".csv"), curve_csv(curve));
    nlohmann::json lev;
    lev["axes"] = curve.axes;
    lev["csv"] = "pressure_" + tag + ".csv";
    lev["lipschitz_ok"] = curve.lipschitz_ok;
    lev["convexity_ok"] = curve.convexity_ok;
    if (curve.p0_error) lev["p0_error"] = *curve.p0_error;
    summary["levels"].push_back(lev);
  }
  if (with_scan && ladder.size() >= 2) {
    ScanResult scan = phase_transition_scan(ladder);
    summary["scan"] = scan_json(scan);
    // also attach candidates to the finest curve CSV repeat? candidates live in JSON
  }
  atomic_write(fs::path(cfg.out_dir) / "summary.json", summary.dump(2) + "\n");
  atomic_write(fs::path(cfg.out_dir) / "plot.gnuplot",
               gnuplot_script("pressure_" + level_tag(ladder.back().axes) + ".csv",
                              "pressure sweep"));
  return any_nonconverged ? 2 : 0;
}

int cmd_gap_scan(const ExperimentConfig& cfg) {
  MapSystem map = make_map(cfg.map_spec);
  Potential phi = make_potential(cfg.potential_spec, map);
  const std::vector<double> grid_t = cfg.t_grid();
  SweepOptions opts = sweep_options(cfg);

  std::vector<PressureCurve> ladder;
  bool any_nonconverged = false;
  for (const auto& axes : cfg.n_ladder) {
    GridSpec grid = grid_for(axes, map);
    PressureCurve curve = pressure_sweep(map, phi, grid_t, cfg.scheme, grid, opts);
    for (char c : curve.converged)
      if (!c) any_nonconverged = true;
    const std::string tag = level_tag(curve.axes);
    atomic_write(fs::path(cfg.out_dir) / ("pressure_" + tag + ".csv"), curve_csv(curve));
    ladder.push_back(std::move(curve));
  }
  nlohmann::json summary;
  summary["config"] = cfg.to_json();
  if (ladder.size() >= 2) {
    ScanResult scan = phase_transition_scan(ladder);
    summary["scan"] = scan_json(scan);

    // local refinement: re-sweep the candidate intervals at 4x grid density
    // on the finest level
    if (!scan.candidates.empty() && grid_t.size() >= 2) {
      const double h = (grid_t[1] - grid_t[0]) / 4.0;
      std::vector<double> fine;
      for (const auto& c : scan.candidates) {
        double lo = std::max(c.lo, grid_t.front());
        double hi = std::min(c.hi, grid_t.back());
        for (double x = lo; x <= hi + 1e-12; x += h) fine.push_back(x);
      }
      std::sort(fine.begin(), fine.end());
      fine.erase(std::unique(fine.begin(), fine.end(),
                             [](double a, double b) { return std::fabs(a - b) < 1e-12; }),
                 fine.end());
      if (fine.size() >= 2) {
        GridSpec top = grid_for(cfg.n_ladder.back(), map);
        PressureCurve refined = pressure_sweep(map, phi, fine, cfg.scheme, top, opts);
        const std::string tag = level_tag(refined.axes);
        atomic_write(fs::path(cfg.out_dir) / ("pressure_refined_" + tag + ".csv"),
                     curve_csv(refined));
        summary["refined_csv"] = "pressure_refined_" + tag + ".csv";
      }
    }
  }
  // gap-onset thresholds on the finest grid
  GridSpec grid = grid_for(cfg.n_ladder.back(), map);
  GapScanResult low =
      gap_onset_scan(map, phi, GapScanDirection::LowTemp, cfg.scheme, grid,
                     cfg.gap_scan_t_max, opts);
  GapScanResult high =
      gap_onset_scan(map, phi, GapScanDirection::HighTemp, cfg.scheme, grid,
                     cfg.gap_scan_t_max, opts);
  auto gap_json = [](const GapScanResult& r) {
    nlohmann::json j;
    j["t"] = r.t;
    j["gap_ratio"] = r.gap;
    if (r.threshold)
      j["threshold"] = *r.threshold;
    else
      j["threshold"] = nullptr;
    return j;
  };
  summary["gap_onset"] = {{"low_temp", gap_json(low)}, {"high_temp", gap_json(high)}};
  atomic_write(fs::path(cfg.out_dir) / "gap_scan.json", summary.dump(2) + "\n");
  return any_nonconverged ? 2 : 0;
}

int cmd_equilibrium(const ExperimentConfig& cfg) {
  MapSystem map = make_map(cfg.map_spec);
  Potential phi = make_potential(cfg.potential_spec, map);
  SweepOptions opts = sweep_options(cfg);
  GridSpec grid = grid_for(cfg.n_ladder.back(), map);
  DiscretizedOperator op = build(map, phi, cfg.scheme, grid, cfg.quad_order, cfg.workers);
  SpectralReport rep = leading_eigentriple(op, opts.eig);
  subleading_modulus(op, rep, opts.eig);
  atomic_write(fs::path(cfg.out_dir) / "spectral.json", report_json(rep).dump(2) + "\n");
  atomic_write(fs::path(cfg.out_dir) / "eigenvectors.csv", eigenvector_csv(rep));
  if (rep.converged && rep.gap_ratio < 0.999) {
    EquilibriumState mu = equilibrium_from_report(rep);
    ExponentRecord lyap = lyapunov_exponents(mu, map);
    EoaCertificate cert = expanding_on_average_certificate(mu, map, 4);
    nlohmann::json j;
    j["lambda_min"] = lyap.lambda_min;
    j["base_exponents"] = lyap.base_exponents;
    if (lyap.fiber_exponent) j["fiber_exponent"] = *lyap.fiber_exponent;
    j["expanding_on_average"] = {{"certified", cert.certified},
                                 {"l", cert.l},
                                 {"value", cert.value},
                                 {"values", cert.values}};
    atomic_write(fs::path(cfg.out_dir) / "equilibrium.json", j.dump(2) + "\n");
  }
  return rep.converged ? 0 : 2;
}

int cmd_skew_analysis(const ExperimentConfig& cfg) {
  MapSystem map = make_map(cfg.map_spec);
  const auto* sk = std::get_if<SkewProduct>(&map);
  if (!sk) throw ConfigError("skew-analysis needs a skew_product map");
  Potential phi = make_potential(cfg.potential_spec, map);
  SweepOptions opts = sweep_options(cfg);
  GridSpec grid = grid_for(cfg.n_ladder.back(), map);
  const std::vector<double> grid_t = cfg.t_grid();
  SkewReport rep = skew_boundary_analysis(*sk, phi, grid_t, cfg.scheme, grid, opts);
  atomic_write(fs::path(cfg.out_dir) / "skew_analysis.csv", skew_csv(rep));
  nlohmann::json j;
  j["config"] = cfg.to_json();
  j["fiber_breakpoints"] = rep.fiber_breakpoints;
  j["base_breakpoints"] = rep.base_breakpoints;
  j["labels"] = rep.label;
  j["margin"] = rep.margin;
  atomic_write(fs::path(cfg.out_dir) / "skew_analysis.json", j.dump(2) + "\n");
  bool any_nonconverged = false;
  for (char c : rep.converged)
    if (!c) any_nonconverged = true;
  return any_nonconverged ? 2 : 0;
}

int cmd_oracle_check(const ExperimentConfig& cfg) {
  MapSystem map = make_map(cfg.map_spec);
  Potential phi = make_potential(cfg.potential_spec, map);
  SweepOptions opts = sweep_options(cfg);
  GridSpec grid = grid_for(cfg.n_ladder.back(), map);
  DiscretizedOperator op = build(map, phi, cfg.scheme, grid, cfg.quad_order, cfg.workers);
  SpectralReport rep = leading_eigentriple(op, opts.eig);

  nlohmann::json oracle;
  oracle["operator_pressure"] = rep.log_lambda1;
  oracle["converged"] = rep.converged;
  nlohmann::json pre = nlohmann::json::array();
  for (int n : cfg.oracle_depths) {
    nlohmann::json row;
    row["n"] = n;
    nlohmann::json per_x0 = nlohmann::json::array();
    for (double x0 : cfg.oracle_x0) {
      Pt p = Pt::zero(dimension(map));
      p[0] = x0;
      per_x0.push_back(pressure_preimage_sum(map, phi, p, n));
    }
    row["preimage_sum"] = per_x0;
    pre.push_back(row);
  }
  oracle["preimage"] = pre;
  try {
    oracle["periodic_sum"] = pressure_periodic_sum(map, phi, cfg.periodic_depth);
    oracle["periodic_depth"] = cfg.periodic_depth;
  } catch (const NotExpanding& e) {
    oracle["periodic_sum"] = nullptr;
    oracle["periodic_note"] = e.what();
  }
  if (cfg.map_spec.at("kind") == "piecewise_linear" &&
      cfg.potential_spec.at("kind") == "geometric") {
    auto slopes = cfg.map_spec.at("slopes").get<std::vector<double>>();
    oracle["closed_form_t1"] = closed_form_pressure_pl(slopes, 1.0);
    oracle["closed_form_error"] =
        std::fabs(rep.log_lambda1 - closed_form_pressure_pl(slopes, 1.0));
  }
  nlohmann::json j;
  j["config"] = cfg.to_json();
  j["oracle"] = oracle;
  atomic_write(fs::path(cfg.out_dir) / "oracle_check.json", j.dump(2) + "\n");
  return rep.converged ? 0 : 2;
}

int cmd_flatten_demo(const ExperimentConfig& cfg) {
  MapSystem map = make_map(cfg.map_spec);
  Potential phi = make_potential(cfg.potential_spec, map);
  std::ostringstream os;
  os << "k,eps,sup_deviation\n";
  const int d = dimension(map);
  for (int k = 2; k <= 8; ++k) {
    const double eps = std::pow(2.0, -k);
    Potential flat;
    try {
      if (const auto* sk = std::get_if<SkewProduct>(&map))
        flat = flatten(phi, eps, *sk);
      else if (const auto* cm = std::get_if<CircleMap>(&map))
        flat = flatten(phi, eps, *cm);
      else
        throw ConfigError("flatten-demo needs a circle map or skew product");
    } catch (const EpsilonTooLarge&) {
      continue;  // this radius does not fit between the breakpoints
    }
    double dev = 0.0;
    const int n = d == 1 ? 20000 : 200;
    if (d == 1) {
      for (int i = 0; i < n; ++i) {
        Pt p = Pt::of((i + 0.5) / n);
        dev = std::max(dev, std::fabs(flat(p) - phi(p)));
      }
    } else {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          Pt p = Pt::of((i + 0.5) / n, (j + 0.5) / n);
          dev = std::max(dev, std::fabs(flat(p) - phi(p)));
        }
    }
    os << k << ',' << format_number(eps) << ',' << format_number(dev) << '\n';
  }
  atomic_write(fs::path(cfg.out_dir) / "flatten_demo.csv", os.str());
  return 0;
}

int cmd_report(const ExperimentConfig& cfg) {
  // Summarize whatever artifacts exist in the output directory.
  fs::path dir(cfg.out_dir);
  if (!fs::exists(dir)) {
    std::cerr << "report: output directory '" << dir.string() << "' does not exist\n";
    return 1;
  }
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") {
      std::ifstream in(entry.path());
      nlohmann::json j;
      try {
        in >> j;
      } catch (...) {
        continue;
      }
      std::cout << "== " << entry.path().filename().string() << " ==\n";
      if (j.contains("scan")) {
        for (const auto& c : j["scan"]["candidates"]) {
          std::cout << "  transition candidate [" << c["lo"] << ", " << c["hi"] << "] reasons:";
          for (const auto& r : c["reasons"]) std::cout << ' ' << r.get<std::string>();
          std::cout << '\n';
        }
        if (j["scan"]["candidates"].empty())
          std::cout << "  no transition candidates\n";
      }
      if (j.contains("oracle")) {
        std::cout << "  operator pressure " << j["oracle"]["operator_pressure"] << '\n';
        if (j["oracle"].contains("closed_form_error"))
          std::cout << "  closed-form error " << j["oracle"]["closed_form_error"] << '\n';
      }
      if (j.contains("gap_ratio"))
        std::cout << "  lambda1 " << j["lambda1"] << " gap " << j["gap_ratio"] << '\n';
    }
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"transfer-operator thermodynamic formalism toolkit"};
  app.require_subcommand(1);

  CommonArgs a;
  auto* sweep = app.add_subcommand("pressure-sweep", "pressure curve over a t grid");
  add_common(sweep, a);
  auto* gap = app.add_subcommand("gap-scan", "refinement ladder + transition scan");
  add_common(gap, a);
  auto* equi = app.add_subcommand("equilibrium", "equilibrium state and exponents");
  add_common(equi, a);
  auto* skew = app.add_subcommand("skew-analysis", "boundary-subsystem decomposition");
  add_common(skew, a);
  auto* oracle = app.add_subcommand("oracle-check", "operator vs brute-force oracles");
  add_common(oracle, a);
  auto* flat = app.add_subcommand("flatten-demo", "breakpoint flattening deviation table");
  add_common(flat, a);
  auto* rep = app.add_subcommand("report", "summarize artifacts in the output directory");
  add_common(rep, a);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    ExperimentConfig cfg = load_config(a);
    if (sweep->parsed()) return cmd_pressure_sweep(cfg, true);
    if (gap->parsed()) return cmd_gap_scan(cfg);
    if (equi->parsed()) return cmd_equilibrium(cfg);
    if (skew->parsed()) return cmd_skew_analysis(cfg);
    if (oracle->parsed()) return cmd_oracle_check(cfg);
    if (flat->parsed()) return cmd_flatten_demo(cfg);
    if (rep->parsed()) return cmd_report(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace gibbs::cli
