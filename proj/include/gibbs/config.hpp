#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gibbs/dynamics.hpp"
#include "gibbs/potentials.hpp"
#include "gibbs/transfer_operator.hpp"

namespace gibbs {

struct ExperimentConfig {
  nlohmann::json map_spec;
  nlohmann::json potential_spec;
  SchemeKind scheme = SchemeKind::Ulam;
  std::vector<std::vector<int>> n_ladder;  // per level: one entry per axis
  double t_min = -1.0;
  double t_max = 1.0;
  int t_steps = 161;
  std::vector<int> oracle_depths{8, 12, 16};
  std::vector<double> oracle_x0{0.125};
  int periodic_depth = 12;
  std::string out_dir = "out";
  int workers = 1;
  std::uint64_t seed = 0;  // reserved for the Monte Carlo quadrature option
  int quad_order = 8;
  double eig_tol = 1e-12;
  int max_iter = 30000;
  double flatten_eps = 1.0 / 16.0;
  double gap_scan_t_max = 4.0;

  static ExperimentConfig parse(const nlohmann::json& j);
  static ExperimentConfig parse_text(const std::string& text);
  nlohmann::json to_json() const;
  std::vector<double> t_grid() const;
};

MapSystem make_map(const nlohmann::json& spec);
Potential make_potential(const nlohmann::json& spec, const MapSystem& map);

}  // namespace gibbs
