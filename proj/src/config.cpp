#include "gibbs/config.hpp"

#include <cmath>
#include <optional>

#include "gibbs/thermo.hpp"

namespace gibbs {

namespace {

template <typename T>
T field(const nlohmann::json& j, const std::string& key, const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config field '" + key + "': " + e.what());
  }
}

template <typename T>
T required(const nlohmann::json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key))
    throw ConfigError("missing config field '" + key + "' in " + where);
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config field '" + key + "' in " + where + ": " + e.what());
  }
}

}  // namespace

ExperimentConfig ExperimentConfig::parse_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse(j);
}

ExperimentConfig ExperimentConfig::parse(const nlohmann::json& j) {
  ExperimentConfig c;
  c.map_spec = required<nlohmann::json>(j, "map", "config root");
  c.potential_spec = required<nlohmann::json>(j, "potential", "config root");

  std::string scheme = field<std::string>(j, "scheme", "ulam");
  if (scheme == "ulam")
    c.scheme = SchemeKind::Ulam;
  else if (scheme == "collocation")
    c.scheme = SchemeKind::Collocation;
  else
    throw ConfigError("scheme must be 'ulam' or 'collocation', got '" + scheme + "'");

  c.n_ladder.clear();
  if (j.contains("N")) {
    const auto& nj = j.at("N");
    if (!nj.is_array() || nj.empty()) throw ConfigError("N must be a non-empty array");
    for (const auto& item : nj) {
      std::vector<int> axes;
      if (item.is_number_integer())
        axes.push_back(item.get<int>());
      else if (item.is_array())
        for (const auto& v : item) axes.push_back(v.get<int>());
      else
        throw ConfigError("N entries must be integers or integer arrays");
      for (int a : axes)
        if (a < 8) throw ConfigError("N entries must be >= 8");
      c.n_ladder.push_back(axes);
    }
    for (std::size_t i = 1; i < c.n_ladder.size(); ++i) {
      long prev = 1, cur = 1;
      for (int a : c.n_ladder[i - 1]) prev *= a;
      for (int a : c.n_ladder[i]) cur *= a;
      if (cur <= prev) throw ConfigError("N ladder must be strictly increasing");
    }
  } else {
    c.n_ladder = {{128}};
  }

  if (j.contains("t")) {
    const auto& tj = j.at("t");
    c.t_min = required<double>(tj, "min", "t");
    c.t_max = required<double>(tj, "max", "t");
    c.t_steps = field<int>(tj, "steps", 161);
  }
  if (!(c.t_max >= c.t_min)) throw ConfigError("t range is empty");
  if (c.t_steps < 1) throw ConfigError("t.steps must be >= 1");

  if (j.contains("oracle")) {
    const auto& oj = j.at("oracle");
    c.oracle_depths = field<std::vector<int>>(oj, "depths", c.oracle_depths);
    c.oracle_x0 = field<std::vector<double>>(oj, "x0", c.oracle_x0);
    c.periodic_depth = field<int>(oj, "periodic_depth", c.periodic_depth);
  }

  c.out_dir = field<std::string>(j, "out", c.out_dir);
  c.workers = field<int>(j, "workers", c.workers);
  c.seed = field<std::uint64_t>(j, "seed", c.seed);
  if (j.contains("tolerances")) {
    const auto& tj = j.at("tolerances");
    c.eig_tol = field<double>(tj, "eig_tol", c.eig_tol);
    c.max_iter = field<int>(tj, "max_iter", c.max_iter);
    c.quad_order = field<int>(tj, "quad_order", c.quad_order);
  }
  c.flatten_eps = field<double>(j, "flatten_eps", c.flatten_eps);
  c.gap_scan_t_max = field<double>(j, "gap_scan_t_max", c.gap_scan_t_max);
  return c;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["map"] = map_spec;
  j["potential"] = potential_spec;
  j["scheme"] = to_string(scheme);
  nlohmann::json ladder = nlohmann::json::array();
  for (const auto& axes : n_ladder) {
    if (axes.size() == 1)
      ladder.push_back(axes.front());
    else
      ladder.push_back(axes);
  }
  j["N"] = ladder;
  j["t"] = {{"min", t_min}, {"max", t_max}, {"steps", t_steps}};
  j["oracle"] = {{"depths", oracle_depths}, {"x0", oracle_x0},
                 {"periodic_depth", periodic_depth}};
  j["out"] = out_dir;
  j["workers"] = workers;
  j["seed"] = seed;
  j["tolerances"] = {{"eig_tol", eig_tol}, {"max_iter", max_iter},
                     {"quad_order", quad_order}};
  j["flatten_eps"] = flatten_eps;
  j["gap_scan_t_max"] = gap_scan_t_max;
  return j;
}

std::vector<double> ExperimentConfig::t_grid() const {
  return linspace(t_min, t_max, t_steps);
}

// ---------------------------------------------------------------------------
// factories
// ---------------------------------------------------------------------------
namespace {

CircleMap make_circle_map(const nlohmann::json& spec) {
  const std::string kind = required<std::string>(spec, "kind", "map spec");
  if (kind == "doubling") return make_doubling();
  if (kind == "piecewise_linear")
    return make_piecewise_linear(required<std::vector<double>>(spec, "slopes", kind));
  if (kind == "manneville_pomeau")
    return make_manneville_pomeau(required<double>(spec, "alpha", kind));
  if (kind == "analytic_perturbed_doubling")
    return make_perturbed_doubling(required<double>(spec, "amplitude", kind));
  throw ConfigError("unknown 1D map kind '" + kind + "'");
}

}  // namespace

MapSystem make_map(const nlohmann::json& spec) {
  const std::string kind = required<std::string>(spec, "kind", "map spec");
  if (kind == "torus_linear") {
    auto rows = required<std::vector<std::vector<long long>>>(spec, "matrix", kind);
    return TorusEndomorphism(rows);
  }
  if (kind == "skew_product") {
    const auto base_spec = required<nlohmann::json>(spec, "base", kind);
    const auto fiber_spec = required<nlohmann::json>(spec, "fiber", kind);
    std::optional<SkewProduct::Base> base;
    if (base_spec.at("kind") == "torus_linear")
      base.emplace(TorusEndomorphism(
          required<std::vector<std::vector<long long>>>(base_spec, "matrix", "base")));
    else
      base.emplace(make_circle_map(base_spec));

    FiberFamily fiber;
    fiber.prototype = std::make_shared<const CircleMap>(make_circle_map(fiber_spec));
    if (spec.contains("breakpoint_shift")) {
      const auto& sj = spec.at("breakpoint_shift");
      const double amp = required<double>(sj, "amplitude", "breakpoint_shift");
      const double freq = field<double>(sj, "frequency", 1.0);
      fiber.shift = [amp, freq](double x) { return amp * std::sin(kTwoPi * freq * x); };
      fiber.shift_deriv = [amp, freq](double x) {
        return amp * kTwoPi * freq * std::cos(kTwoPi * freq * x);
      };
      fiber.x_dependent = amp != 0.0;
    }
    const std::string cls = field<std::string>(spec, "class", "TM1");
    SkewClass sc = SkewClass::TM1;
    if (cls == "TM1")
      sc = SkewClass::TM1;
    else if (cls == "TM2")
      sc = SkewClass::TM2;
    else if (cls == "TM3")
      sc = SkewClass::TM3;
    else
      throw ConfigError("skew class must be TM1, TM2 or TM3");
    return SkewProduct(std::move(*base), std::move(fiber), sc);
  }
  return make_circle_map(spec);
}

Potential make_potential(const nlohmann::json& spec, const MapSystem& map) {
  const std::string kind = required<std::string>(spec, "kind", "potential spec");
  const int d = dimension(map);
  if (kind == "constant")
    return constant_potential(required<double>(spec, "value", kind), d);
  if (kind == "trig_poly") {
    std::vector<TrigTerm> terms;
    for (const auto& tj : required<nlohmann::json>(spec, "terms", kind)) {
      TrigTerm t;
      t.k = required<std::vector<int>>(tj, "k", "trig term");
      t.cos_coeff = field<double>(tj, "cos", 0.0);
      t.sin_coeff = field<double>(tj, "sin", 0.0);
      terms.push_back(t);
    }
    return trig_potential(terms, d);
  }
  if (kind == "geometric") return geometric_potential(map, GeometricScope::Full);
  if (kind == "fiber_geometric") return geometric_potential(map, GeometricScope::Fiber);
  if (kind == "bump") {
    return bump_potential(field<int>(spec, "axis", d - 1),
                          field<double>(spec, "center", 0.0),
                          field<double>(spec, "kappa", 3.0),
                          required<double>(spec, "amplitude", kind), d);
  }
  if (kind == "custom_grid") {
    return grid_potential(required<std::vector<double>>(spec, "values", kind),
                          field<int>(spec, "axis", 0), d);
  }
  if (kind == "flattened") {
    const auto inner_spec = required<nlohmann::json>(spec, "inner", kind);
    const double eps = required<double>(spec, "epsilon", kind);
    Potential inner = make_potential(inner_spec, map);
    if (const auto* sk = std::get_if<SkewProduct>(&map)) return flatten(inner, eps, *sk);
    if (const auto* cm = std::get_if<CircleMap>(&map)) return flatten(inner, eps, *cm);
    throw ConfigError("flattened potential needs a circle map or skew product");
  }
  throw ConfigError("unknown potential kind '" + kind + "'");
}

}  // namespace gibbs
