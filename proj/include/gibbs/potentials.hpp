#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gibbs/common.hpp"
#include "gibbs/dynamics.hpp"

namespace gibbs {

enum class Regularity { Smooth, Holder };

class Potential {
 public:
  Potential() = default;
  Potential(std::function<double(const Pt&)> eval, Regularity reg, double sup_bound,
            double modulus, std::string name)
      : regularity(reg), sup_norm_bound(sup_bound), modulus_constant(modulus),
        label(std::move(name)), eval_(std::move(eval)) {}

  double operator()(const Pt& p) const { return eval_(p); }
  bool valid() const { return static_cast<bool>(eval_); }

  Regularity regularity = Regularity::Smooth;
  double holder_alpha = 1.0;
  double sup_norm_bound = 0.0;
  // Lipschitz (or Holder) constant; an analytic bound where available,
  // otherwise a sampled estimate.
  double modulus_constant = 0.0;
  std::optional<double> flatten_radius;
  std::uint64_t flatten_token = 0;  // tube geometry id, see flatten()
  std::string label;

 private:
  std::function<double(const Pt&)> eval_;
};

struct TrigTerm {
  std::vector<int> k;  // one frequency per axis
  double cos_coeff = 0.0;
  double sin_coeff = 0.0;
};

Potential constant_potential(double c, int dim = 1);
Potential trig_potential(const std::vector<TrigTerm>& terms, int dim);
// amplitude * exp(kappa (cos(2 pi (p[axis]-center)) - 1)): a smooth circle bump.
Potential bump_potential(int axis, double center, double kappa, double amplitude,
                         int dim);
// Periodic linear interpolation of samples on a uniform grid along one axis.
Potential grid_potential(const std::vector<double>& values, int axis, int dim);

enum class GeometricScope { Full, Fiber };
Potential geometric_potential(const MapSystem& map,
                              GeometricScope scope = GeometricScope::Full);

double birkhoff_sum(const Potential& phi, const MapSystem& map, const Pt& p, int n);

// Breakpoint flattening (the smooth-plateau construction). The result is
// exactly constant in y on the eps-tube around each fiber breakpoint with
// value phi(x, alpha_{j,x}), exactly constant in x on the eps-ball around each
// base breakpoint, and blends smoothly back to phi within distance
// min(2 eps, half the free gap). Throws EpsilonTooLarge when the closed
// eps-tubes of two breakpoints would overlap (2 eps > min gap).
Potential flatten(const Potential& phi, double eps, const SkewProduct& map);
// Same construction on the circle, tubes at the 1D map's breakpoints.
Potential flatten(const Potential& phi, double eps, const CircleMap& map);

struct CoboundaryWitness {
  std::vector<double> orbit;
  double average = 0.0;
};

struct CoboundaryResult {
  bool likely_coboundary = false;
  double constant = 0.0;  // common periodic average when likely_coboundary
  std::optional<std::pair<CoboundaryWitness, CoboundaryWitness>> witnesses;
};

// Periodic-orbit averages S_p(phi)/p over all orbits of period <= max_period.
// Spread above 1e-8 certifies "not cohomologous to a constant" and returns
// the two extreme orbits as witnesses.
CoboundaryResult cohomology_to_constant_test(const Potential& phi, const MapSystem& map,
                                             int max_period);

// Sampled estimate of the modulus constant: sup |phi(p)-phi(q)| / d(p,q)^alpha
// over random pairs plus near-breakpoint pairs. An estimate, not a bound.
double estimate_modulus_constant(const Potential& phi, const MapSystem& map,
                                 int pairs = 10000, std::uint64_t seed = 2024);

}  // namespace gibbs
