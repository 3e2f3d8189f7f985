#include "gibbs/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include "gibbs/oracle.hpp"

namespace gibbs {

Potential constant_potential(double c, int dim) {
  Potential p([c](const Pt&) { return c; }, Regularity::Smooth, std::fabs(c), 0.0,
              "constant(" + std::to_string(c) + ")");
  (void)dim;
  return p;
}

Potential trig_potential(const std::vector<TrigTerm>& terms, int dim) {
  double sup = 0.0, lip = 0.0;
  for (const auto& t : terms) {
    if (static_cast<int>(t.k.size()) != dim)
      throw Error("trig term frequency vector does not match dimension");
    double amp = std::hypot(t.cos_coeff, t.sin_coeff);
    sup += amp;
    double knorm = 0.0;
    for (int ki : t.k) knorm += std::fabs(static_cast<double>(ki));
    lip += amp * kTwoPi * knorm;
  }
  auto terms_copy = terms;
  auto eval = [terms_copy](const Pt& p) {
    double v = 0.0;
    for (const auto& t : terms_copy) {
      double phase = 0.0;
      for (std::size_t a = 0; a < t.k.size(); ++a)
        phase += t.k[a] * p[static_cast<int>(a)];
      phase *= kTwoPi;
      v += t.cos_coeff * std::cos(phase) + t.sin_coeff * std::sin(phase);
    }
    return v;
  };
  return Potential(eval, Regularity::Smooth, sup, lip, "trig_poly");
}

Potential bump_potential(int axis, double center, double kappa, double amplitude,
                         int dim) {
  if (axis < 0 || axis >= dim) throw Error("bump axis out of range");
  auto eval = [axis, center, kappa, amplitude](const Pt& p) {
    return amplitude * std::exp(kappa * (std::cos(kTwoPi * (p[axis] - center)) - 1.0));
  };
  // |d/du| <= |amplitude| kappa 2pi (max of derivative of exp(k(cos u - 1)))
  double lip = std::fabs(amplitude) * kappa * kTwoPi;
  return Potential(eval, Regularity::Smooth, std::fabs(amplitude), lip, "bump");
}

Potential grid_potential(const std::vector<double>& values, int axis, int dim) {
  if (values.size() < 2) throw Error("grid potential needs at least two samples");
  if (axis < 0 || axis >= dim) throw Error("grid potential axis out of range");
  const int n = static_cast<int>(values.size());
  auto vals = values;
  auto eval = [vals, n, axis](const Pt& p) {
    double u = wrap01(p[axis]) * n;
    int i = std::min(static_cast<int>(u), n - 1);
    double f = u - i;
    double v0 = vals[static_cast<std::size_t>(i)];
    double v1 = vals[static_cast<std::size_t>((i + 1) % n)];
    return v0 + f * (v1 - v0);
  };
  double sup = 0.0, lip = 0.0;
  for (int i = 0; i < n; ++i) {
    sup = std::max(sup, std::fabs(vals[static_cast<std::size_t>(i)]));
    lip = std::max(lip, std::fabs(vals[static_cast<std::size_t>((i + 1) % n)] -
                                  vals[static_cast<std::size_t>(i)]) *
                            n);
  }
  return Potential(eval, Regularity::Holder, sup, lip, "custom_grid");
}

Potential geometric_potential(const MapSystem& map, GeometricScope scope) {
  if (scope == GeometricScope::Fiber) {
    const auto* sk = std::get_if<SkewProduct>(&map);
    if (!sk) throw Error("fiber geometric potential needs a skew product");
    if (!std::isfinite(sk->fiber().prototype->derivative_sup()))
      throw UnboundedDerivative("fiber derivative is unbounded");
    auto fiber = sk->fiber();
    int bdim = sk->base_dim();
    auto eval = [fiber, bdim](const Pt& p) {
      return -std::log(std::fabs(fiber.dy(p[0], p[bdim])));
    };
    double sup = std::log(fiber.prototype->derivative_sup());
    Potential out(eval, Regularity::Holder, sup, 0.0, "fiber_geometric");
    out.holder_alpha = 1.0;
    return out;
  }
  const auto* cm = std::get_if<CircleMap>(&map);
  if (!cm) throw Error("geometric potential (full scope) needs a 1D map");
  if (!std::isfinite(cm->derivative_sup()))
    throw UnboundedDerivative("map derivative is unbounded on its domain");
  CircleMap copy = *cm;
  auto eval = [copy](const Pt& p) { return -std::log(std::fabs(copy.derivative(p[0]))); };
  double sup = std::log(copy.derivative_sup());
  Regularity reg = copy.is_intermittent() ? Regularity::Holder : Regularity::Smooth;
  Potential out(eval, reg, sup, 0.0, "geometric");
  return out;
}

double birkhoff_sum(const Potential& phi, const MapSystem& map, const Pt& p, int n) {
  if (n < 0) throw Error("birkhoff_sum: n must be >= 0");
  double s = 0.0;
  Pt q = wrap01(p);
  for (int k = 0; k < n; ++k) {
    s += phi(q);
    q = eval(map, q);
  }
  return s;
}

// ---------------------------------------------------------------------------
// flatten
// ---------------------------------------------------------------------------
namespace {

// C^inf monotone step: 0 for u<=0, 1 for u>=1.
double smooth_step(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  double a = std::exp(-1.0 / u);
  double b = std::exp(-1.0 / (1.0 - u));
  return a / (a + b);
}

double min_cyclic_gap(const std::vector<double>& pts) {
  if (pts.size() < 2) return 1.0;
  std::vector<double> s = pts;
  std::sort(s.begin(), s.end());
  double g = 1.0 - (s.back() - s.front());
  for (std::size_t i = 1; i < s.size(); ++i) g = std::min(g, s[i] - s[i - 1]);
  return g;
}

struct TubeBlend {
  double eps;
  double blend_end;  // min(2 eps, eps + (gap - 2 eps)/2)

  // weight of the snapped value at tube distance d
  double weight(double d) const {
    if (d < eps) return 1.0;
    if (d >= blend_end) return 0.0;
    return smooth_step((blend_end - d) / (blend_end - eps));
  }
};

TubeBlend make_blend(double eps, const std::vector<double>& centers) {
  double gap = min_cyclic_gap(centers);
  if (2.0 * eps > gap + 1e-15)
    throw EpsilonTooLarge("flatten: eps-tubes overlap (2 eps = " +
                          std::to_string(2 * eps) + " > min breakpoint gap " +
                          std::to_string(gap) + ")");
  double end = std::min(2.0 * eps, eps + 0.5 * (gap - 2.0 * eps));
  end = std::max(end, eps);
  return TubeBlend{eps, end};
}

// nearest center and circular distance to it
std::pair<double, double> nearest(const std::vector<double>& centers, double y) {
  double best_c = centers.front(), best_d = 2.0;
  for (double c : centers) {
    double d = circle_dist(y, c);
    if (d < best_d) {
      best_d = d;
      best_c = c;
    }
  }
  return {best_c, best_d};
}

std::uint64_t tube_token(const std::vector<double>& a, const std::vector<double>& b) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    h ^= bits;
    h *= 1099511628211ull;
  };
  for (double v : a) mix(v);
  mix(-1.0);
  for (double v : b) mix(v);
  return h;
}

}  // namespace

Potential flatten(const Potential& phi, double eps, const SkewProduct& map) {
  if (eps <= 0.0) throw Error("flatten: eps must be positive");
  const auto proto_bks = map.fiber().prototype->breakpoints();
  const auto base_bks = map.base_breakpoints();
  const std::uint64_t token = tube_token(proto_bks, base_bks);
  if (phi.flatten_radius && phi.flatten_token == token && *phi.flatten_radius >= eps)
    return phi;  // flatten of an already-flattened potential at >= radius is the identity

  const TubeBlend fiber_blend = make_blend(eps, proto_bks);
  const bool has_base = !base_bks.empty();
  TubeBlend base_blend{eps, eps};
  if (has_base) base_blend = make_blend(eps, base_bks);

  const Potential inner = phi;
  const FiberFamily fiber = map.fiber();
  const int bdim = map.base_dim();
  const auto fiber_centers_at = [fiber, proto_bks](double x) {
    std::vector<double> out = proto_bks;
    double d = fiber.delta(x);
    for (double& b : out) b = wrap01(b + d);
    return out;
  };

  // Flatten in y first (tubes follow alpha_{j,x}); then blend in x toward the
  // base breakpoints of the partially flattened function.
  auto fib = [inner, fiber_centers_at, fiber_blend, bdim](const Pt& p) {
    auto centers = fiber_centers_at(p[0]);
    auto [cj, d] = nearest(centers, p[bdim]);
    double w = fiber_blend.weight(d);
    if (w >= 1.0) {
      Pt q = p;
      q[bdim] = cj;
      return inner(q);
    }
    if (w <= 0.0) return inner(p);
    Pt q = p;
    q[bdim] = cj;
    const double snapped = inner(q), plain = inner(p);
    if (snapped == plain) return plain;
    return w * snapped + (1.0 - w) * plain;
  };

  std::function<double(const Pt&)> eval;
  if (!has_base) {
    eval = fib;
  } else {
    auto bks = base_bks;
    eval = [fib, bks, base_blend](const Pt& p) {
      auto [xi, d] = nearest(bks, p[0]);
      double w = base_blend.weight(d);
      if (w >= 1.0) {
        Pt q = p;
        q[0] = xi;
        return fib(q);
      }
      if (w <= 0.0) return fib(p);
      Pt q = p;
      q[0] = xi;
      const double snapped = fib(q), plain = fib(p);
      if (snapped == plain) return plain;
      return w * snapped + (1.0 - w) * plain;
    };
  }

  Potential out(eval, Regularity::Smooth, phi.sup_norm_bound, phi.modulus_constant,
                phi.label + "|flatten(" + std::to_string(eps) + ")");
  out.regularity = phi.regularity;
  out.holder_alpha = phi.holder_alpha;
  out.flatten_radius = eps;
  out.flatten_token = token;
  return out;
}

Potential flatten(const Potential& phi, double eps, const CircleMap& map) {
  if (eps <= 0.0) throw Error("flatten: eps must be positive");
  const auto bks = map.breakpoints();
  const std::uint64_t token = tube_token(bks, {});
  if (phi.flatten_radius && phi.flatten_token == token && *phi.flatten_radius >= eps)
    return phi;
  const TubeBlend blend = make_blend(eps, bks);
  const Potential inner = phi;
  auto eval = [inner, bks, blend](const Pt& p) {
    auto [cj, d] = nearest(bks, p[0]);
    double w = blend.weight(d);
    if (w >= 1.0) return inner(Pt::of(cj));
    if (w <= 0.0) return inner(p);
    const double snapped = inner(Pt::of(cj)), plain = inner(p);
    if (snapped == plain) return plain;
    return w * snapped + (1.0 - w) * plain;
  };
  Potential out(eval, phi.regularity, phi.sup_norm_bound, phi.modulus_constant,
                phi.label + "|flatten(" + std::to_string(eps) + ")");
  out.holder_alpha = phi.holder_alpha;
  out.flatten_radius = eps;
  out.flatten_token = token;
  return out;
}

// ---------------------------------------------------------------------------
// cohomology test
// ---------------------------------------------------------------------------
CoboundaryResult cohomology_to_constant_test(const Potential& phi, const MapSystem& map,
                                             int max_period) {
  const auto* cm = std::get_if<CircleMap>(&map);
  if (!cm) throw Error("cohomology test: periodic enumeration needs a 1D map");
  if (cm->is_intermittent())
    throw NotExpanding("cohomology test: map must be expanding");

  CoboundaryWitness lo_w, hi_w;
  double lo = 1e300, hi = -1e300;
  for (int p = 1; p <= max_period; ++p) {
    auto orbits = periodic_points(*cm, p);
    for (double x : orbits) {
      double avg = birkhoff_sum(phi, map, Pt::of(x), p) / p;
      std::vector<double> orbit(static_cast<std::size_t>(p));
      double q = x;
      for (int k = 0; k < p; ++k) {
        orbit[static_cast<std::size_t>(k)] = q;
        q = cm->eval(q);
      }
      if (avg < lo) {
        lo = avg;
        lo_w = CoboundaryWitness{orbit, avg};
      }
      if (avg > hi) {
        hi = avg;
        hi_w = CoboundaryWitness{orbit, avg};
      }
    }
  }
  CoboundaryResult res;
  if (hi - lo > 1e-8) {
    res.likely_coboundary = false;
    res.witnesses = std::make_pair(hi_w, lo_w);
  } else {
    res.likely_coboundary = true;
    res.constant = 0.5 * (hi + lo);
  }
  return res;
}

double estimate_modulus_constant(const Potential& phi, const MapSystem& map, int pairs,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const int d = dimension(map);
  double best = 0.0;
  auto consider = [&](const Pt& a, const Pt& b) {
    double dist = circle_dist(a, b);
    if (dist < 1e-9) return;
    double num = std::fabs(phi(a) - phi(b));
    double ratio = num / std::pow(dist, phi.holder_alpha);
    best = std::max(best, ratio);
  };
  for (int i = 0; i < pairs; ++i) {
    Pt a = Pt::zero(d), b = Pt::zero(d);
    for (int k = 0; k < d; ++k) {
      a[k] = uni(rng);
      b[k] = uni(rng);
    }
    consider(a, b);
    // a nearby pair as well, to probe local steepness
    Pt c = a;
    for (int k = 0; k < d; ++k) c[k] = wrap01(c[k] + (uni(rng) - 0.5) * 1e-3);
    consider(a, c);
  }
  return best;
}

}  // namespace gibbs
