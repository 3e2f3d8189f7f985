#include "gibbs/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gibbs/parallel.hpp"

namespace gibbs {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) throw Error("linspace: n must be >= 1");
  std::vector<double> out(static_cast<std::size_t>(n));
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  for (int i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return out;
}

// ---------------------------------------------------------------------------
// pressure_sweep
// ---------------------------------------------------------------------------
PressureCurve pressure_sweep(const MapSystem& map, const Potential& phi,
                             std::span<const double> t_grid, SchemeKind scheme,
                             GridSpec grid, const SweepOptions& opts) {
  if (t_grid.empty()) throw Error("pressure_sweep: empty t grid");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1])) throw Error("pressure_sweep: t grid must increase");

  OperatorFamily family(map, phi, scheme, grid, opts.quad_order, opts.workers);

  const std::size_t n = t_grid.size();
  PressureCurve curve;
  curve.t.assign(t_grid.begin(), t_grid.end());
  curve.P.assign(n, kNaN);
  curve.P_mu.assign(n, kNaN);
  curve.gap_ratio.assign(n, kNaN);
  curve.converged.assign(n, 0);
  curve.label.assign(n, "");
  curve.margin.assign(n, kNaN);
  curve.scheme = scheme;
  curve.axes = grid.axes;
  curve.phi_sup = phi.sup_norm_bound;
  curve.tol = scheme_tolerance(scheme, grid);

  // phi samples at the grid sites, for P_mu
  const long g = grid.total();
  std::vector<double> phi_sites(static_cast<std::size_t>(g));
  for (long i = 0; i < g; ++i)
    phi_sites[static_cast<std::size_t>(i)] = phi(grid.site(i, scheme));

  parallel_for(n, opts.workers, [&](std::size_t k) {
    DiscretizedOperator op = family.at(curve.t[k]);
    SpectralReport rep = leading_eigentriple(op, opts.eig);
    if (opts.with_gap) subleading_modulus(op, rep, opts.eig);
    curve.P[k] = rep.log_lambda1;
    curve.gap_ratio[k] = rep.gap_ratio;
    curve.converged[k] = rep.converged ? 1 : 0;
    double pm = 0.0;
    for (long i = 0; i < g; ++i)
      pm += rep.h[static_cast<std::size_t>(i)] * rep.nu[static_cast<std::size_t>(i)] *
            phi_sites[static_cast<std::size_t>(i)];
    curve.P_mu[k] = pm;
  });

  // finite differences
  curve.P_fd.assign(n, kNaN);
  curve.P2_fd.assign(n, kNaN);
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0 && k + 1 < n) {
      curve.P_fd[k] = (curve.P[k + 1] - curve.P[k - 1]) / (curve.t[k + 1] - curve.t[k - 1]);
      const double hl = curve.t[k] - curve.t[k - 1];
      const double hr = curve.t[k + 1] - curve.t[k];
      curve.P2_fd[k] =
          2.0 * (hl * curve.P[k + 1] - (hl + hr) * curve.P[k] + hr * curve.P[k - 1]) /
          (hl * hr * (hl + hr));
    } else if (n >= 2) {
      if (k == 0)
        curve.P_fd[k] = (curve.P[1] - curve.P[0]) / (curve.t[1] - curve.t[0]);
      else
        curve.P_fd[k] = (curve.P[n - 1] - curve.P[n - 2]) / (curve.t[n - 1] - curve.t[n - 2]);
    }
  }

  // attached invariants
  const double lip = curve.phi_sup + 1e-9;
  curve.lipschitz_ok = true;
  for (std::size_t i = 0; i < n && curve.lipschitz_ok; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::fabs(curve.P[j] - curve.P[i]) >
          lip * std::fabs(curve.t[j] - curve.t[i]) + 1e-12) {
        curve.lipschitz_ok = false;
        break;
      }
  double pmax = 0.0;
  for (std::size_t k = 0; k < n; ++k) pmax = std::max(pmax, std::fabs(curve.P[k]));
  const double conv_tol = 1e-6 * std::max(pmax, 1.0);
  curve.convexity_ok = true;
  for (std::size_t k = 1; k + 1 < n; ++k)
    if (curve.P2_fd[k] < -conv_tol) curve.convexity_ok = false;
  for (std::size_t k = 0; k < n; ++k)
    if (std::fabs(curve.t[k]) < 1e-12)
      curve.p0_error = std::fabs(curve.P[k] - std::log(static_cast<double>(degree(map))));

  return curve;
}

// ---------------------------------------------------------------------------
// EquilibriumState
// ---------------------------------------------------------------------------
double EquilibriumState::integrate(const std::function<double(const Pt&)>& g) const {
  double s = 0.0;
  for (std::size_t i = 0; i < sites.size(); ++i) s += weights[i] * g(sites[i]);
  return s;
}

double EquilibriumState::integrate(const Potential& g) const {
  double s = 0.0;
  for (std::size_t i = 0; i < sites.size(); ++i) s += weights[i] * g(sites[i]);
  return s;
}

std::pair<double, double> EquilibriumState::invariance_defect(const MapSystem& map,
                                                              int max_deg) const {
  const int d = sites.empty() ? 1 : sites.front().dim;
  double worst = 0.0;
  for (int axis = 0; axis < d; ++axis) {
    for (int k = 1; k <= max_deg; ++k) {
      for (int mode = 0; mode < 2; ++mode) {
        auto g = [axis, k, mode](const Pt& p) {
          double u = kTwoPi * k * p[axis];
          return mode == 0 ? std::cos(u) : std::sin(u);
        };
        double direct = integrate(g);
        double pushed = 0.0;
        for (std::size_t i = 0; i < sites.size(); ++i)
          pushed += weights[i] * g(eval(map, sites[i]));
        worst = std::max(worst, std::fabs(pushed - direct));
      }
    }
  }
  double bound;
  if (scheme == SchemeKind::Ulam)
    bound = 40.0 * max_deg / grid.min_axis();
  else
    bound = 1e-7;
  return {worst, bound};
}

EquilibriumState equilibrium_from_report(const SpectralReport& rep) {
  EquilibriumState st;
  st.scheme = rep.scheme;
  st.grid = GridSpec{rep.axes};
  st.gap_ratio = rep.gap_ratio;
  const long g = st.grid.total();
  st.sites.resize(static_cast<std::size_t>(g));
  st.weights.resize(static_cast<std::size_t>(g));
  double total = 0.0;
  for (long i = 0; i < g; ++i) {
    st.sites[static_cast<std::size_t>(i)] = st.grid.site(i, rep.scheme);
    double w = rep.h[static_cast<std::size_t>(i)] * rep.nu[static_cast<std::size_t>(i)];
    st.weights[static_cast<std::size_t>(i)] = w;
    total += w;
  }
  for (auto& w : st.weights) w /= total;
  return st;
}

EquilibriumState equilibrium_state(const MapSystem& map, const Potential& phi,
                                   SchemeKind scheme, GridSpec grid,
                                   const SweepOptions& opts) {
  DiscretizedOperator op = build(map, phi, scheme, grid, opts.quad_order, opts.workers);
  SpectralReport rep = leading_eigentriple(op, opts.eig);
  subleading_modulus(op, rep, opts.eig);
  if (rep.gap_ratio >= 0.999)
    throw GapCollapsed("equilibrium_state: gap_ratio " + std::to_string(rep.gap_ratio) +
                       " >= 0.999; the grid equilibrium state is unreliable");
  return equilibrium_from_report(rep);
}

double entropy_via_legendre(const PressureCurve& curve, double t) {
  for (const auto& c : curve.transition_candidates)
    if (t >= c.lo - 1e-12 && t <= c.hi + 1e-12)
      throw NonSmoothPoint("entropy_via_legendre: t lies in a transition candidate");
  // locate the closest grid point
  std::size_t best = 0;
  double bd = 1e300;
  for (std::size_t k = 0; k < curve.t.size(); ++k) {
    double d = std::fabs(curve.t[k] - t);
    if (d < bd) {
      bd = d;
      best = k;
    }
  }
  if (bd > 1e-9) throw Error("entropy_via_legendre: t is not a grid point");
  if (!curve.converged[best])
    throw NotConverged("entropy_via_legendre: non-converged grid point");
  double h = curve.P[best] - t * curve.P_mu[best];
  return std::max(h, -1e-10);
}

// ---------------------------------------------------------------------------
// Lyapunov exponents and expanding-on-average certificates
// ---------------------------------------------------------------------------
ExponentRecord lyapunov_exponents(const EquilibriumState& mu, const MapSystem& map) {
  ExponentRecord rec;
  if (const auto* cm = std::get_if<CircleMap>(&map)) {
    double v = mu.integrate([cm](const Pt& p) {
      return std::log(std::fabs(cm->derivative(p[0])));
    });
    rec.base_exponents = {v};
    rec.lambda_min = v;
    return rec;
  }
  if (const auto* te = std::get_if<TorusEndomorphism>(&map)) {
    // linear map: exponents are the eigenvalue moduli, measure-independent
    rec.base_exponents = {std::log(te->min_eigenvalue_modulus()),
                          std::log(te->max_eigenvalue_modulus())};
    rec.lambda_min = rec.base_exponents.front();
    return rec;
  }
  const auto& sk = std::get<SkewProduct>(map);
  if (const auto* cm = std::get_if<CircleMap>(&sk.base())) {
    double v = mu.integrate([cm](const Pt& p) {
      return std::log(std::fabs(cm->derivative(p[0])));
    });
    rec.base_exponents = {v};
  } else {
    const auto& te = std::get<TorusEndomorphism>(sk.base());
    rec.base_exponents = {std::log(te.min_eigenvalue_modulus()),
                          std::log(te.max_eigenvalue_modulus())};
  }
  const int bdim = sk.base_dim();
  double fib = mu.integrate([&sk, bdim](const Pt& p) {
    return std::log(std::fabs(sk.fiber().dy(p[0], p[bdim])));
  });
  rec.fiber_exponent = fib;
  rec.lambda_min = std::min(
      *std::min_element(rec.base_exponents.begin(), rec.base_exponents.end()), fib);
  return rec;
}

EoaCertificate expanding_on_average_certificate(const EquilibriumState& mu,
                                                const MapSystem& map, int l_max) {
  if (l_max < 1) throw Error("expanding_on_average_certificate: l_max must be >= 1");
  EoaCertificate cert;
  for (int l = 1; l <= l_max; ++l) {
    double v = mu.integrate([&map, l](const Pt& p) {
      return l * derivative_min_expansion(map, p, l);
    });
    cert.values.push_back(v);
    if (v > 0.0) {
      cert.certified = true;
      cert.l = l;
      cert.value = v;
      return cert;
    }
  }
  cert.certified = false;
  return cert;
}

// ---------------------------------------------------------------------------
// skew_boundary_analysis
// ---------------------------------------------------------------------------
SkewReport skew_boundary_analysis(const SkewProduct& map, const Potential& phi,
                                  std::span<const double> t_grid, SchemeKind scheme,
                                  GridSpec grid, const SweepOptions& opts) {
  if (map.skew_class() == SkewClass::TM1 && map.fiber().x_dependent)
    throw Error("skew_boundary_analysis: needs constant fiber breakpoints (TM2/TM3)");
  const int bdim = map.base_dim();
  if (bdim != 1)
    throw Error("skew_boundary_analysis: implemented for 1D bases");
  const auto& base_cm = std::get<CircleMap>(map.base());

  SkewReport rep;
  rep.t.assign(t_grid.begin(), t_grid.end());
  rep.tol = scheme_tolerance(scheme, grid);

  // full-system curve
  MapSystem full = map;
  PressureCurve curve = pressure_sweep(full, phi, t_grid, scheme, grid, opts);
  rep.P_full = curve.P;
  rep.converged = curve.converged;

  // boundary systems along constant fiber breakpoints: base map with x -> phi(x, alpha_j)
  rep.fiber_breakpoints = map.fiber_breakpoints(0.0);
  const int base_n = grid.axes.front();
  for (double alpha : rep.fiber_breakpoints) {
    Potential restricted(
        [phi, alpha](const Pt& p) { return phi(Pt::of(p[0], alpha)); }, phi.regularity,
        phi.sup_norm_bound, phi.modulus_constant, phi.label + "@y=" + std::to_string(alpha));
    MapSystem bm = base_cm;
    SweepOptions sub = opts;
    sub.with_gap = false;
    PressureCurve bc = pressure_sweep(bm, restricted, t_grid, scheme,
                                      GridSpec{{base_n}}, sub);
    rep.fiber_boundary_P.push_back(bc.P);
  }

  // boundary fiber systems at base breakpoints: f_{x_i} with y -> phi(x_i, y).
  // TM2/TM3 fibers are x-independent, so f_{x_i} is the prototype itself.
  rep.base_breakpoints = map.base_breakpoints();
  const int fiber_n = grid.axes.back();
  for (double xi : rep.base_breakpoints) {
    Potential restricted(
        [phi, xi](const Pt& p) { return phi(Pt::of(xi, p[0])); }, phi.regularity,
        phi.sup_norm_bound, phi.modulus_constant, phi.label + "@x=" + std::to_string(xi));
    MapSystem fm = *map.fiber().prototype;
    SweepOptions sub = opts;
    sub.with_gap = false;
    PressureCurve fc = pressure_sweep(fm, restricted, t_grid, scheme,
                                      GridSpec{{fiber_n}}, sub);
    rep.base_boundary_P.push_back(fc.P);
  }

  // labels and margins
  const std::size_t n = rep.t.size();
  rep.label.assign(n, "interior");
  rep.margin.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double best = -1e300;
    std::string best_label = "interior";
    for (std::size_t j = 0; j < rep.fiber_boundary_P.size(); ++j) {
      double v = rep.fiber_boundary_P[j][k];
      if (v > best) {
        best = v;
        best_label = "fiber_boundary(" + std::to_string(j) + ")";
      }
    }
    for (std::size_t i = 0; i < rep.base_boundary_P.size(); ++i) {
      double v = rep.base_boundary_P[i][k];
      if (v > best) {
        best = v;
        best_label = "base_boundary(" + std::to_string(i) + ")";
      }
    }
    rep.margin[k] = rep.P_full[k] - best;
    if (rep.margin[k] > 2.0 * rep.tol) {
      rep.label[k] = "interior";
    } else {
      // check for a tie among boundary pressures
      int close = 0;
      for (const auto& row : rep.fiber_boundary_P)
        if (std::fabs(row[k] - best) <= rep.tol) ++close;
      for (const auto& row : rep.base_boundary_P)
        if (std::fabs(row[k] - best) <= rep.tol) ++close;
      rep.label[k] = close > 1 ? "tie" : best_label;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// phase_transition_scan
// ---------------------------------------------------------------------------
namespace {

struct AffineFit {
  double a = 0.0, b = 0.0;  // a + b t
  double operator()(double t) const { return a + b * t; }
};

AffineFit fit_affine(std::span<const double> t, std::span<const double> y) {
  double st = 0, sy = 0, stt = 0, sty = 0;
  const double n = static_cast<double>(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    st += t[i];
    sy += y[i];
    stt += t[i] * t[i];
    sty += t[i] * y[i];
  }
  AffineFit f;
  const double den = n * stt - st * st;
  f.b = den != 0.0 ? (n * sty - st * sy) / den : 0.0;
  f.a = (sy - f.b * st) / n;
  return f;
}

std::vector<Candidate> merge_flags(const std::vector<double>& t,
                                   const std::vector<std::vector<std::string>>& reasons,
                                   double pad) {
  std::vector<Candidate> out;
  std::size_t k = 0;
  const std::size_t n = t.size();
  while (k < n) {
    if (reasons[k].empty()) {
      ++k;
      continue;
    }
    std::size_t j = k;
    std::vector<std::string> rs;
    // allow gaps of up to 2 grid points inside one candidate
    std::size_t last_flag = k;
    while (j < n) {
      if (!reasons[j].empty()) {
        for (const auto& r : reasons[j])
          if (std::find(rs.begin(), rs.end(), r) == rs.end()) rs.push_back(r);
        last_flag = j;
        ++j;
      } else if (j - last_flag <= 2) {
        ++j;
      } else {
        break;
      }
    }
    Candidate c;
    c.lo = t[k] - pad;
    c.hi = t[last_flag] + pad;
    c.reasons = rs;
    out.push_back(c);
    k = j;
  }
  // merge overlapping candidates
  std::vector<Candidate> merged;
  for (auto& c : out) {
    if (!merged.empty() && c.lo <= merged.back().hi) {
      merged.back().hi = std::max(merged.back().hi, c.hi);
      for (const auto& r : c.reasons)
        if (std::find(merged.back().reasons.begin(), merged.back().reasons.end(), r) ==
            merged.back().reasons.end())
          merged.back().reasons.push_back(r);
    } else {
      merged.push_back(c);
    }
  }
  return merged;
}

}  // namespace

ScanResult phase_transition_scan(const std::vector<PressureCurve>& ladder,
                                 const SkewReport* skew) {
  if (ladder.size() < 2)
    throw Error("phase_transition_scan: needs at least 2 refinement levels");
  const std::size_t n = ladder.front().t.size();
  for (const auto& c : ladder)
    if (c.t.size() != n) throw Error("phase_transition_scan: grids differ");
  const auto& top = ladder.back();
  const auto& prev = ladder[ladder.size() - 2];
  const double tol = top.tol;

  // refinement sanity: the two finest levels must agree somewhere
  {
    double best = 1e300;
    for (std::size_t k = 0; k < n; ++k)
      best = std::min(best, std::fabs(top.P[k] - prev.P[k]));
    if (best > 10.0 * tol)
      throw InsufficientRefinement(
          "phase_transition_scan: refinement levels disagree everywhere");
  }

  std::vector<std::vector<std::string>> flags(n);

  // (a) kink: |P2_fd| exceeds 10x its grid median and grows under refinement
  {
    std::vector<double> mags;
    for (std::size_t k = 1; k + 1 < n; ++k)
      if (std::isfinite(top.P2_fd[k])) mags.push_back(std::fabs(top.P2_fd[k]));
    if (!mags.empty()) {
      std::vector<double> sorted = mags;
      std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2),
                       sorted.end());
      const double med = sorted[sorted.size() / 2];
      const double thresh = std::max(10.0 * med, 1e-12);
      for (std::size_t k = 1; k + 1 < n; ++k) {
        if (std::fabs(top.P2_fd[k]) > thresh &&
            std::fabs(top.P2_fd[k]) > 1.5 * std::fabs(prev.P2_fd[k]))
          flags[k].push_back("kink");
      }
    }
  }

  // (b) gap collapse: gap_ratio >= 0.99 at the two finest levels
  for (std::size_t k = 0; k < n; ++k) {
    if (top.gap_ratio[k] >= 0.99 && prev.gap_ratio[k] >= 0.99)
      flags[k].push_back("gap_collapse");
  }

  // (c) freezing: the Richardson-extrapolated curve agrees with max(0, affine
  // tail fit) on the terminal quarter, with the zero clamp active. The raw
  // finite-N curve carries an O(N^-alpha) bias for intermittent maps, so the
  // comparison uses the extrapolated limit rather than the top level itself.
  if (n >= 4) {
    const std::size_t tail_start = n - std::max<std::size_t>(2, n / 4);
    // pointwise empirical contraction ratio from the last three levels
    double ratio = 0.5;
    if (ladder.size() >= 3) {
      const auto& p2 = ladder[ladder.size() - 3];
      std::vector<double> rs;
      for (std::size_t k = tail_start; k < n; ++k) {
        double d1 = prev.P[k] - p2.P[k];
        double d2 = top.P[k] - prev.P[k];
        if (std::fabs(d1) > 1e-12) rs.push_back(d2 / d1);
      }
      if (!rs.empty()) {
        std::nth_element(rs.begin(), rs.begin() + static_cast<long>(rs.size() / 2), rs.end());
        ratio = std::clamp(rs[rs.size() / 2], 0.05, 0.95);
      }
    }
    std::vector<double> ext(n);
    for (std::size_t k = 0; k < n; ++k)
      ext[k] = top.P[k] + (top.P[k] - prev.P[k]) * ratio / (1.0 - ratio);

    std::vector<double> tt(top.t.begin() + static_cast<long>(tail_start), top.t.end());
    std::vector<double> ee(ext.begin() + static_cast<long>(tail_start), ext.end());
    AffineFit fit = fit_affine(tt, ee);
    const double tol_freeze = 10.0 * tol;
    bool tail_matches = true;
    bool clamp_active = false;
    for (std::size_t k = tail_start; k < n; ++k) {
      double model = std::max(0.0, fit(top.t[k]));
      if (std::fabs(ext[k] - model) > tol_freeze) tail_matches = false;
      if (fit(top.t[k]) <= tol_freeze) clamp_active = true;
    }
    if (tail_matches && clamp_active) {
      // junction: walk left from the tail while the curve stays frozen
      std::size_t j = tail_start;
      while (j > 0 && std::fabs(ext[j - 1] - std::max(0.0, fit(top.t[j - 1]))) <= tol_freeze)
        --j;
      // flag a window around the junction
      const std::size_t lo = j >= 2 ? j - 2 : 0;
      const std::size_t hi = std::min(n - 1, j + 2);
      for (std::size_t k = lo; k <= hi; ++k) flags[k].push_back("freezing");
    }
  }

  // (d) boundary dominance from a skew report
  if (skew) {
    for (std::size_t k = 0; k < n && k < skew->label.size(); ++k)
      if (skew->label[k] != "interior") flags[k].push_back("boundary_dominance");
  }

  ScanResult res;
  const double pad = n >= 2 ? 0.5 * (top.t[1] - top.t[0]) : 0.0;
  res.candidates = merge_flags(top.t, flags, pad);

  // complement: the numerically-analytic set
  double lo = top.t.front();
  for (const auto& c : res.candidates) {
    if (c.lo > lo) res.analytic_intervals.emplace_back(lo, c.lo);
    lo = std::max(lo, c.hi);
  }
  if (lo < top.t.back()) res.analytic_intervals.emplace_back(lo, top.t.back());
  return res;
}

// ---------------------------------------------------------------------------
// mme_preimage_measure and gap_onset_scan
// ---------------------------------------------------------------------------
EquilibriumState mme_preimage_measure(const MapSystem& map, const Pt& x0, int n,
                                      std::size_t budget) {
  Potential zero = constant_potential(0.0, dimension(map));
  PreimageTree tree = preimage_tree(map, zero, x0, n, budget);
  EquilibriumState st;
  st.scheme = SchemeKind::Ulam;
  st.grid = GridSpec{{1}};
  st.sites = tree.leaves;
  st.weights.assign(tree.leaves.size(), 1.0 / static_cast<double>(tree.leaves.size()));
  return st;
}

GapScanResult gap_onset_scan(const MapSystem& map, const Potential& phi,
                             GapScanDirection direction, SchemeKind scheme,
                             GridSpec grid, double t_max, const SweepOptions& opts) {
  constexpr double kCollapse = 0.99;
  GapScanResult res;
  OperatorFamily family(map, phi, scheme, grid, opts.quad_order, opts.workers);

  auto gap_batch = [&](const std::vector<double>& ts) {
    std::vector<std::pair<double, char>> out(ts.size());
    parallel_for(ts.size(), opts.workers, [&](std::size_t k) {
      DiscretizedOperator op = family.at(ts[k]);
      SpectralReport rep = leading_eigentriple(op, opts.eig);
      subleading_modulus(op, rep, opts.eig);
      out[k] = {rep.gap_ratio, static_cast<char>((rep.converged && rep.gap_converged) ? 1 : 0)};
    });
    for (std::size_t k = 0; k < ts.size(); ++k) {
      res.t.push_back(ts[k]);
      res.gap.push_back(out[k].first);
      res.converged.push_back(out[k].second);
    }
    return out;
  };

  std::vector<double> ts;
  if (direction == GapScanDirection::LowTemp) {
    for (double m = t_max; m >= 0.499; m *= 0.5) ts.push_back(-m);
    std::sort(ts.begin(), ts.end());
    std::size_t neg = ts.size();
    for (std::size_t i = 0; i < neg; ++i) ts.push_back(-ts[neg - 1 - i]);
  } else {
    ts = linspace(-t_max, t_max, 17);
  }
  gap_batch(ts);

  auto magnitude_ok = [&](double m, bool outer) {
    // outer: all scanned |t| >= m have a gap; inner: all |t| <= m do
    for (std::size_t k = 0; k < res.t.size(); ++k) {
      const double a = std::fabs(res.t[k]);
      if (outer ? (a >= m - 1e-12) : (a <= m + 1e-12))
        if (!(res.gap[k] < kCollapse)) return false;
    }
    return true;
  };
  auto gap_at_magnitude = [&](double m) {
    auto pair = gap_batch({-m, m});
    return std::max(pair[0].first, pair[1].first);
  };

  std::vector<double> mags;
  for (double t : ts)
    if (std::fabs(t) > 1e-12) mags.push_back(std::fabs(t));
  std::sort(mags.begin(), mags.end());
  mags.erase(std::unique(mags.begin(), mags.end()), mags.end());

  if (direction == GapScanDirection::LowTemp) {
    // smallest magnitude M with gap < 0.99 for all scanned |t| >= M, then
    // bisect between the first failing magnitude below M and M itself
    std::optional<double> thr;
    double below = 0.0;
    for (std::size_t i = mags.size(); i-- > 0;) {
      if (magnitude_ok(mags[i], true))
        thr = mags[i];
      else {
        below = mags[i];
        break;
      }
    }
    if (thr && below > 0.0) {
      double lo = below, hi = *thr;
      for (int round = 0; round < 4; ++round) {
        double mid = 0.5 * (lo + hi);
        if (gap_at_magnitude(mid) < kCollapse)
          hi = mid;
        else
          lo = mid;
      }
      thr = hi;
    }
    res.threshold = thr;
  } else {
    // largest t1 with gap < 0.99 on [-t1, t1], bisected toward the first
    // failing magnitude above it
    std::optional<double> thr;
    double above = 0.0;
    for (double m : mags) {
      if (magnitude_ok(m, false))
        thr = m;
      else {
        above = m;
        break;
      }
    }
    if (thr && above > 0.0) {
      double lo = *thr, hi = above;
      for (int round = 0; round < 4; ++round) {
        double mid = 0.5 * (lo + hi);
        if (gap_at_magnitude(mid) < kCollapse)
          lo = mid;
        else
          hi = mid;
      }
      thr = lo;
    }
    res.threshold = thr;
  }
  return res;
}

}  // namespace gibbs
