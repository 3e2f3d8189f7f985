#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gibbs/dynamics.hpp"
#include "gibbs/potentials.hpp"
#include "gibbs/transfer_operator.hpp"

namespace gibbs {

struct SweepOptions {
  EigOptions eig;
  int quad_order = 8;
  int workers = 1;
  bool with_gap = true;  // run the subleading iteration per t
};

struct Candidate {
  double lo = 0.0, hi = 0.0;
  std::vector<std::string> reasons;  // kink | gap_collapse | freezing | boundary_dominance
};

struct PressureCurve {
  std::vector<double> t;
  std::vector<double> P;
  std::vector<double> P_fd;   // centered differences (one-sided at ends)
  std::vector<double> P_mu;   // integral of phi against the equilibrium state
  std::vector<double> P2_fd;  // second differences (NaN at ends)
  std::vector<double> gap_ratio;
  std::vector<char> converged;
  std::vector<std::string> label;  // dominance labels (skew analysis only)
  std::vector<double> margin;      // NaN outside skew analysis
  SchemeKind scheme = SchemeKind::Ulam;
  std::vector<int> axes;
  double phi_sup = 0.0;
  double tol = 0.0;  // scheme tolerance
  // attached invariant checks
  bool lipschitz_ok = true;
  bool convexity_ok = true;
  std::optional<double> p0_error;  // |P(0) - log degree| when 0 is on the grid
  std::vector<Candidate> transition_candidates;
};

PressureCurve pressure_sweep(const MapSystem& map, const Potential& phi,
                             std::span<const double> t_grid, SchemeKind scheme,
                             GridSpec grid, const SweepOptions& opts = {});

std::vector<double> linspace(double lo, double hi, int n);

// ---------------------------------------------------------------------------
struct EquilibriumState {
  std::vector<Pt> sites;
  std::vector<double> weights;  // nonnegative, sum 1
  SchemeKind scheme = SchemeKind::Ulam;
  GridSpec grid;
  double gap_ratio = 0.0;

  double integrate(const std::function<double(const Pt&)>& g) const;
  double integrate(const Potential& g) const;
  // max over trig observables of degree <= max_deg of the invariance defect
  // |int g(f(x)) dmu - int g dmu|, together with the scheme error bound.
  std::pair<double, double> invariance_defect(const MapSystem& map, int max_deg) const;
};

EquilibriumState equilibrium_state(const MapSystem& map, const Potential& phi,
                                   SchemeKind scheme, GridSpec grid,
                                   const SweepOptions& opts = {});
EquilibriumState equilibrium_from_report(const SpectralReport& rep);

double entropy_via_legendre(const PressureCurve& curve, double t);

// ---------------------------------------------------------------------------
struct ExponentRecord {
  std::vector<double> base_exponents;  // circle base: one entry; torus: per |eig|
  std::optional<double> fiber_exponent;
  double lambda_min = 0.0;
};

ExponentRecord lyapunov_exponents(const EquilibriumState& mu, const MapSystem& map);

struct EoaCertificate {
  bool certified = false;
  int l = 0;
  double value = 0.0;
  std::vector<double> values;  // integral per tried l (1..l_max)
};

EoaCertificate expanding_on_average_certificate(const EquilibriumState& mu,
                                                const MapSystem& map, int l_max);

// ---------------------------------------------------------------------------
struct SkewReport {
  std::vector<double> t;
  std::vector<double> P_full;
  std::vector<char> converged;
  // pressures of the base map with potential phi(., alpha_j), one row per
  // constant fiber breakpoint
  std::vector<double> fiber_breakpoints;
  std::vector<std::vector<double>> fiber_boundary_P;
  // pressures of the boundary fiber maps f_{x_i} with phi(x_i, .)
  std::vector<double> base_breakpoints;
  std::vector<std::vector<double>> base_boundary_P;
  std::vector<std::string> label;  // interior | fiber_boundary(j) | base_boundary(i) | tie
  std::vector<double> margin;      // P_full - max(boundary pressures)
  double tol = 0.0;
};

SkewReport skew_boundary_analysis(const SkewProduct& map, const Potential& phi,
                                  std::span<const double> t_grid, SchemeKind scheme,
                                  GridSpec grid, const SweepOptions& opts = {});

// ---------------------------------------------------------------------------
struct ScanResult {
  std::vector<Candidate> candidates;
  std::vector<std::pair<double, double>> analytic_intervals;  // complement
};

// Flags transition candidates from a refinement ladder of curves on a common
// t-grid (increasing resolution). Reason codes: kink, gap_collapse, freezing,
// boundary_dominance (the latter only when a SkewReport is supplied).
ScanResult phase_transition_scan(const std::vector<PressureCurve>& ladder,
                                 const SkewReport* skew = nullptr);

// ---------------------------------------------------------------------------
EquilibriumState mme_preimage_measure(const MapSystem& map, const Pt& x0, int n,
                                      std::size_t budget = kDefaultNodeBudget);

enum class GapScanDirection { LowTemp, HighTemp };

struct GapScanResult {
  std::vector<double> t;
  std::vector<double> gap;
  std::vector<char> converged;
  std::optional<double> threshold;  // low_temp: smallest |t| past which the gap
                                    // persists; high_temp: largest symmetric t1
};

GapScanResult gap_onset_scan(const MapSystem& map, const Potential& phi,
                             GapScanDirection direction, SchemeKind scheme,
                             GridSpec grid, double t_max = 8.0,
                             const SweepOptions& opts = {});

}  // namespace gibbs
