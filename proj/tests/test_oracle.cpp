#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gibbs/dynamics.hpp"
#include "gibbs/oracle.hpp"
#include "gibbs/potentials.hpp"
#include "gibbs/transfer_operator.hpp"

using namespace gibbs;

TEST_CASE("preimage sums: exact cases") {
  MapSystem d = make_doubling();
  Potential zero = constant_potential(0.0, 1);
  CHECK(pressure_preimage_sum(d, zero, Pt::of(0.31), 12) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-14));

  Potential c = constant_potential(0.55, 1);
  CHECK(pressure_preimage_sum(d, c, Pt::of(0.31), 12) ==
        doctest::Approx(std::log(2.0) + 0.55).epsilon(1e-13));

  // PL(2,3), phi = -2 log|T'|: exact since the weight is constant per branch
  MapSystem pl = make_piecewise_linear({2.0, 3.0});
  Potential g = geometric_potential(pl);
  Potential g2([&g](const Pt& p) { return 2.0 * g(p); }, g.regularity,
               2 * g.sup_norm_bound, 0.0, "2 geometric");
  CHECK(pressure_preimage_sum(pl, g2, Pt::of(0.77), 14) ==
        doctest::Approx(std::log(13.0 / 36.0)).epsilon(1e-9));

  CHECK_THROWS_AS(pressure_preimage_sum(d, zero, Pt::of(0.0), 40), BudgetExceeded);
}

TEST_CASE("preimage sums work on torus and skew maps") {
  MapSystem te = TorusEndomorphism({{3, 1}, {1, 2}});
  Potential zero = constant_potential(0.0, 2);
  CHECK(pressure_preimage_sum(te, zero, Pt::of(0.2, 0.7), 6) ==
        doctest::Approx(std::log(5.0)).epsilon(1e-13));

  FiberFamily fam;
  fam.prototype = std::make_shared<const CircleMap>(make_manneville_pomeau(0.5));
  MapSystem sk = SkewProduct(make_doubling(), fam, SkewClass::TM2);
  CHECK(pressure_preimage_sum(sk, zero, Pt::of(0.2, 0.7), 8) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("periodic points and periodic sums") {
  CircleMap d = make_doubling();
  // doubling has 2^n - 1 fixed points of T^n
  for (int n : {4, 8, 10}) {
    auto pts = periodic_points(d, n);
    CHECK(static_cast<long>(pts.size()) == (1L << n) - 1);
    for (double x : pts) {
      double y = x;
      for (int k = 0; k < n; ++k) y = d.eval(y);
      CHECK(circle_dist(y, x) < 1e-10);
    }
  }

  MapSystem dm = d;
  Potential zero = constant_potential(0.0, 1);
  CHECK(pressure_periodic_sum(dm, zero, 10) ==
        doctest::Approx(std::log(std::pow(2.0, 10) - 1.0) / 10.0).epsilon(1e-13));
  Potential c = constant_potential(-0.21, 1);
  CHECK(pressure_periodic_sum(dm, c, 10) ==
        doctest::Approx(std::log(std::pow(2.0, 10) - 1.0) / 10.0 - 0.21).epsilon(1e-13));

  MapSystem pl = make_piecewise_linear({2.0, 3.0});
  Potential g = geometric_potential(pl);
  CHECK(std::fabs(pressure_periodic_sum(pl, g, 12) - std::log(5.0 / 6.0)) < 1e-3);

  MapSystem mp = make_manneville_pomeau(0.5);
  CHECK_THROWS_AS(pressure_periodic_sum(mp, zero, 6), NotExpanding);
}

TEST_CASE("closed-form piecewise-linear pressure") {
  std::vector<double> s22{2.0, 2.0};
  CHECK(closed_form_pressure_pl(s22, 1.0) == doctest::Approx(0.0).epsilon(1e-15));
  std::vector<double> s23{2.0, 3.0};
  CHECK(closed_form_pressure_pl(s23, 0.0) == doctest::Approx(std::log(2.0)));
  CHECK(closed_form_pressure_pl(s23, 2.0) == doctest::Approx(std::log(13.0 / 36.0)));
}

TEST_CASE("dense spectrum oracle at N=17") {
  MapSystem d = make_doubling();
  Potential zero = constant_potential(0.0, 1);
  auto op = build(d, zero, SchemeKind::Collocation, GridSpec{{17}});
  DenseSpectrum sp = dense_spectrum_oracle(op);
  CHECK(sp.eigenvalues.size() == 17);
  CHECK(std::fabs(sp.modulus(0) - 2.0) < 1e-10);
  CHECK(sp.modulus(1) < 0.05);  // lambda1 is simple; the rest is nilpotent noise

  // phi == c scales every eigenvalue by e^c
  Potential c = constant_potential(0.8, 1);
  auto opc = build(d, c, SchemeKind::Collocation, GridSpec{{17}});
  DenseSpectrum spc = dense_spectrum_oracle(opc);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(spc.modulus(i) == doctest::Approx(sp.modulus(i) * std::exp(0.8)).epsilon(1e-8));
}

TEST_CASE("dense oracle validates the iterative pair") {
  MapSystem mp = make_manneville_pomeau(0.5);
  Potential g = geometric_potential(mp);
  auto op = build(mp, g, SchemeKind::Ulam, GridSpec{{64}});
  SpectralReport rep = leading_eigentriple(op);
  subleading_modulus(op, rep);
  REQUIRE(rep.converged);
  DenseSpectrum sp = dense_spectrum_oracle(op);
  CHECK(std::fabs(sp.modulus(0) - rep.lambda1) < 1e-8);
  CHECK(std::fabs(sp.modulus(1) - rep.lambda2_modulus) < 1e-8);
}

TEST_CASE("oracle agreement with the operator pipeline") {
  // smooth weight on an expanding map: preimage sums approach the collocation
  // pressure like C/n with a decreasing trend
  MapSystem d = make_doubling();
  Potential cosx = trig_potential({TrigTerm{{1}, 1.0, 0.0}}, 1);
  auto rep = leading_eigentriple(build(d, cosx, SchemeKind::Collocation, GridSpec{{64}}));
  REQUIRE(rep.converged);
  const double P = rep.log_lambda1;

  double prev_err = 1e300;
  for (int n : {8, 10, 12, 14, 16, 18}) {
    double err = std::fabs(pressure_preimage_sum(d, cosx, Pt::of(0.125), n) - P);
    CHECK(err <= 2.0 / n + 1e-6);
    CHECK(err < prev_err + 1e-9);
    prev_err = err;
  }

  // base-point independence: variation over x0 within the finite-n bound
  for (int n : {10, 14}) {
    double lo = 1e300, hi = -1e300;
    for (double x0 : {0.1, 0.31, 0.52, 0.73, 0.94}) {
      double v = pressure_preimage_sum(d, cosx, Pt::of(x0), n);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    CHECK(hi - lo <= 2.0 * 2.0 / n);  // 2 (sup - inf) / n with sup-inf = 2
  }

  // periodic vs preimage sums agree at n = 14
  double per = pressure_periodic_sum(d, cosx, 14);
  double pre = pressure_preimage_sum(d, cosx, Pt::of(0.125), 14);
  CHECK(std::fabs(per - pre) < 1e-3);
}
