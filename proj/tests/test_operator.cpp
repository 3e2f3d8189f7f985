#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "gibbs/dynamics.hpp"
#include "gibbs/oracle.hpp"
#include "gibbs/potentials.hpp"
#include "gibbs/transfer_operator.hpp"

using namespace gibbs;

namespace {

std::vector<double> apply_to_ones(const DiscretizedOperator& op) {
  std::vector<double> one(static_cast<std::size_t>(op.size()), 1.0);
  std::vector<double> out(one.size());
  op.apply(one, out);
  for (auto& v : out) v *= std::exp(op.shift());
  return out;
}

}  // namespace

TEST_CASE("ulam apply on constants matches the degree") {
  MapSystem d = make_doubling();
  Potential zero = constant_potential(0.0, 1);
  auto op = build(d, zero, SchemeKind::Ulam, GridSpec{{16}});
  for (double v : apply_to_ones(op)) CHECK(v == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(op.nonneg_certificate());
  CHECK(op.min_entry() >= 0.0);

  Potential c = constant_potential(0.9, 1);
  auto opc = build(d, c, SchemeKind::Collocation, GridSpec{{16}});
  for (double v : apply_to_ones(opc))
    CHECK(v == doctest::Approx(2.0 * std::exp(0.9)).epsilon(1e-13));
}

TEST_CASE("ulam mass conservation for piecewise-linear maps") {
  // columns of the adjoint sum to the degree (= apply of the constant one)
  Potential zero = constant_potential(0.0, 1);
  for (int n : {16, 48}) {
    MapSystem pl = make_piecewise_linear({2.0, 3.0});
    auto op = build(pl, zero, SchemeKind::Ulam, GridSpec{{n}});
    for (double v : apply_to_ones(op)) CHECK(v == doctest::Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("collocation apply on the PL family is exact") {
  MapSystem pl = make_piecewise_linear({2.0, 3.0});
  Potential g = geometric_potential(pl);
  auto op = build(pl, g, SchemeKind::Collocation, GridSpec{{32}});
  for (double v : apply_to_ones(op))
    CHECK(v == doctest::Approx(5.0 / 6.0).epsilon(1e-13));
}

TEST_CASE("leading eigentriple: doubling") {
  MapSystem d = make_doubling();
  Potential zero = constant_potential(0.0, 1);
  auto op = build(d, zero, SchemeKind::Collocation, GridSpec{{32}});
  SpectralReport rep = leading_eigentriple(op);
  REQUIRE(rep.converged);
  CHECK(std::fabs(rep.lambda1 - 2.0) < 1e-12);
  CHECK(rep.residual_right <= 1e-10);
  CHECK(rep.residual_left <= 1e-10);
  // h constant, nu uniform
  double hmin = 1e300, hmax = -1e300, numin = 1e300, numax = -1e300;
  for (double v : rep.h) {
    hmin = std::min(hmin, v);
    hmax = std::max(hmax, v);
  }
  for (double v : rep.nu) {
    numin = std::min(numin, v);
    numax = std::max(numax, v);
  }
  CHECK(hmax - hmin < 1e-10);
  CHECK(numax - numin < 1e-12);
  CHECK(hmin > 0.0);
  // normalizations
  double mass = 0.0, pairing = 0.0;
  for (std::size_t i = 0; i < rep.nu.size(); ++i) {
    mass += rep.nu[i];
    pairing += rep.h[i] * rep.nu[i];
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pairing == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("leading eigentriple: PL closed form") {
  MapSystem pl = make_piecewise_linear({2.0, 3.0});
  Potential g = geometric_potential(pl);
  auto op = build(pl, g, SchemeKind::Collocation, GridSpec{{32}});
  SpectralReport rep = leading_eigentriple(op);
  REQUIRE(rep.converged);
  CHECK(std::fabs(rep.lambda1 - 5.0 / 6.0) < 1e-10);
}

TEST_CASE("leading eigentriple: MP freezing point t=1") {
  // lambda1 approaches 1 (the quadrature floor on the sqrt-singular neutral
  // cell caps the accuracy at ~1e-4 independent of N)
  MapSystem mp = make_manneville_pomeau(0.5);
  Potential g = geometric_potential(mp);
  for (int n : {256, 1024, 4096}) {
    auto op = build(mp, g, SchemeKind::Ulam, GridSpec{{n}});
    SpectralReport rep = leading_eigentriple(op);
    REQUIRE(rep.converged);
    CHECK(std::fabs(rep.lambda1 - 1.0) < 2e-4);
  }
}

TEST_CASE("not-converged reports carry the flag and pressure throws") {
  MapSystem mp = make_manneville_pomeau(0.5);
  Potential g = geometric_potential(mp);
  auto op = build(mp, g, SchemeKind::Ulam, GridSpec{{256}});
  EigOptions opts;
  opts.max_iter = 3;
  SpectralReport rep = leading_eigentriple(op, opts);
  CHECK_FALSE(rep.converged);
  CHECK_THROWS_AS(pressure(rep), NotConverged);
}

TEST_CASE("subleading modulus against the dense oracle") {
  // isolated real subleading eigenvalue: doubling with a cosine weight
  MapSystem d = make_doubling();
  Potential cosx = trig_potential({TrigTerm{{1}, 1.0, 0.0}}, 1);
  auto op = build(d, cosx, SchemeKind::Collocation, GridSpec{{32}});
  SpectralReport rep = leading_eigentriple(op);
  REQUIRE(rep.converged);
  subleading_modulus(op, rep);
  DenseSpectrum sp = dense_spectrum_oracle(op);
  CHECK(std::fabs(sp.modulus(0) - rep.lambda1) < 1e-8);
  CHECK(std::fabs(sp.modulus(1) - rep.lambda2_modulus) < 1e-8);
  CHECK(rep.gap_ratio > 0.0);
  CHECK(rep.gap_ratio < 1.0 + 1e-6);

  // complex subleading pair: PL(2,3) with the geometric weight
  MapSystem pl = make_piecewise_linear({2.0, 3.0});
  Potential g = geometric_potential(pl);
  auto op2 = build(pl, g, SchemeKind::Collocation, GridSpec{{32}});
  SpectralReport rep2 = leading_eigentriple(op2);
  subleading_modulus(op2, rep2);
  DenseSpectrum sp2 = dense_spectrum_oracle(op2);
  CHECK(std::fabs(sp2.modulus(0) - rep2.lambda1) < 1e-8);
  CHECK(std::fabs(sp2.modulus(1) - rep2.lambda2_modulus) < 1e-8);
}

TEST_CASE("doubling with zero weight is spectrally degenerate below lambda1") {
  // On trig polynomials L maps e_k to 2 e_{k/2} (even k) or 0, so the
  // discretized spectrum is {2} plus a numerically-nilpotent cluster; both
  // estimators must stay well below any spurious gap.
  MapSystem d = make_doubling();
  Potential zero = constant_potential(0.0, 1);
  auto op = build(d, zero, SchemeKind::Collocation, GridSpec{{32}});
  SpectralReport rep = leading_eigentriple(op);
  subleading_modulus(op, rep);
  DenseSpectrum sp = dense_spectrum_oracle(op);
  CHECK(std::fabs(sp.modulus(0) - 2.0) < 1e-10);
  CHECK(sp.modulus(1) < 0.05);           // numerical noise of the nilpotent block
  CHECK(rep.lambda2_modulus < 0.05);
  CHECK(rep.gap_ratio < 0.05);
}

TEST_CASE("scalar potential shifts scale the spectrum exactly") {
  MapSystem d = make_doubling();
  Potential zero = constant_potential(0.0, 1);
  Potential c = constant_potential(1.3, 1);
  auto op0 = build(d, zero, SchemeKind::Collocation, GridSpec{{32}});
  auto opc = build(d, c, SchemeKind::Collocation, GridSpec{{32}});
  SpectralReport r0 = leading_eigentriple(op0);
  SpectralReport rc = leading_eigentriple(opc);
  subleading_modulus(op0, r0);
  subleading_modulus(opc, rc);
  CHECK(std::fabs(rc.lambda1 / r0.lambda1 - std::exp(1.3)) < 1e-12 * std::exp(1.3));
  CHECK(rc.gap_ratio == r0.gap_ratio);  // bitwise: identical shifted weights
  for (std::size_t i = 0; i < r0.h.size(); ++i) {
    CHECK(std::fabs(rc.h[i] - r0.h[i]) < 1e-12);
    CHECK(std::fabs(rc.nu[i] - r0.nu[i]) < 1e-12);
  }
}

TEST_CASE("MP gap ratio increases under refinement at t=1") {
  MapSystem mp = make_manneville_pomeau(0.5);
  Potential g = geometric_potential(mp);
  double prev = 0.0;
  for (int n : {256, 1024, 4096}) {
    auto op = build(mp, g, SchemeKind::Ulam, GridSpec{{n}});
    SpectralReport rep = leading_eigentriple(op);
    subleading_modulus(op, rep);
    CHECK(rep.gap_ratio > prev);
    prev = rep.gap_ratio;
  }
  CHECK(prev > 0.95);
}

TEST_CASE("pressure values") {
  MapSystem d = make_doubling();
  Potential zero = constant_potential(0.0, 1);
  auto rep = leading_eigentriple(build(d, zero, SchemeKind::Collocation, GridSpec{{32}}));
  CHECK(std::fabs(pressure(rep) - std::log(2.0)) < 1e-12);

  Potential c = constant_potential(-0.4, 1);
  auto repc = leading_eigentriple(build(d, c, SchemeKind::Collocation, GridSpec{{32}}));
  CHECK(std::fabs(pressure(repc) - (std::log(2.0) - 0.4)) < 1e-12);

  // PL(2,3) with -2 log|T'|: log(1/4 + 1/9)
  MapSystem pl = make_piecewise_linear({2.0, 3.0});
  Potential g = geometric_potential(pl);
  Potential g2([&g](const Pt& p) { return 2.0 * g(p); }, g.regularity,
               2 * g.sup_norm_bound, 2 * g.modulus_constant, "2 geometric");
  auto rep2 = leading_eigentriple(build(pl, g2, SchemeKind::Collocation, GridSpec{{32}}));
  CHECK(std::fabs(pressure(rep2) - std::log(13.0 / 36.0)) < 1e-12);
}

TEST_CASE("positivity of the ulam scheme") {
  MapSystem mp = make_manneville_pomeau(0.5);
  Potential cosx = trig_potential({TrigTerm{{1}, 0.8, 0.3}}, 1);
  auto op = build(mp, cosx, SchemeKind::Ulam, GridSpec{{128}});
  CHECK(op.min_entry() >= 0.0);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<double> in(static_cast<std::size_t>(op.size())), out(in.size());
  for (int trial = 0; trial < 20; ++trial) {
    for (auto& v : in) v = uni(rng);
    op.apply(in, out);
    for (double v : out) CHECK(v >= -1e-14);
    op.apply_transpose(in, out);
    for (double v : out) CHECK(v >= -1e-14);
  }
}

TEST_CASE("duality of apply and apply_transpose") {
  MapSystem mp = make_manneville_pomeau(0.5);
  Potential cosx = trig_potential({TrigTerm{{1}, 0.8, 0.3}}, 1);
  for (SchemeKind scheme : {SchemeKind::Ulam, SchemeKind::Collocation}) {
    auto op = build(mp, cosx, scheme, GridSpec{{64}});
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<double> u(static_cast<std::size_t>(op.size())), v(u.size()), au(u.size()),
        atv(u.size());
    for (int trial = 0; trial < 10; ++trial) {
      for (auto& x : u) x = uni(rng);
      for (auto& x : v) x = uni(rng);
      op.apply(u, au);
      op.apply_transpose(v, atv);
      double a = 0.0, b = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) {
        a += au[i] * v[i];
        b += u[i] * atv[i];
      }
      CHECK(std::fabs(a - b) <= 1e-12 * std::max(1.0, std::fabs(a)));
    }
  }
}

TEST_CASE("scheme agreement on analytic data") {
  MapSystem pd = make_perturbed_doubling(0.4);
  Potential cosx = trig_potential({TrigTerm{{1}, 1.0, 0.0}}, 1);
  auto repU = leading_eigentriple(build(pd, cosx, SchemeKind::Ulam, GridSpec{{4096}}));
  auto repC = leading_eigentriple(build(pd, cosx, SchemeKind::Collocation, GridSpec{{64}}));
  CHECK(std::fabs(repU.log_lambda1 - repC.log_lambda1) < 1e-3);
}

TEST_CASE("refinement stability of ulam pressure") {
  MapSystem pd = make_perturbed_doubling(0.4);
  Potential cosx = trig_potential({TrigTerm{{1}, 1.0, 0.0}}, 1);
  std::vector<double> ps;
  for (int n : {256, 512, 1024, 2048, 4096})
    ps.push_back(
        leading_eigentriple(build(pd, cosx, SchemeKind::Ulam, GridSpec{{n}})).log_lambda1);
  std::vector<double> diffs;
  for (std::size_t i = 1; i < ps.size(); ++i) diffs.push_back(std::fabs(ps[i] - ps[i - 1]));
  CHECK(diffs.back() < diffs.front());
  for (double dd : diffs) CHECK(dd < 1e-4);
}

TEST_CASE("torus operator") {
  MapSystem te = TorusEndomorphism({{3, 1}, {1, 2}});
  Potential zero = constant_potential(0.0, 2);
  auto rep = leading_eigentriple(build(te, zero, SchemeKind::Ulam, GridSpec{{24, 24}}, 4));
  REQUIRE(rep.converged);
  CHECK(std::fabs(rep.lambda1 - 5.0) < 1e-12);
}

TEST_CASE("collocation node validation") {
  MapSystem d = make_doubling();
  Potential zero = constant_potential(0.0, 1);
  CHECK_THROWS_AS(build(d, zero, SchemeKind::Collocation, GridSpec{{1}}), SingularBasis);
  CHECK_THROWS_AS(build(d, zero, SchemeKind::Ulam, GridSpec{{4}}), Error);
}

TEST_CASE("grid spec indexing round trip") {
  GridSpec grid{{12, 7, 5}};
  CHECK(grid.total() == 420);
  CHECK(grid.min_axis() == 5);
  for (long idx : {0L, 1L, 59L, 200L, 419L}) {
    Pt p = grid.site(idx, SchemeKind::Ulam);
    CHECK(grid.cell_of(p) == idx);
  }
}

TEST_CASE("operator family reweights exactly like a fresh build") {
  MapSystem mp = make_manneville_pomeau(0.5);
  Potential g = geometric_potential(mp);
  OperatorFamily family(mp, g, SchemeKind::Ulam, GridSpec{{128}});
  const double t = 0.7;
  auto from_family = leading_eigentriple(family.at(t));
  Potential tg([&g, t](const Pt& p) { return t * g(p); }, g.regularity,
               t * g.sup_norm_bound, t * g.modulus_constant, "t geometric");
  auto fresh = leading_eigentriple(build(mp, tg, SchemeKind::Ulam, GridSpec{{128}}));
  CHECK(from_family.log_lambda1 == doctest::Approx(fresh.log_lambda1).epsilon(1e-14));
}
