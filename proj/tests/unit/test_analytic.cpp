#include <doctest.h>

#include "kst/analytic_generators.hpp"
#include "kst/errors.hpp"
#include "kst/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace kst;

TEST_SUITE("bessel") {

TEST_CASE("trivial values") {
  CHECK(bessel_ratio(0, 0.7) == 1.0);
  CHECK(bessel_ratio(0, 0.0) == 1.0);
  CHECK(bessel_ratio(3, 0.0) == 0.0);
  CHECK(bessel_ratio(-2, 0.5) == bessel_ratio(2, 0.5));
}

TEST_CASE("matches the power-series oracle") {
  CHECK(bessel_ratio(1, 0.5) == doctest::Approx(testing::bessel_ratio_series(1, 0.5)).epsilon(1e-13));
  for (Index n = 0; n <= 12; ++n)
    for (double kappa : {0.1, 0.5, 1.0, 2.0}) {
      CHECK(bessel_ratio(n, kappa) ==
            doctest::Approx(testing::bessel_ratio_series(n, kappa)).epsilon(1e-12));
      CHECK(bessel_ratio(n, kappa) >= 0.0);
      CHECK(bessel_ratio(n, kappa) <= 1.0);
    }
}

TEST_CASE("range guard") {
  CHECK_THROWS_WITH_AS(bessel_ratio(1, 701.0), doctest::Contains("range-error"), Error);
  CHECK_THROWS_WITH_AS(bessel_ratio(1, -1.0), doctest::Contains("invalid-input"), Error);
  CHECK(bessel_ratio(5, 650.0) > 0.9);  // large-argument ratios stay stable
}

}  // TEST_SUITE

TEST_SUITE("analytic-generators") {

TEST_CASE("moving entries vanish with the vortex") {
  VortexParams p;
  p.kappa = 1e-8;
  const Complex v = moving_vortex_entry({0, 1, 0}, {-1, 2, 1}, p);
  CHECK(std::abs(v) < 1e-7);
}

TEST_CASE("columns with m = n = 0 carry no advection") {
  VortexParams p;
  const Complex v = moving_vortex_entry({0, 1, 0}, {1, 0, 0}, p);
  CHECK(std::abs(v) == 0.0);
}

TEST_CASE("moving selection rule") {
  VortexParams p;
  CHECK(std::abs(moving_vortex_entry({0, 1, 0}, {0, 2, 1}, p)) == 0.0);  // i+j != l+m
  CHECK(std::abs(moving_vortex_entry({0, 1, 0}, {-1, 2, 1}, p)) > 0.0);
}

TEST_CASE("moving entry matches 64^3 trapezoid quadrature") {
  VortexParams p;  // omega = 1, kappa = 0.5
  const MultiIndex row{0, 1, 0}, col{0, 1, 1};
  const Complex lib = moving_vortex_entry(row, col, p);
  const Complex ora = testing::oracle_spatial_entry(row, col, p);
  CHECK(std::abs(lib - ora) < 1e-8);
}

TEST_CASE("driver term is i omega l on the diagonal") {
  VortexParams p;
  p.omega = 0.7;
  const Complex v = moving_vortex_entry({2, 0, 1}, {2, 0, 1}, p);
  CHECK(v.real() == doctest::Approx(0.0));
  CHECK(v.imag() == doctest::Approx(1.4));
}

TEST_CASE("switching selection rule and quadrature cross-check") {
  VortexParams p;
  p.flavor = VortexFlavor::switching;
  p.C = 2.0;
  CHECK(std::abs(switching_vortex_entry({1, 1, 0}, {1, 2, 1}, p)) == 0.0);  // i == l, row != col

  const MultiIndex row{1, 1, 0}, col{0, 2, 1};
  const Complex lib = switching_vortex_entry(row, col, p);
  const Complex ora = testing::oracle_spatial_entry(row, col, p);
  CHECK(std::abs(lib) > 1e-6);
  CHECK(std::abs(lib - ora) < 1e-8);
}

TEST_CASE("random small-index entries match quadrature for both flavors") {
  CounterRng rng(99);
  for (int flavor = 0; flavor < 2; ++flavor) {
    VortexParams p;
    p.flavor = flavor == 0 ? VortexFlavor::moving : VortexFlavor::switching;
    for (int trial = 0; trial < 6; ++trial) {
      auto draw = [&rng] { return static_cast<Index>(rng.uniform() * 7.0) - 3; };
      const MultiIndex row{draw(), draw(), draw()}, col{draw(), draw(), draw()};
      const Complex lib = p.flavor == VortexFlavor::moving ? moving_vortex_entry(row, col, p)
                                                           : switching_vortex_entry(row, col, p);
      Complex ora = testing::oracle_spatial_entry(row, col, p);
      if (row == col) ora += Complex{0.0, p.omega * static_cast<double>(col.i)};
      CHECK(std::abs(lib - ora) < 1e-8);
    }
  }
}

TEST_CASE("entry decay in the wavenumber offset") {
  VortexParams p;  // kappa = 0.5
  double worst = 0.0;
  for (Index off = 13; off <= 16; ++off)
    worst = std::max(worst,
                     std::abs(moving_vortex_entry({0, -off, 0}, {off, 0, 1}, p)));
  CHECK(worst < 1e-12);
}

TEST_CASE("assembled generator structure") {
  VortexParams p;
  const auto t = TruncationParams::fourier(3, 3, 3);
  const double theta = 1e-4;
  const auto g = assemble_generator_analytic(p, t, theta);
  REQUIRE(g.dim() == t.ell_total());

  // advection block exactly skew-Hermitian
  const auto w = g.advection_part();
  const auto wh = w.adjoint();
  const auto dense_w = testing::to_dense(w);
  const auto dense_wh = testing::to_dense(wh);
  CHECK((dense_w + dense_wh).cwiseAbs().maxCoeff() == 0.0);

  // Hermitian part of L equals -theta diag(eta) exactly
  const auto dense_l = testing::to_dense(g.L);
  Eigen::MatrixXcd herm = 0.5 * (dense_l + dense_l.adjoint());
  for (Index r = 0; r < g.dim(); ++r)
    herm(r, r) += theta * g.eta_diag[static_cast<std::size_t>(r)];
  CHECK(herm.cwiseAbs().maxCoeff() == 0.0);

  // theta = 0: diagonal purely imaginary (driver terms only)
  const auto g0 = assemble_generator_analytic(p, t, 0.0);
  const auto dense0 = testing::to_dense(g0.L);
  for (Index r = 0; r < g0.dim(); ++r) CHECK(dense0(r, r).real() == 0.0);
}

TEST_CASE("switching assembly matches entrywise evaluation") {
  VortexParams p;
  p.flavor = VortexFlavor::switching;
  p.C = 4.0;
  const auto t = TruncationParams::fourier(2, 2, 2);
  const auto g = assemble_generator_analytic(p, t, 1e-3);
  const auto w = g.advection_part();
  CounterRng rng(1);
  for (int trial = 0; trial < 40; ++trial) {
    const Index r = static_cast<Index>(rng.uniform() * static_cast<double>(t.ell_total()));
    const Index c = static_cast<Index>(rng.uniform() * static_cast<double>(t.ell_total()));
    const Complex expected = switching_vortex_entry(unflatten_index(r, t), unflatten_index(c, t), p);
    CHECK(std::abs(w.get(r, c) - expected) < 1e-14);
  }
}

}  // TEST_SUITE
