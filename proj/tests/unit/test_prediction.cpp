#include <doctest.h>

#include "kst/analytic_generators.hpp"
#include "kst/errors.hpp"
#include "kst/koopman_eigs.hpp"
#include "kst/prediction.hpp"
#include "kst/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace kst;

TEST_SUITE("prediction") {

TEST_CASE("built-in observables are unit coefficient vectors") {
  const auto t = TruncationParams::fourier(2, 2, 2);
  const auto f1 = observable_f1(t);
  const auto f2 = observable_f2(t);
  CHECK(f1.b[static_cast<std::size_t>(flatten_index({0, 1, 0}, t))] == Complex{1.0, 0.0});
  CHECK(f2.b[static_cast<std::size_t>(flatten_index({0, 0, 1}, t))] == Complex{1.0, 0.0});
  double sum = 0;
  for (const auto& v : f1.b) sum += std::abs(v);
  CHECK(sum == 1.0);
}

TEST_CASE("mode-list projection hits single coefficients") {
  const auto t = TruncationParams::fourier(2, 2, 2);
  const auto f = project_observable_modes({{{1, -2, 0}, Complex{0.0, 2.0}}}, t);
  CHECK(f.b[static_cast<std::size_t>(flatten_index({1, -2, 0}, t))] == Complex{0.0, 2.0});
}

TEST_CASE("grid projection recovers a pure fourier mode") {
  const auto t = TruncationParams::fourier(1, 3, 3);
  const Index g = 65;
  CVector samples(static_cast<std::size_t>(g * g));
  for (Index a = 0; a < g; ++a)
    for (Index b = 0; b < g; ++b) {
      const double x1 = 2.0 * M_PI * static_cast<double>(a) / static_cast<double>(g);
      const double x2 = 2.0 * M_PI * static_cast<double>(b) / static_cast<double>(g);
      const double ang = 2.0 * x1 - x2;
      samples[static_cast<std::size_t>(a * g + b)] = Complex{std::cos(ang), std::sin(ang)};
    }
  const auto f = project_observable_grid(samples, g, g, t);
  for (Index k = 0; k < t.ell_total(); ++k) {
    const Complex expected =
        k == flatten_index({0, 2, -1}, t) ? Complex{1.0, 0.0} : Complex{0.0, 0.0};
    CHECK(std::abs(f.b[static_cast<std::size_t>(k)] - expected) < 1e-10);
  }
}

TEST_CASE("constant observables and uniform densities are invariant") {
  VortexParams p;
  const auto t = TruncationParams::fourier(3, 3, 3);
  const auto g = assemble_generator_analytic(p, t, 1e-4);

  ObservableCoeffs constant;
  constant.b.assign(static_cast<std::size_t>(t.ell_total()), {0, 0});
  constant.b[static_cast<std::size_t>(flatten_index({0, 0, 0}, t))] = {1.0, 0.0};
  const auto seq = evolve_observable(g, constant, 0.05, 10);
  for (const auto& state : seq.states)
    for (Index k = 0; k < t.ell_total(); ++k) {
      const Complex expected =
          k == flatten_index({0, 0, 0}, t) ? Complex{1.0, 0.0} : Complex{0.0, 0.0};
      CHECK(std::abs(state[static_cast<std::size_t>(k)] - expected) < 1e-9);
    }

  DensityField uniform;
  uniform.b = constant.b;
  uniform.mass = {1.0, 0.0};
  const auto dseq = evolve_density(g, uniform, 0.05, 10);
  for (const auto& state : dseq.states)
    CHECK(std::abs(state[static_cast<std::size_t>(flatten_index({0, 0, 0}, t))] -
                   Complex{1.0, 0.0}) < 1e-9);
}

TEST_CASE("short-time evolution matches the taylor expansion") {
  VortexParams p;
  const auto t = TruncationParams::fourier(3, 3, 3);
  const auto g = assemble_generator_analytic(p, t, 1e-4);
  const auto f1 = observable_f1(t);

  const double tau = 1e-3;
  const auto seq = evolve_observable(g, f1, tau, 1);
  const CVector lb = g.L.matvec(f1.b);
  double defect = 0.0;
  for (std::size_t k = 0; k < f1.b.size(); ++k)
    defect = std::max(defect, std::abs(seq.states[1][k] - (f1.b[k] + tau * lb[k])));
  CHECK(defect < 5.0 * tau * tau);  // O(tau^2) remainder
}

TEST_CASE("density evolution: mass conservation and duality") {
  VortexParams p;
  const auto t = TruncationParams::fourier(4, 4, 4);
  const auto g = assemble_generator_analytic(p, t, 1e-5);

  const auto rho = gaussian_initial_density_fourier(4.0, M_PI, M_PI / 4.0, t);
  CHECK(std::abs(rho.mass - Complex{1.0, 0.0}) < 1e-14);

  LejaOptions opts;
  opts.tol = 1e-9;
  const auto dseq = evolve_density(g, rho, 0.01, 50, opts);
  const Index mass_idx = flatten_index({0, 0, 0}, t);
  for (const auto& state : dseq.states)
    CHECK(std::abs(state[static_cast<std::size_t>(mass_idx)] - Complex{1.0, 0.0}) < 1e-6);

  const auto f2 = observable_f2(t);
  const auto fseq = step_sequence(g.L, f2.b, 0.01, 50, false, opts);
  for (std::size_t s = 0; s < fseq.states.size(); ++s) {
    Complex lhs{0, 0}, rhs{0, 0};
    for (std::size_t k = 0; k < rho.b.size(); ++k) {
      lhs += std::conj(fseq.states[s][k]) * rho.b[k];
      rhs += std::conj(f2.b[k]) * dseq.states[s][k];
    }
    CHECK(std::abs(lhs - rhs) < 1e-6);
  }
}

TEST_CASE("marginals: uniform density and pure fluctuation blocks") {
  const auto t = TruncationParams::fourier(2, 4, 4);
  CVector uniform(static_cast<std::size_t>(t.ell_total()), {0, 0});
  uniform[static_cast<std::size_t>(flatten_index({0, 0, 0}, t))] = {1.0, 0.0};
  const auto m = marginal_density(uniform, t, 33);
  CHECK(m.mass == doctest::Approx(1.0));
  for (double v : m.sigma) CHECK(v == doctest::Approx(1.0));
  for (double v : m.sigma1) CHECK(v == doctest::Approx(1.0));
  for (double v : m.sigma2) CHECK(v == doctest::Approx(1.0));

  // coefficients living only on i != 0 do not contribute to the marginal
  CVector fluct(static_cast<std::size_t>(t.ell_total()), {0, 0});
  fluct[static_cast<std::size_t>(flatten_index({0, 0, 0}, t))] = {1.0, 0.0};
  fluct[static_cast<std::size_t>(flatten_index({1, 2, 1}, t))] = {0.7, 0.3};
  fluct[static_cast<std::size_t>(flatten_index({-2, 0, 1}, t))] = {-0.2, 0.1};
  const auto m2 = marginal_density(fluct, t, 33);
  for (double v : m2.sigma) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("von mises initial marginal matches the closed form") {
  const double kappa = 1.0;
  const auto t = TruncationParams::fourier(1, 12, 12);
  const auto rho = gaussian_initial_density_fourier(kappa, M_PI, M_PI / 2.0, t);
  const auto m = marginal_density(rho.b, t, 41);
  CHECK(m.max_imag_residue < 1e-12);

  const double i0 = testing::bessel_i_series(0, kappa);
  for (Index a = 0; a < 41; ++a)
    for (Index b = 0; b < 41; ++b) {
      const double x1 = 2.0 * M_PI * static_cast<double>(a) / 41.0;
      const double x2 = 2.0 * M_PI * static_cast<double>(b) / 41.0;
      const double exact = std::exp(kappa * (std::cos(x1 - M_PI) + std::cos(x2 - M_PI / 2.0))) /
                           (i0 * i0);
      CHECK(std::abs(m.sigma[static_cast<std::size_t>(a * 41 + b)] - exact) < 1e-8);
    }
}

TEST_CASE("gaussian initial density: coefficients and concentration") {
  const auto t = TruncationParams::fourier(2, 8, 8);
  const auto flat = gaussian_initial_density_fourier(0.0, 1.0, 2.0, t);
  for (Index k = 0; k < t.ell_total(); ++k) {
    const Complex expected =
        k == flatten_index({0, 0, 0}, t) ? Complex{1.0, 0.0} : Complex{0.0, 0.0};
    CHECK(flat.b[static_cast<std::size_t>(k)] == expected);
  }

  const double kt = 4.0, x1 = M_PI, x2 = M_PI / 4.0;
  const auto rho = gaussian_initial_density_fourier(kt, x1, x2, t);
  for (Index j : {-2, 0, 1})
    for (Index k : {-1, 1, 2}) {
      const double ang = -(static_cast<double>(j) * x1 + static_cast<double>(k) * x2);
      const Complex expected = testing::bessel_ratio_series(j, kt) *
                               testing::bessel_ratio_series(k, kt) *
                               Complex{std::cos(ang), std::sin(ang)};
      CHECK(std::abs(rho.b[static_cast<std::size_t>(flatten_index({0, j, k}, t))] - expected) <
            1e-12);
    }

  // the initial marginal concentrates at (pi, pi/4) within one grid cell
  const auto m = marginal_density(rho.b, t, 65);
  Index best = 0;
  for (Index i = 1; i < 65 * 65; ++i)
    if (m.sigma[static_cast<std::size_t>(i)] > m.sigma[static_cast<std::size_t>(best)]) best = i;
  const double bx1 = 2.0 * M_PI * static_cast<double>(best / 65) / 65.0;
  const double bx2 = 2.0 * M_PI * static_cast<double>(best % 65) / 65.0;
  CHECK(std::abs(testing::wrap_pi(bx1 - x1)) <= 2.0 * M_PI / 65.0 + 1e-12);
  CHECK(std::abs(testing::wrap_pi(bx2 - x2)) <= 2.0 * M_PI / 65.0 + 1e-12);
}

TEST_CASE("data-driven initial density: kernel-row anchor") {
  const Index n = 800;
  const auto snaps = testing::circle_snapshots(n, 0.01);
  BasisOptions opts;
  opts.n_eig = 6;
  opts.k_nn_graph = 160;
  const auto built = build_basis(snaps, opts);
  const auto t = TruncationParams::datadriven(6, 4, 4);

  // anchor between training samples, on the circle at phase ~2.005
  Eigen::VectorXd anchor(2);
  anchor << std::cos(2.005), std::sin(2.005);
  const auto rho =
      gaussian_initial_density_datadriven(3.0, 1.0, 2.0, anchor, snaps, built.basis, t);
  CHECK(std::abs(rho.mass - Complex{1.0, 0.0}) < 1e-12);

  // the A-marginal of rho peaks near the anchor phase: evaluate rho_A at samples
  Eigen::VectorXd rho_a = Eigen::VectorXd::Zero(n);
  for (Index i = 0; i < 6; ++i) {
    const Complex c = rho.b[static_cast<std::size_t>(flatten_index({i, 0, 0}, t))];
    rho_a += c.real() * built.basis.phi.col(i);
  }
  Index peak = 0;
  rho_a.maxCoeff(&peak);
  const double peak_phase = std::fmod(0.01 * static_cast<double>(peak), 2.0 * M_PI);
  CHECK(std::abs(testing::wrap_pi(peak_phase - 2.005)) < 0.25);

  // an anchor far outside the kernel's reach is rejected
  Eigen::VectorXd far_anchor(2);
  far_anchor << 1e6, 1e6;
  CHECK_THROWS_WITH_AS(
      gaussian_initial_density_datadriven(3.0, 1.0, 2.0, far_anchor, snaps, built.basis, t),
      doctest::Contains("unreachable-anchor"), Error);
}

TEST_CASE("tracer position estimate: identity at t = 0 and constant advection") {
  const auto t = TruncationParams::fourier(1, 2, 2);
  const auto f1 = observable_f1(t);
  const auto f2 = observable_f2(t);
  const auto a_vals = fourier_a_values(0.0, t);

  const auto est0 = tracer_position_estimate(f1.b, f2.b, a_vals, t, 16, 16);
  for (Index a = 0; a < 16; ++a)
    for (Index b = 0; b < 16; ++b) {
      const auto p = static_cast<std::size_t>(a * 16 + b);
      CHECK(std::abs(testing::wrap_pi(est0.x1[p] - 2.0 * M_PI * a / 16.0)) < 1e-12);
      CHECK(std::abs(testing::wrap_pi(est0.x2[p] - 2.0 * M_PI * b / 16.0)) < 1e-12);
      CHECK(!est0.low_confidence[p]);
    }

  // constant velocity (c1, c2): W is diagonal i(m c1 + n c2); phases advect linearly
  const double c1 = 0.6, c2 = -0.4, tt = 2.0;
  std::vector<Triplet> trip;
  std::vector<double> eta;
  for (Index k = 0; k < t.ell_total(); ++k) {
    const MultiIndex mi = unflatten_index(k, t);
    trip.push_back({k, k, Complex{0.0, static_cast<double>(mi.j) * c1 + static_cast<double>(mi.k) * c2}});
    eta.push_back(static_cast<double>(mi.i * mi.i + mi.j * mi.j + mi.k * mi.k));
  }
  GeneratorMatrix g;
  g.L = SparseComplexMatrix::from_triplets(t.ell_total(), t.ell_total(), trip);
  g.eta_diag = eta;
  g.theta = 0.0;
  g.trunc = t;

  const auto seq1 = evolve_observable(g, f1, tt, 1);
  const auto seq2 = evolve_observable(g, f2, tt, 1);
  const auto est = tracer_position_estimate(seq1.states[1], seq2.states[1], a_vals, t, 8, 8);
  for (Index a = 0; a < 8; ++a)
    for (Index b = 0; b < 8; ++b) {
      const auto p = static_cast<std::size_t>(a * 8 + b);
      const double want1 = 2.0 * M_PI * a / 8.0 + c1 * tt;
      const double want2 = 2.0 * M_PI * b / 8.0 + c2 * tt;
      CHECK(std::abs(testing::wrap_pi(est.x1[p] - want1)) < 1e-3);
      CHECK(std::abs(testing::wrap_pi(est.x2[p] - want2)) < 1e-3);
    }
}

TEST_CASE("eigen-expansion forecast") {
  VortexParams p;
  const auto t = TruncationParams::fourier(3, 3, 3);
  const double theta = 1e-4;
  const auto g = assemble_generator_analytic(p, t, theta);
  const auto sys = build_h1_system(g);
  GevpOptions opts;
  opts.n_eig = 20;
  const auto pairs = order_and_normalize(sys, solve_gevp(sys, opts));

  // f = z0 (constant) is invariant
  CVector f0(static_cast<std::size_t>(t.ell_total()), {0, 0});
  f0[static_cast<std::size_t>(flatten_index({0, 0, 0}, t))] = {1.0, 0.0};
  const auto inv = predict_observable_eig(pairs, g.eta_diag, f0, 5.0);
  CHECK(inv.lsq_residual < 1e-10);
  for (std::size_t k = 0; k < f0.size(); ++k) CHECK(std::abs(inv.coeffs[k] - f0[k]) < 1e-8);

  // single eigenpair: e^{t lambda} scaling exactly
  CVector zf(pairs[3].coeffs.size());
  for (std::size_t k = 0; k < zf.size(); ++k) {
    const double e = g.eta_diag[k];
    zf[k] = pairs[3].coeffs[k] * (e == 0.0 ? 1.0 : 1.0 / std::sqrt(e));
  }
  const auto single = predict_observable_eig({pairs[3]}, g.eta_diag, zf, 1.3);
  const Complex factor = std::exp(1.3 * pairs[3].lambda);
  for (std::size_t k = 0; k < zf.size(); ++k)
    CHECK(std::abs(single.coeffs[k] - factor * zf[k]) < 1e-10);

  // agreement with the semigroup route for f in the span of the leading pairs
  CVector span_f(static_cast<std::size_t>(t.ell_total()), {0, 0});
  CounterRng rng(3);
  for (int p_i = 0; p_i < 12; ++p_i) {
    const Complex w{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    for (std::size_t k = 0; k < span_f.size(); ++k) {
      const double e = g.eta_diag[k];
      span_f[k] += w * pairs[static_cast<std::size_t>(p_i)].coeffs[k] *
                   (e == 0.0 ? 1.0 : 1.0 / std::sqrt(e));
    }
  }
  const auto eig_route = predict_observable_eig(
      std::vector<EigenPair>(pairs.begin(), pairs.begin() + 12), g.eta_diag, span_f, 1.0);
  CHECK(eig_route.lsq_residual < 1e-8);

  LejaOptions lopts;
  lopts.tol = 1e-9;
  ObservableCoeffs fo;
  fo.b = span_f;
  const auto semigroup = evolve_observable(g, fo, 1.0, 1, false, lopts);
  double defect = 0.0;
  for (std::size_t k = 0; k < span_f.size(); ++k)
    defect = std::max(defect, std::abs(eig_route.coeffs[k] - semigroup.states[1][k]));
  CHECK(defect < 1e-4);
}

}  // TEST_SUITE
