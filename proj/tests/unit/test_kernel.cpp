#include <doctest.h>

#include <Eigen/Dense>

#include "kst/errors.hpp"
#include "kst/kernel_basis.hpp"
#include "kst/rng.hpp"
#include "test_util.hpp"

using namespace kst;

namespace {

SnapshotSet torus_snapshots_4d(Index n) {
  SnapshotSet s;
  s.tau = 0.01;
  s.source = "torus4d";
  s.data.resize(n, 4);
  for (Index i = 0; i < n; ++i) {
    const double u = 0.61803398874989 * static_cast<double>(i);
    const double v = std::sqrt(2.0) * 0.3 * static_cast<double>(i);
    s.data(i, 0) = std::cos(u);
    s.data(i, 1) = std::sin(u);
    s.data(i, 2) = std::cos(v);
    s.data(i, 3) = std::sin(v);
  }
  return s;
}

SnapshotSet random_cloud(Index n, Index d, std::uint64_t seed) {
  CounterRng rng(seed);
  SnapshotSet s;
  s.tau = 0.01;
  s.source = "cloud";
  s.data.resize(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) s.data(i, j) = rng.uniform(-1, 1);
  return s;
}

}  // namespace

TEST_SUITE("kernel-basis") {

TEST_CASE("knn bandwidth on three collinear points") {
  SnapshotSet s;
  s.tau = 1.0;
  s.data.resize(3, 1);
  s.data << 0.0, 1.0, 2.0;
  const auto rt = knn_bandwidth(s, 2);
  CHECK(rt[0] == doctest::Approx(1.0));  // single neighbor at distance 1
  CHECK(rt[2] == doctest::Approx(1.0));
}

TEST_CASE("duplicate-only neighborhoods raise the degenerate-bandwidth error") {
  SnapshotSet s;
  s.tau = 1.0;
  s.data.resize(4, 2);
  s.data << 1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 5.0, 5.0;
  CHECK_THROWS_WITH_AS(knn_bandwidth(s, 3), doctest::Contains("degenerate-bandwidth"), Error);
}

TEST_CASE("uniform circle gives a nearly constant bandwidth and density") {
  const auto s = testing::equispaced_circle(100);
  const auto rt = knn_bandwidth(s, 8);
  const double cv = std::sqrt((rt.array() - rt.mean()).square().mean()) / rt.mean();
  CHECK(cv < 0.10);

  const auto est = estimate_density(s, rt, 0.05, 1.0);
  const double spread =
      (est.sigma.maxCoeff() - est.sigma.minCoeff()) / est.sigma.mean();
  CHECK(spread < 0.10);
}

TEST_CASE("two separated clusters: density larger inside clusters") {
  CounterRng rng(31);
  SnapshotSet s;
  s.tau = 1.0;
  s.data.resize(60, 2);
  for (Index i = 0; i < 30; ++i) {
    s.data(i, 0) = rng.uniform(-0.1, 0.1);
    s.data(i, 1) = rng.uniform(-0.1, 0.1);
    s.data(30 + i, 0) = 10.0 + rng.uniform(-0.1, 0.1);
    s.data(30 + i, 1) = rng.uniform(-0.1, 0.1);
  }
  const auto rt = knn_bandwidth(s, 4);
  const auto est = estimate_density(s, rt, 0.5, 2.0);
  // any in-cluster point is denser than a synthetic multi-cluster average scale
  CHECK(est.sigma.minCoeff() > 0.0);
  CHECK(est.sigma.maxCoeff() / est.sigma.minCoeff() < 1e3);
}

TEST_CASE("bandwidth tuning recovers the circle dimension") {
  const auto s = testing::equispaced_circle(600);
  const auto rt = knn_bandwidth(s, 8);
  const auto scan = tune_bandwidth(s, rt);
  CHECK(scan.dim_est > 0.8);
  CHECK(scan.dim_est < 1.2);
  CHECK(scan.eps_star > 0.0);
  // S is non-decreasing in eps
  for (Index g = 1; g < scan.S.size(); ++g) CHECK(scan.S[g] >= scan.S[g - 1] - 1e-12);
}

TEST_CASE("bandwidth tuning recovers the torus dimension in 4d") {
  const auto s = torus_snapshots_4d(1500);
  const auto rt = knn_bandwidth(s, 8);
  const auto scan = tune_bandwidth(s, rt);
  CHECK(scan.dim_est > 1.7);
  CHECK(scan.dim_est < 2.3);
}

TEST_CASE("repeated single point has no plateau") {
  SnapshotSet s;
  s.tau = 1.0;
  s.data = Eigen::MatrixXd::Ones(20, 3);
  const Eigen::VectorXd r = Eigen::VectorXd::Ones(20);
  CHECK_THROWS_WITH_AS(tune_bandwidth(s, r), doctest::Contains("no-plateau"), Error);
}

TEST_CASE("markov normalization: unit row sums and symmetric p-hat") {
  const auto s = random_cloud(80, 3, 7);
  const auto rt = knn_bandwidth(s, 8);
  const auto scan = tune_bandwidth(s, rt);
  const auto kernel = build_markov(s, rt, scan.eps_star, 20);

  const Eigen::MatrixXd ph = kernel.p_hat.dense();
  CHECK((ph - ph.transpose()).cwiseAbs().maxCoeff() == 0.0);

  // P_ij = p_hat_ij sqrt(q_i d_i q_j d_j) / (d_i q_j) must have unit row sums
  for (Index i = 0; i < 80; ++i) {
    double row = 0.0;
    for (Index j = 0; j < 80; ++j)
      row += ph(i, j) * std::sqrt(kernel.q[i] * kernel.d[i] * kernel.q[j] * kernel.d[j]) /
             (kernel.d[i] * kernel.q[j]);
    CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("p-hat and the markov matrix share their spectrum at n = 50") {
  const auto s = random_cloud(50, 3, 13);
  const auto rt = knn_bandwidth(s, 6);
  const auto kernel = build_markov(s, rt, 0.3, 50);

  const Eigen::MatrixXd ph = kernel.p_hat.dense();
  Eigen::MatrixXd p(50, 50);
  for (Index i = 0; i < 50; ++i)
    for (Index j = 0; j < 50; ++j)
      p(i, j) = ph(i, j) * std::sqrt(kernel.q[i] * kernel.d[i] * kernel.q[j] * kernel.d[j]) /
                (kernel.d[i] * kernel.q[j]);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_h(ph);
  Eigen::EigenSolver<Eigen::MatrixXd> es_p(p);
  Eigen::VectorXd ev_p = es_p.eigenvalues().real();
  std::sort(ev_p.data(), ev_p.data() + 50);
  CHECK(es_p.eigenvalues().imag().cwiseAbs().maxCoeff() < 1e-10);
  for (Index k = 0; k < 50; ++k)
    CHECK(es_h.eigenvalues()[k] == doctest::Approx(ev_p[k]).epsilon(1e-9));
}

TEST_CASE("disconnected graphs are rejected") {
  SnapshotSet s;
  s.tau = 1.0;
  s.data.resize(20, 1);
  for (Index i = 0; i < 10; ++i) s.data(i, 0) = static_cast<double>(i) * 0.01;
  for (Index i = 10; i < 20; ++i) s.data(i, 0) = 1e6 + static_cast<double>(i) * 0.01;
  const Eigen::VectorXd r = Eigen::VectorXd::Ones(20);
  CHECK_THROWS_WITH_AS(build_markov(s, r, 1e-4, 3), doctest::Contains("connectivity-error"),
                       Error);
}

TEST_CASE("markov eigenbasis: leading pair and weighted orthonormality") {
  const auto s = testing::circle_snapshots(300, 2.0 * M_PI * 0.61803398874989);
  BasisOptions opts;
  opts.n_eig = 7;
  opts.k_nn_graph = 60;
  const auto built = build_basis(s, opts);
  const auto& b = built.basis;

  CHECK(std::abs(b.lambda[0] - 1.0) < 1e-10);
  const double phi0_spread =
      (b.phi.col(0).maxCoeff() - b.phi.col(0).minCoeff()) / std::abs(b.phi.col(0).mean());
  CHECK(phi0_spread < 1e-8);
  CHECK(b.beta.minCoeff() > 0.0);
  CHECK(b.beta.mean() == doctest::Approx(1.0).epsilon(1e-12));

  // rotational symmetry: double eigenvalue
  CHECK(std::abs(b.lambda[1] - b.lambda[2]) / std::abs(1.0 - b.lambda[1]) < 0.02);

  const Index n = b.count();
  Eigen::MatrixXd gram = b.phi.transpose() * (b.beta / static_cast<double>(n)).asDiagonal() * b.phi;
  CHECK((gram - Eigen::MatrixXd::Identity(7, 7)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("lanczos agrees with the dense eigensolver at n = 40") {
  const auto s = random_cloud(40, 2, 3);
  const auto rt = knn_bandwidth(s, 5);
  const auto kernel = build_markov(s, rt, 0.5, 40);
  const auto dense = eig_markov(kernel, 6, EigMethod::dense);
  const auto lanczos = eig_markov(kernel, 6, EigMethod::lanczos);
  for (Index k = 0; k < 6; ++k)
    CHECK(std::abs(dense.lambda[k] - lanczos.lambda[k]) < 1e-10);
}

TEST_CASE("dirichlet energy options") {
  Eigen::VectorXd lambda(3);
  lambda << 1.0, 1.0, 1.0;
  for (int opt : {1, 2, 3}) {
    const auto eta = dirichlet_energies(lambda, 0.2, opt, 1.0);
    CHECK(eta[0] == 0.0);
    CHECK(eta[1] == doctest::Approx(0.0));
    CHECK(eta[2] == doctest::Approx(0.0));
  }

  const double eps = 0.37;
  Eigen::VectorXd l2(2);
  l2 << 1.0, std::exp(-eps);
  CHECK(dirichlet_energies(l2, eps, 2, 1.0)[1] == doctest::Approx(1.0).epsilon(1e-14));

  Eigen::VectorXd l3(2);
  l3 << 1.0, 0.5;
  CHECK(dirichlet_energies(l3, 0.1, 1, 1.0)[1] == doctest::Approx(5.0));
  CHECK(dirichlet_energies(l3, 0.1, 2, 1.0)[1] == doctest::Approx(std::log(2.0) / 0.1));
  CHECK(dirichlet_energies(l3, 0.1, 3, 1.0)[1] == doctest::Approx(10.0));

  // option ordering for lambda in (0, 1]
  Eigen::VectorXd l4(5);
  l4 << 1.0, 0.9, 0.5, 0.2, 0.05;
  const auto e1 = dirichlet_energies(l4, 0.1, 1, 1.0);
  const auto e2 = dirichlet_energies(l4, 0.1, 2, 1.0);
  const auto e3 = dirichlet_energies(l4, 0.1, 3, 1.0);
  for (Index k = 1; k < 5; ++k) {
    CHECK(e3[k] >= e2[k]);
    CHECK(e2[k] >= e1[k]);
    CHECK(e1[k] >= e1[k - 1]);  // non-decreasing
  }

  // Weyl fallback for non-positive tail under options 2 and 3
  Eigen::VectorXd l5(5);
  l5 << 1.0, 0.8, 0.4, -0.1, -0.2;
  const auto ew = dirichlet_energies(l5, 0.1, 3, 2.0);
  CHECK(ew[3] == doctest::Approx(ew[2] * std::pow(3.0 / 2.0, 1.0)));
  CHECK(ew[4] == doctest::Approx(ew[2] * std::pow(4.0 / 2.0, 1.0)));

  Eigen::VectorXd bad(2);
  bad << 1.0, 1.5;
  CHECK_THROWS_WITH_AS(dirichlet_energies(bad, 0.1, 1, 1.0),
                       doctest::Contains("invalid-spectrum"), Error);
}

TEST_CASE("triple products: normalization, delta property, exact symmetry") {
  const auto s = testing::circle_snapshots(400, 2.0 * M_PI * 0.61803398874989);
  BasisOptions opts;
  opts.n_eig = 6;
  opts.k_nn_graph = 80;
  const auto built = build_basis(s, opts);
  const auto tp = triple_products(built.basis, 6);

  CHECK(tp.at(0, 0, 0) == doctest::Approx(1.0).epsilon(1e-8));
  for (Index j = 0; j < 6; ++j)
    for (Index k = 0; k < 6; ++k)
      CHECK(std::abs(tp.at(0, j, k) - (j == k ? 1.0 : 0.0)) < 1e-6);
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 6; ++j)
      for (Index k = 0; k < 6; ++k) {
        CHECK(tp.at(i, j, k) == tp.at(k, j, i));
        CHECK(tp.at(i, j, k) == tp.at(j, i, k));
      }
}

TEST_CASE("circle spectrum follows the laplacian pattern") {
  // a_{n+1} = a_n + tau on the circle, embedded as (cos, sin): eta ratio
  // (eta3 + eta4) / (eta1 + eta2) approximates 4 (spectrum 0, 1, 1, 4, 4).
  const auto s = testing::circle_snapshots(1200, 2.0 * M_PI * 0.61803398874989);
  BasisOptions opts;
  opts.n_eig = 5;
  opts.dirichlet_option = 1;
  opts.k_nn_graph = 200;
  const auto built = build_basis(s, opts);
  const auto& eta = built.basis.eta;
  const double ratio = (eta[3] + eta[4]) / (eta[1] + eta[2]);
  CHECK(ratio > 3.6);
  CHECK(ratio < 4.4);
}

}  // TEST_SUITE
