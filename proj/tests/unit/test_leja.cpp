#include <doctest.h>

#include "kst/errors.hpp"
#include "kst/leja_expm.hpp"
#include "kst/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace kst;

namespace {

// Random sparse generator with negative semidefinite Hermitian part: skew pairs
// plus a nonpositive real diagonal.
SparseComplexMatrix random_dissipative(Index n, std::uint64_t seed, double skew_scale = 1.0,
                                       double diss_scale = 1.0) {
  CounterRng rng(seed);
  std::vector<Triplet> t;
  for (Index r = 0; r < n; ++r) {
    for (int k = 0; k < 4; ++k) {
      const Index c = static_cast<Index>(rng.uniform() * static_cast<double>(n));
      if (c == r) continue;
      const Complex v = skew_scale * Complex{rng.uniform(-1, 1), rng.uniform(-1, 1)};
      t.push_back({r, c, v});
      t.push_back({c, r, -std::conj(v)});
    }
    t.push_back({r, r, Complex{-diss_scale * rng.uniform(), skew_scale * rng.uniform(-1, 1)}});
  }
  return SparseComplexMatrix::from_triplets(n, n, std::move(t));
}

CVector random_vector(Index n, std::uint64_t seed) {
  CounterRng rng(seed);
  CVector b(static_cast<std::size_t>(n));
  for (auto& v : b) v = Complex{rng.uniform(-1, 1), rng.uniform(-1, 1)};
  return b;
}

double rel_err(const CVector& a, const Eigen::VectorXcd& b) {
  double num = 0.0, den = 0.0;
  for (Index i = 0; i < b.size(); ++i) {
    num += std::norm(a[static_cast<std::size_t>(i)] - b[i]);
    den += std::norm(b[i]);
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_SUITE("leja-expm") {

TEST_CASE("gershgorin boxes") {
  const auto zero = SparseComplexMatrix::from_triplets(3, 3, {});
  const auto bz = gershgorin_box(zero);
  CHECK(bz.alpha == 0.0);
  CHECK(bz.beta_lo == 0.0);
  CHECK(bz.gamma == 0.0);

  const auto diag = SparseComplexMatrix::from_triplets(
      3, 3, {{0, 0, {-2.0, 0}}, {1, 1, {0.5, 0}}, {2, 2, {-1.0, 0}}});
  const auto bd = gershgorin_box(diag);
  CHECK(bd.alpha == 0.5);
  CHECK(bd.beta_lo == -2.0);
  CHECK(bd.gamma == 0.0);

  const auto rot =
      SparseComplexMatrix::from_triplets(2, 2, {{0, 1, {1.0, 0}}, {1, 0, {-1.0, 0}}});
  const auto br = gershgorin_box(rot);
  CHECK(br.alpha == 0.0);
  CHECK(br.beta_lo == 0.0);
  CHECK(br.gamma == 1.0);
}

TEST_CASE("degenerate segments and scalar matrices") {
  const SpectralBox degenerate{-0.7, -0.7, 0.0};
  const auto nodes = leja_nodes(degenerate, 5);
  for (const auto& z : nodes) CHECK(z == Complex{-0.7, 0.0});

  // L = c I: result reduces to e^{t c} b
  const Complex c{-0.3, 0.8};
  const auto l = SparseComplexMatrix::from_triplets(4, 4, {{0, 0, c}, {1, 1, c}, {2, 2, c}, {3, 3, c}});
  const auto b = random_vector(4, 3);
  const auto y = expm_action(l, b, 2.0, 1e-9);
  const Complex factor = std::exp(2.0 * c);
  for (Index i = 0; i < 4; ++i)
    CHECK(std::abs(y[static_cast<std::size_t>(i)] - factor * b[static_cast<std::size_t>(i)]) <
          1e-8);
}

TEST_CASE("node selection on a symmetric segment") {
  const SpectralBox box{0.0, 0.0, 1.0};
  const auto nodes = leja_nodes(box, 12);
  CHECK(nodes[0] == Complex{0.0, 0.0});
  // second node is an endpoint, third its mirror
  CHECK(std::abs(std::abs(nodes[1].imag()) - 1.0) < 1e-3);
  CHECK(std::abs(nodes[1].imag() + nodes[2].imag()) < 1e-3);
  // The greedy max-product rule is only approximately mirror symmetric: once a
  // tie is broken to one side, the opposite argmax shifts slightly. Check the
  // multiset balances to a few percent of the half-height.
  double imbalance = 0.0;
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    double best = 1e9;
    for (std::size_t j = 1; j < nodes.size(); ++j)
      best = std::min(best, std::abs(nodes[i].imag() + nodes[j].imag()));
    imbalance = std::max(imbalance, best);
  }
  CHECK(imbalance < 0.12 * box.gamma);
  double sum = 0.0;
  for (const auto& z : nodes) sum += z.imag();
  CHECK(std::abs(sum) < 0.05 * box.gamma * static_cast<double>(nodes.size()));
}

TEST_CASE("divided differences") {
  CHECK(std::abs(divided_differences({Complex{0.3, -0.2}})[0] - std::exp(Complex{0.3, -0.2})) <
        1e-14);

  const auto dd2 = divided_differences({Complex{0, 0}, Complex{1, 0}});
  CHECK(std::abs(dd2[1] - (std::exp(1.0) - 1.0)) < 1e-12);

  // Newton polynomial interpolates e^z exactly at its own nodes
  const SpectralBox box{0.0, 0.0, 3.0};
  const auto nodes = leja_nodes(box, 8);
  const auto dd = divided_differences(nodes);
  for (const auto& z : nodes) {
    Complex p = dd[0];
    Complex prod{1.0, 0.0};
    for (std::size_t i = 1; i < nodes.size(); ++i) {
      prod *= z - nodes[i - 1];
      p += dd[i] * prod;
    }
    CHECK(std::abs(p - std::exp(z)) < 1e-12);
  }
}

TEST_CASE("t = 0 returns the input exactly") {
  const auto l = random_dissipative(30, 5);
  const auto b = random_vector(30, 6);
  const auto y = expm_action(l, b, 0.0, 1e-7);
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(y[i] == b[i]);
}

TEST_CASE("diagonal generators evolve elementwise") {
  CounterRng rng(9);
  std::vector<Triplet> t;
  CVector diag(20);
  for (Index k = 0; k < 20; ++k) {
    diag[static_cast<std::size_t>(k)] = Complex{-rng.uniform(), rng.uniform(-3, 3)};
    t.push_back({k, k, diag[static_cast<std::size_t>(k)]});
  }
  const auto l = SparseComplexMatrix::from_triplets(20, 20, t);
  const auto b = random_vector(20, 10);
  const auto y = expm_action(l, b, 1.7, 1e-9);
  for (Index k = 0; k < 20; ++k)
    CHECK(std::abs(y[static_cast<std::size_t>(k)] -
                   std::exp(1.7 * diag[static_cast<std::size_t>(k)]) *
                       b[static_cast<std::size_t>(k)]) < 1e-8);
}

TEST_CASE("matches the dense scaling-and-squaring oracle") {
  const Index n = 200;
  const auto l = random_dissipative(n, 77);
  const auto dense = testing::to_dense(l);
  const auto b = random_vector(n, 78);
  Eigen::VectorXcd be(n);
  for (Index i = 0; i < n; ++i) be[i] = b[static_cast<std::size_t>(i)];

  for (double t : {0.1, 1.0, 10.0}) {
    const Eigen::VectorXcd exact = testing::oracle_expm(t * dense) * be;
    const auto approx = expm_action(l, b, t, 1e-7);
    CHECK(rel_err(approx, exact) <= 1e-6);
  }
}

TEST_CASE("semigroup property, contraction, adjoint duality") {
  const Index n = 120;
  const auto l = random_dissipative(n, 31);
  const auto b = random_vector(n, 32);
  const double tol = 1e-9;

  const auto full = expm_action(l, b, 1.5, tol);
  const auto half = expm_action(l, expm_action(l, b, 0.9, tol), 0.6, tol);
  double defect = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < full.size(); ++i) {
    defect += std::norm(full[i] - half[i]);
    scale += std::norm(full[i]);
  }
  CHECK(std::sqrt(defect / scale) < 10.0 * tol);

  auto norm = [](const CVector& v) {
    double acc = 0;
    for (const auto& x : v) acc += std::norm(x);
    return std::sqrt(acc);
  };
  CHECK(norm(full) <= norm(b) * (1.0 + 10.0 * tol));

  const auto rho = random_vector(n, 33);
  const auto ladj = l.adjoint();
  const auto stf = expm_action(l, b, 1.1, tol);
  const auto st_rho = expm_action(ladj, rho, 1.1, tol);
  Complex lhs{0, 0}, rhs{0, 0};
  for (std::size_t i = 0; i < stf.size(); ++i) {
    lhs += std::conj(stf[i]) * rho[i];
    rhs += std::conj(b[i]) * st_rho[i];
  }
  CHECK(std::abs(lhs - rhs) < 10.0 * tol * std::abs(lhs));
}

TEST_CASE("step sequences: norms and renormalization") {
  // skew-Hermitian generator: unitary evolution keeps norms constant
  const Index n = 60;
  const auto l = random_dissipative(n, 55, 1.0, 0.0);
  const auto b = random_vector(n, 56);

  const auto seq0 = step_sequence(l, b, 0.05, 0, false);
  REQUIRE(seq0.states.size() == 1);
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(seq0.states[0][i] == b[i]);

  auto norm = [](const CVector& v) {
    double acc = 0;
    for (const auto& x : v) acc += std::norm(x);
    return std::sqrt(acc);
  };
  LejaOptions opts;
  opts.tol = 1e-10;
  const auto seq = step_sequence(l, b, 0.05, 100, false, opts);
  const double n0 = norm(seq.states.front());
  for (const auto& s : seq.states) CHECK(std::abs(norm(s) - n0) < 1e-8 * n0);

  // renormalization is a positive scalar rescale: argmax coefficient unchanged
  const auto diss = random_dissipative(n, 57, 1.0, 2.0);
  const auto plain = step_sequence(diss, b, 0.1, 20, false, opts);
  const auto renorm = step_sequence(diss, b, 0.1, 20, true, opts);
  for (std::size_t s = 0; s < plain.states.size(); ++s) {
    std::size_t arg_a = 0, arg_b = 0;
    double best_a = -1, best_b = -1;
    for (std::size_t i = 0; i < plain.states[s].size(); ++i) {
      if (std::abs(plain.states[s][i]) > best_a) {
        best_a = std::abs(plain.states[s][i]);
        arg_a = i;
      }
      if (std::abs(renorm.states[s][i]) > best_b) {
        best_b = std::abs(renorm.states[s][i]);
        arg_b = i;
      }
    }
    CHECK(arg_a == arg_b);
  }
}

}  // TEST_SUITE
