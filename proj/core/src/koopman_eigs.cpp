#include "kst/koopman_eigs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "kst/errors.hpp"

namespace kst {

namespace {

using SpMat = Eigen::SparseMatrix<Complex>;

SpMat to_eigen(const SparseComplexMatrix& m) {
  std::vector<Eigen::Triplet<Complex>> t;
  t.reserve(static_cast<std::size_t>(m.nnz()));
  for (Index r = 0; r < m.nrows(); ++r)
    for (Index p = m.row_ptr()[static_cast<std::size_t>(r)]; p < m.row_ptr()[static_cast<std::size_t>(r) + 1]; ++p)
      t.emplace_back(static_cast<int>(r), static_cast<int>(m.cols()[static_cast<std::size_t>(p)]),
                     m.values()[static_cast<std::size_t>(p)]);
  SpMat s(static_cast<int>(m.nrows()), static_cast<int>(m.ncols()));
  s.setFromTriplets(t.begin(), t.end());
  s.makeCompressed();
  return s;
}

double gevp_residual(const GevpSystem& sys, const CVector& c, Complex lambda) {
  CVector ac = sys.A.matvec(c);
  double num = 0.0, den = 0.0;
  for (Index k = 0; k < sys.dim(); ++k) {
    const Complex bc = sys.b_diag[static_cast<std::size_t>(k)] * c[static_cast<std::size_t>(k)];
    num += std::norm(ac[static_cast<std::size_t>(k)] - lambda * bc);
    den += std::norm(bc);
  }
  return den > 0.0 ? std::sqrt(num / den) : std::numeric_limits<double>::infinity();
}

bool target_less(EigTarget target, Complex a, Complex b) {
  if (target == EigTarget::smallest_modulus) {
    if (std::abs(a) != std::abs(b)) return std::abs(a) < std::abs(b);
  } else {
    if (a.real() != b.real()) return a.real() > b.real();
  }
  if (a.imag() != b.imag()) return a.imag() < b.imag();
  return a.real() < b.real();
}

}  // namespace

GevpSystem build_h1_system(const SparseComplexMatrix& W, const std::vector<double>& eta,
                           double theta) {
  const Index n = W.nrows();
  require(W.ncols() == n, "invalid-input", "W must be square");
  require(static_cast<Index>(eta.size()) == n, "invalid-input", "eta length mismatch");
  require(theta >= 0.0, "invalid-input", "theta must be >= 0");

  GevpSystem sys;
  sys.theta = theta;
  sys.eta = eta;
  Index k0 = -1;
  for (Index k = 0; k < n; ++k) {
    require(eta[static_cast<std::size_t>(k)] >= 0.0, "invalid-input", "eta must be >= 0");
    if (eta[static_cast<std::size_t>(k)] == 0.0) {
      require(k0 < 0, "degenerate-metric", "repeated zero Dirichlet energy");
      k0 = k;
    }
  }
  require(k0 >= 0, "degenerate-metric", "no zero-energy (constant) basis index");
  sys.k0 = k0;

  sys.scale.resize(static_cast<std::size_t>(n));
  sys.b_diag.resize(static_cast<std::size_t>(n));
  for (Index k = 0; k < n; ++k) {
    const double e = eta[static_cast<std::size_t>(k)];
    sys.scale[static_cast<std::size_t>(k)] = k == k0 ? 1.0 : 1.0 / std::sqrt(e);
    sys.b_diag[static_cast<std::size_t>(k)] = k == k0 ? 1.0 : 1.0 / e;
  }

  std::vector<double> ind(static_cast<std::size_t>(n), 1.0);
  ind[static_cast<std::size_t>(k0)] = 0.0;
  sys.A = W.scaled_rows_cols(sys.scale).with_added_diagonal(ind, Complex{-theta, 0.0});
  return sys;
}

GevpSystem build_h1_system(const GeneratorMatrix& g) {
  return build_h1_system(g.advection_part(), g.eta_diag, g.theta);
}

namespace {

std::vector<EigenPair> solve_dense(const GevpSystem& sys, const GevpOptions& opts) {
  const Index n = sys.dim();
  Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(n, n);
  for (Index r = 0; r < n; ++r)
    for (Index p = sys.A.row_ptr()[static_cast<std::size_t>(r)]; p < sys.A.row_ptr()[static_cast<std::size_t>(r) + 1]; ++p)
      c(r, sys.A.cols()[static_cast<std::size_t>(p)]) = sys.A.values()[static_cast<std::size_t>(p)];
  for (Index r = 0; r < n; ++r) c.row(r) /= sys.b_diag[static_cast<std::size_t>(r)];

  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(c);
  require(es.info() == Eigen::Success, "solver-error", "dense eigensolve failed");

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    return target_less(opts.target, es.eigenvalues()[a], es.eigenvalues()[b]);
  });

  std::vector<EigenPair> out;
  const Index take = std::min(opts.n_eig, n);
  out.reserve(static_cast<std::size_t>(take));
  for (Index i = 0; i < take; ++i) {
    EigenPair p;
    p.lambda = es.eigenvalues()[order[static_cast<std::size_t>(i)]];
    const auto v = es.eigenvectors().col(order[static_cast<std::size_t>(i)]);
    p.coeffs.assign(v.data(), v.data() + n);
    p.residual = gevp_residual(sys, p.coeffs, p.lambda);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<EigenPair> solve_shift_invert(const GevpSystem& sys, const GevpOptions& opts) {
  const Index n = sys.dim();
  double eta1 = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < n; ++k)
    if (k != sys.k0) eta1 = std::min(eta1, sys.eta[static_cast<std::size_t>(k)]);
  const double sigma_mag =
      opts.shift != 0.0 ? std::abs(opts.shift)
                        : std::clamp(0.1 * sys.theta * (std::isfinite(eta1) ? eta1 : 1.0), 1e-9, 1e-3);
  Complex sigma = opts.shift != 0.0 ? Complex{opts.shift, 0.0} : Complex{-sigma_mag, 0.0};

  SpMat shifted = to_eigen(sys.A);
  for (Index k = 0; k < n; ++k)
    shifted.coeffRef(static_cast<int>(k), static_cast<int>(k)) -=
        sigma * sys.b_diag[static_cast<std::size_t>(k)];
  shifted.makeCompressed();

  Eigen::SparseLU<SpMat> lu;
  lu.analyzePattern(shifted);
  lu.factorize(shifted);
  for (int retry = 0; lu.info() != Eigen::Success && retry < 3; ++retry) {
    sigma *= 10.0;
    SpMat again = to_eigen(sys.A);
    for (Index k = 0; k < n; ++k)
      again.coeffRef(static_cast<int>(k), static_cast<int>(k)) -=
          sigma * sys.b_diag[static_cast<std::size_t>(k)];
    again.makeCompressed();
    lu.factorize(again);
  }
  require(lu.info() == Eigen::Success, "solver-error", "sparse LU factorization failed");

  Index m = std::min<Index>(n, std::max<Index>(3 * opts.n_eig, 120));
  for (;;) {
    // Arnoldi on (A - sigma B)^{-1} B with full reorthogonalization.
    Eigen::MatrixXcd v(n, m + 1);
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(m + 1, m);
    v.col(0).setOnes();
    v.col(0) /= v.col(0).norm();
    Index steps = m;
    for (Index k = 0; k < m; ++k) {
      Eigen::VectorXcd bx(n);
      for (Index i = 0; i < n; ++i) bx[i] = sys.b_diag[static_cast<std::size_t>(i)] * v(i, k);
      Eigen::VectorXcd w = lu.solve(bx);
      for (int pass = 0; pass < 2; ++pass) {
        const Eigen::VectorXcd proj = v.leftCols(k + 1).adjoint() * w;
        w -= v.leftCols(k + 1) * proj;
        h.col(k).head(k + 1) += proj;
      }
      h(k + 1, k) = w.norm();
      if (std::abs(h(k + 1, k)) < 1e-13) {
        steps = k + 1;
        break;
      }
      v.col(k + 1) = w / h(k + 1, k);
    }

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(h.topLeftCorner(steps, steps));
    require(es.info() == Eigen::Success, "solver-error", "Hessenberg eigensolve failed");

    std::vector<EigenPair> accepted;
    for (Index i = 0; i < steps; ++i) {
      const Complex mu = es.eigenvalues()[i];
      if (std::abs(mu) < 1e-14) continue;
      EigenPair p;
      p.lambda = sigma + 1.0 / mu;
      Eigen::VectorXcd x = v.leftCols(steps) * es.eigenvectors().col(i);
      const double nx = x.norm();
      if (nx == 0.0) continue;
      x /= nx;
      p.coeffs.assign(x.data(), x.data() + n);
      p.residual = gevp_residual(sys, p.coeffs, p.lambda);
      if (p.residual <= opts.residual_tol) accepted.push_back(std::move(p));
    }
    std::sort(accepted.begin(), accepted.end(), [&](const EigenPair& a, const EigenPair& b) {
      return target_less(opts.target, a.lambda, b.lambda);
    });
    // Drop near-duplicate Ritz copies: same eigenvalue AND (nearly) the same
    // invariant direction. Distinct eigenvectors of a degenerate eigenvalue
    // are kept.
    std::vector<EigenPair> unique;
    for (auto& p : accepted) {
      bool dup = false;
      for (const auto& u : unique) {
        if (std::abs(p.lambda - u.lambda) > 1e-10 + 1e-6 * std::abs(u.lambda)) continue;
        Complex overlap{0.0, 0.0};
        for (Index k = 0; k < n; ++k)
          overlap += std::conj(u.coeffs[static_cast<std::size_t>(k)]) *
                     p.coeffs[static_cast<std::size_t>(k)];
        if (std::abs(overlap) > 0.99) {
          dup = true;
          break;
        }
      }
      if (!dup) unique.push_back(std::move(p));
      if (static_cast<Index>(unique.size()) == opts.n_eig) break;
    }
    if (static_cast<Index>(unique.size()) >= opts.n_eig || steps < m || m >= std::min(n, opts.max_subspace))
    {
      require(static_cast<Index>(unique.size()) >= std::min(opts.n_eig, steps), "solver-error",
              "shift-invert Arnoldi converged only " + std::to_string(unique.size()) + " of " +
                  std::to_string(opts.n_eig) + " pairs at subspace " + std::to_string(m));
      if (static_cast<Index>(unique.size()) > opts.n_eig) unique.resize(static_cast<std::size_t>(opts.n_eig));
      return unique;
    }
    m = std::min<Index>(std::min(n, opts.max_subspace), (m * 8) / 5);
  }
}

std::vector<EigenPair> solve_largest_real(const GevpSystem& sys, const GevpOptions& opts) {
  // Plain Arnoldi on B^{-1} A; convergence to interior rightmost eigenvalues is
  // slow (the smallest-modulus target is the practical default).
  const Index n = sys.dim();
  const Index m = std::min(n, std::max<Index>(opts.max_subspace, 4 * opts.n_eig));
  Eigen::MatrixXcd v(n, m + 1);
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(m + 1, m);
  v.col(0).setOnes();
  v.col(0) /= v.col(0).norm();
  Index steps = m;
  for (Index k = 0; k < m; ++k) {
    CVector x(v.col(k).data(), v.col(k).data() + n);
    CVector ax = sys.A.matvec(x);
    Eigen::VectorXcd w(n);
    for (Index i = 0; i < n; ++i) w[i] = ax[static_cast<std::size_t>(i)] / sys.b_diag[static_cast<std::size_t>(i)];
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXcd proj = v.leftCols(k + 1).adjoint() * w;
      w -= v.leftCols(k + 1) * proj;
      h.col(k).head(k + 1) += proj;
    }
    h(k + 1, k) = w.norm();
    if (std::abs(h(k + 1, k)) < 1e-13) {
      steps = k + 1;
      break;
    }
    v.col(k + 1) = w / h(k + 1, k);
  }
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(h.topLeftCorner(steps, steps));
  require(es.info() == Eigen::Success, "solver-error", "Hessenberg eigensolve failed");

  std::vector<EigenPair> out;
  for (Index i = 0; i < steps; ++i) {
    EigenPair p;
    p.lambda = es.eigenvalues()[i];
    Eigen::VectorXcd x = v.leftCols(steps) * es.eigenvectors().col(i);
    x /= x.norm();
    p.coeffs.assign(x.data(), x.data() + n);
    p.residual = gevp_residual(sys, p.coeffs, p.lambda);
    if (p.residual <= opts.residual_tol) out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(), [&](const EigenPair& a, const EigenPair& b) {
    return target_less(EigTarget::largest_real, a.lambda, b.lambda);
  });
  if (static_cast<Index>(out.size()) > opts.n_eig) out.resize(static_cast<std::size_t>(opts.n_eig));
  return out;
}

}  // namespace

std::vector<EigenPair> solve_gevp(const GevpSystem& sys, const GevpOptions& opts) {
  require(opts.n_eig >= 1 && opts.n_eig < sys.dim(), "invalid-input",
          "n_eig must lie in [1, dim)");
  const bool dense =
      opts.method == GevpMethod::dense || (opts.method == GevpMethod::automatic && sys.dim() <= 2000);
  if (dense) return solve_dense(sys, opts);
  if (opts.target == EigTarget::largest_real) return solve_largest_real(sys, opts);
  return solve_shift_invert(sys, opts);
}

std::vector<EigenPair> order_and_normalize(const GevpSystem& sys, std::vector<EigenPair> pairs) {
  const Index n = sys.dim();
  for (auto& p : pairs) {
    require(static_cast<Index>(p.coeffs.size()) == n, "invalid-input",
            "eigenvector length mismatch");
    // Unit L^2 norm in the varphi convention: |c_k0|^2 + sum |c_k|^2 / eta_k = 1.
    double b_norm2 = 0.0;
    for (Index k = 0; k < n; ++k)
      b_norm2 += sys.b_diag[static_cast<std::size_t>(k)] * std::norm(p.coeffs[static_cast<std::size_t>(k)]);
    require(b_norm2 > 0.0, "invalid-input", "zero eigenvector");
    const double inv = 1.0 / std::sqrt(b_norm2);
    for (auto& c : p.coeffs) c *= inv;

    // Rayleigh refinement: lambda = c^H A c with c^H B c = 1. For exactly
    // skew-Hermitian advection this pins Re lambda = -theta E to rounding.
    const CVector ac = sys.A.matvec(p.coeffs);
    Complex quotient{0.0, 0.0};
    for (Index k = 0; k < n; ++k)
      quotient += std::conj(p.coeffs[static_cast<std::size_t>(k)]) * ac[static_cast<std::size_t>(k)];
    p.lambda = quotient;

    double energy = 0.0;
    for (Index k = 0; k < n; ++k)
      if (k != sys.k0) energy += std::norm(p.coeffs[static_cast<std::size_t>(k)]);
    p.dirichlet_energy = energy;
    p.l2_norm = 1.0;
    p.residual = gevp_residual(sys, p.coeffs, p.lambda);

    // Phase fix: the largest-magnitude coefficient becomes real positive.
    Index imax = 0;
    double amax = -1.0;
    for (Index k = 0; k < n; ++k) {
      const double a = std::abs(p.coeffs[static_cast<std::size_t>(k)]);
      if (a > amax) {
        amax = a;
        imax = k;
      }
    }
    if (amax > 0.0) {
      const Complex rot = std::conj(p.coeffs[static_cast<std::size_t>(imax)]) / amax;
      for (auto& c : p.coeffs) c *= rot;
    }
  }

  // Energy ordering; ties resolved by |Im lambda| then by solver order, which the
  // stable dirichlet_sort tie rule implements after this pre-sort.
  std::vector<Index> pre(pairs.size());
  std::iota(pre.begin(), pre.end(), Index{0});
  std::stable_sort(pre.begin(), pre.end(), [&](Index a, Index b) {
    return std::abs(pairs[static_cast<std::size_t>(a)].lambda.imag()) <
           std::abs(pairs[static_cast<std::size_t>(b)].lambda.imag());
  });
  std::vector<double> energies(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i)
    energies[i] = pairs[static_cast<std::size_t>(pre[i])].dirichlet_energy;
  const std::vector<Index> perm = dirichlet_sort(energies);

  std::vector<EigenPair> out;
  out.reserve(pairs.size());
  for (Index i : perm) out.push_back(std::move(pairs[static_cast<std::size_t>(pre[static_cast<std::size_t>(i)])]));
  return out;
}

Eigen::MatrixXcd field_on_grid(const CVector& phi_coeffs, const Eigen::VectorXcd& a_values,
                               const TruncationParams& t, Index n1, Index n2) {
  require(n1 >= 1 && n2 >= 1, "invalid-input", "grid sizes must be >= 1");
  require(static_cast<Index>(phi_coeffs.size()) == t.ell_total(), "invalid-input",
          "coefficient length mismatch");
  require(a_values.size() == t.size_A(), "invalid-input", "a-values length mismatch");

  // Contract the A factor, then evaluate the 2-d Fourier sum separably.
  const Index nj = t.size_X1(), nk = t.size_X2();
  Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(nj, nk);
  for (Index idx = 0; idx < t.ell_total(); ++idx) {
    const MultiIndex mi = unflatten_index(idx, t);
    g(mi.j + t.ell_X1, mi.k + t.ell_X2) +=
        phi_coeffs[static_cast<std::size_t>(idx)] * a_values[mi.i - t.a_first()];
  }

  Eigen::MatrixXcd e2(nk, n2), e1(n1, nj);
  for (Index k = 0; k < nk; ++k)
    for (Index x = 0; x < n2; ++x) {
      const double ang = 2.0 * M_PI * static_cast<double>(x) / static_cast<double>(n2) *
                         static_cast<double>(k - t.ell_X2);
      e2(k, x) = Complex{std::cos(ang), std::sin(ang)};
    }
  for (Index x = 0; x < n1; ++x)
    for (Index j = 0; j < nj; ++j) {
      const double ang = 2.0 * M_PI * static_cast<double>(x) / static_cast<double>(n1) *
                         static_cast<double>(j - t.ell_X1);
      e1(x, j) = Complex{std::cos(ang), std::sin(ang)};
    }
  return e1 * (g * e2);
}

PatternField evaluate_pattern(const EigenPair& pair, const std::vector<double>& eta,
                              const Eigen::VectorXcd& a_values, const TruncationParams& t,
                              Index n1, Index n2) {
  require(static_cast<Index>(pair.coeffs.size()) == t.ell_total(), "invalid-input",
          "coefficient length mismatch");
  CVector phi_coeffs(pair.coeffs.size());
  for (Index k = 0; k < t.ell_total(); ++k) {
    const double e = eta[static_cast<std::size_t>(k)];
    phi_coeffs[static_cast<std::size_t>(k)] =
        pair.coeffs[static_cast<std::size_t>(k)] * (e == 0.0 ? 1.0 : 1.0 / std::sqrt(e));
  }
  const Eigen::MatrixXcd z = field_on_grid(phi_coeffs, a_values, t, n1, n2);
  PatternField f;
  f.n1 = n1;
  f.n2 = n2;
  f.values.resize(static_cast<std::size_t>(n1 * n2));
  for (Index a = 0; a < n1; ++a)
    for (Index b = 0; b < n2; ++b) f.values[static_cast<std::size_t>(a * n2 + b)] = z(a, b);
  return f;
}

Eigen::VectorXcd fourier_a_values(double a, const TruncationParams& t) {
  require(t.a_basis == ABasis::fourier, "invalid-input", "Fourier a-values need a Fourier basis");
  Eigen::VectorXcd v(t.size_A());
  for (Index i = -t.ell_A; i <= t.ell_A; ++i)
    v[i + t.ell_A] = Complex{std::cos(static_cast<double>(i) * a), std::sin(static_cast<double>(i) * a)};
  return v;
}

Eigen::VectorXcd datadriven_a_values(const MarkovBasis& basis, Index sample,
                                     const TruncationParams& t) {
  require(t.a_basis == ABasis::datadriven, "invalid-input",
          "data-driven a-values need a data-driven basis");
  require(sample >= 0 && sample < basis.count(), "unsupported-state",
          "state must index a training sample");
  require(t.ell_A <= basis.n_eig(), "invalid-input", "ell_A exceeds the basis size");
  Eigen::VectorXcd v(t.size_A());
  for (Index i = 0; i < t.ell_A; ++i) v[i] = Complex{basis.phi(sample, i), 0.0};
  return v;
}

}  // namespace kst
