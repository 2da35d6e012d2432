#include "kst/datadriven_generator.hpp"

#include <cmath>

#include "kst/errors.hpp"
#include "kst/parallel.hpp"

namespace kst {

Eigen::MatrixXd finite_diff_generator(const MarkovBasis& basis, double tau, Index ell_A,
                                      FdEndpoint endpoint) {
  require(tau > 0.0, "invalid-input", "tau must be positive");
  const Index n = basis.count();
  require(n >= 3, "invalid-input", "need at least 3 samples");
  require(ell_A >= 1 && ell_A <= basis.n_eig(), "invalid-input", "ell_A must lie in [1, n_eig]");

  // g_l(n) = (phi_l(a_{n+1}) - phi_l(a_{n-1})) / (2 tau) on interior samples.
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, ell_A);
  const auto phi = basis.phi.leftCols(ell_A);
  g.middleRows(1, n - 2) = (phi.bottomRows(n - 2) - phi.topRows(n - 2)) / (2.0 * tau);
  if (endpoint == FdEndpoint::extrapolate && n >= 5) {
    g.row(0) = 2.0 * g.row(1) - g.row(2);
    g.row(n - 1) = 2.0 * g.row(n - 2) - g.row(n - 3);
  }

  const Eigen::VectorXd w = basis.beta / static_cast<double>(n);
  return phi.transpose() * w.asDiagonal() * g;
}

Eigen::MatrixXcd l96_fourier_modes(const Eigen::MatrixXd& states, Index J) {
  const Index dim = states.cols();
  require(dim == 2 * J + 1, "invalid-input", "state dimension must equal 2J+1");
  const Index n = states.rows();
  Eigen::MatrixXcd modes(n, dim);
  const double norm = 1.0 / static_cast<double>(dim);
  Eigen::MatrixXcd dft(dim, dim);
  for (Index q = -J; q <= J; ++q)
    for (Index j = 0; j < dim; ++j) {
      const double angle = -2.0 * M_PI * static_cast<double>(q) * static_cast<double>(j) /
                           static_cast<double>(dim);
      dft(j, q + J) = norm * Complex{std::cos(angle), std::sin(angle)};
    }
  modes = states * dft;
  return modes;
}

namespace {

// beta-weighted projection of a complex time series onto the leading basis columns.
Eigen::VectorXcd project_on_basis(const MarkovBasis& basis, const Eigen::VectorXcd& series,
                                  Index ell) {
  const Index n = basis.count();
  const Eigen::VectorXcd weighted =
      series.cwiseProduct(basis.beta.cast<Complex>()) / static_cast<double>(n);
  return basis.phi.leftCols(ell).transpose().cast<Complex>() * weighted;
}

}  // namespace

VelocityCoeffs velocity_coeffs_l96(const SnapshotSet& l96_snapshots, const MarkovBasis& basis,
                                   Index J, Index ell_v) {
  l96_snapshots.validate();
  require(l96_snapshots.data.cols() == 2 * J + 1, "invalid-input",
          "snapshot dimension must equal 2J+1");
  require(l96_snapshots.data.rows() == basis.count(), "invalid-input",
          "snapshot/basis sample count mismatch");
  require(ell_v >= 1 && ell_v <= basis.n_eig(), "invalid-input", "ell_v must lie in [1, n_eig]");

  const Eigen::MatrixXcd modes = l96_fourier_modes(l96_snapshots.data, J);

  VelocityCoeffs v;
  v.ell_v = ell_v;
  v.q_max = J;
  v.r_max = 0;
  v.v1.assign(static_cast<std::size_t>(ell_v * (2 * J + 1)), {0.0, 0.0});
  v.v2.assign(static_cast<std::size_t>(ell_v * (2 * J + 1)), {0.0, 0.0});

  for (Index q = -J; q <= J; ++q) {
    const Eigen::VectorXcd coeff = project_on_basis(basis, modes.col(q + J), ell_v);
    for (Index p = 0; p < ell_v; ++p) {
      if (q == 0)
        v.v1[v.idx(p, 0, 0)] = coeff[p];
      else
        v.v2[v.idx(p, q, 0)] = coeff[p];
    }
  }
  return v;
}

VelocityCoeffs velocity_coeffs_vortex(const Eigen::VectorXd& phases, const MarkovBasis& basis,
                                      const VortexParams& p, Index q_max, Index r_max,
                                      Index ell_v) {
  p.validate();
  const Index n = basis.count();
  require(phases.size() == n, "invalid-input", "phase/basis sample count mismatch");
  require(ell_v >= 1 && ell_v <= basis.n_eig(), "invalid-input", "ell_v must lie in [1, n_eig]");

  VelocityCoeffs v;
  v.ell_v = ell_v;
  v.q_max = q_max;
  v.r_max = r_max;
  const std::size_t total = static_cast<std::size_t>(ell_v * (2 * q_max + 1) * (2 * r_max + 1));
  v.v1.assign(total, {0.0, 0.0});
  v.v2.assign(total, {0.0, 0.0});

  // zeta_hat_qr(a) sampled on the training phases; v1 = -i r zeta, v2 = i q zeta
  // (exact divergence-free pairing).
  for (Index q = -q_max; q <= q_max; ++q) {
    const double rq = bessel_ratio(q, p.kappa);
    for (Index r = -r_max; r <= r_max; ++r) {
      const double rr = bessel_ratio(r, p.kappa);
      if (rq * rr == 0.0) continue;
      Eigen::VectorXcd series(n);
      if (p.flavor == VortexFlavor::moving) {
        for (Index m = 0; m < n; ++m) {
          const double ang = -static_cast<double>(q) * phases[m];
          series[m] = rq * rr * Complex{std::cos(ang), std::sin(ang)};
        }
      } else {
        const double parity = q % 2 == 0 ? 1.0 : -1.0;
        for (Index m = 0; m < n; ++m)
          series[m] = p.C * rq * rr *
                      Complex{std::cos(phases[m]) + parity * std::sin(phases[m]), 0.0};
      }
      const Eigen::VectorXcd zeta = project_on_basis(basis, series, ell_v);
      for (Index pp = 0; pp < ell_v; ++pp) {
        v.v1[v.idx(pp, q, r)] = Complex{0.0, -static_cast<double>(r)} * zeta[pp];
        v.v2[v.idx(pp, q, r)] = Complex{0.0, static_cast<double>(q)} * zeta[pp];
      }
    }
  }
  return v;
}

SparseComplexMatrix assemble_wx_datadriven(const TripleProducts& c, const VelocityCoeffs& v,
                                           const TruncationParams& t, double drop_tol) {
  t.validate();
  require(t.a_basis == ABasis::datadriven, "invalid-input",
          "assemble_wx_datadriven expects a data-driven A basis");
  require(v.ell_v <= c.ell_A, "invalid-input", "ell_v must not exceed the triple-product order");
  require(t.ell_A <= c.ell_A, "invalid-input", "ell_A must not exceed the triple-product order");

  // Contract the basis index first: B[(i,l)](q,r) = sum_p c_{ilp} v_{pqr}.
  const Index na = t.ell_A;
  const Index nq = 2 * v.q_max + 1;
  const Index nr = 2 * v.r_max + 1;
  const std::size_t blk = static_cast<std::size_t>(nq * nr);
  CVector b1(static_cast<std::size_t>(na * na) * blk, {0.0, 0.0});
  CVector b2(b1.size());
  parallel_for(0, na, [&](Index i) {
    for (Index l = 0; l < na; ++l) {
      const std::size_t base = static_cast<std::size_t>(i * na + l) * blk;
      for (Index p = 0; p < v.ell_v; ++p) {
        const double cilp = c.at(i, l, p);
        if (cilp == 0.0) continue;
        const std::size_t vb = static_cast<std::size_t>(p) * blk;
        for (std::size_t s = 0; s < blk; ++s) {
          b1[base + s] += cilp * v.v1[vb + s];
          b2[base + s] += cilp * v.v2[vb + s];
        }
      }
    }
  });

  const Index n = t.ell_total();
  std::vector<std::vector<std::pair<Index, Complex>>> rows(static_cast<std::size_t>(n));
  parallel_for(0, n, [&](Index row) {
    const MultiIndex ri = unflatten_index(row, t);
    auto& out = rows[static_cast<std::size_t>(row)];
    const Index m_lo = std::max(-t.ell_X1, ri.j - v.q_max);
    const Index m_hi = std::min(t.ell_X1, ri.j + v.q_max);
    const Index n_lo = std::max(-t.ell_X2, ri.k - v.r_max);
    const Index n_hi = std::min(t.ell_X2, ri.k + v.r_max);
    for (Index l = 0; l < na; ++l) {
      const std::size_t base = static_cast<std::size_t>(ri.i * na + l) * blk;
      for (Index m = m_lo; m <= m_hi; ++m) {
        const Index q = ri.j - m;
        for (Index nn = n_lo; nn <= n_hi; ++nn) {
          const Index r = ri.k - nn;
          const std::size_t s =
              static_cast<std::size_t>((q + v.q_max) * nr + (r + v.r_max));
          const Complex val =
              Complex{0.0, 1.0} * (static_cast<double>(m) * b1[base + s] +
                                   static_cast<double>(nn) * b2[base + s]);
          if (std::abs(val) >= drop_tol)
            out.emplace_back(flatten_index({l, m, nn}, t), val);
        }
      }
    }
  });

  SparseRowBuilder builder(n, n);
  for (Index r = 0; r < n; ++r)
    for (const auto& [col, val] : rows[static_cast<std::size_t>(r)]) builder.add(r, col, val);
  return builder.finalize(drop_tol);
}

GeneratorMatrix assemble_generator_datadriven(const Eigen::MatrixXd& U,
                                              const SparseComplexMatrix& WX,
                                              const Eigen::VectorXd& eta_A,
                                              const TruncationParams& t, double theta,
                                              bool antisymmetrize_u) {
  t.validate();
  require(theta >= 0.0, "invalid-input", "theta must be >= 0");
  require(U.rows() == t.ell_A && U.cols() == t.ell_A, "invalid-input", "U dimension mismatch");
  require(eta_A.size() >= t.ell_A, "invalid-input", "eta_A too short");
  const Index n = t.ell_total();
  require(WX.nrows() == n && WX.ncols() == n, "invalid-input", "WX dimension mismatch");

  Eigen::MatrixXd u_eff = antisymmetrize_u ? ((U - U.transpose()) / 2.0).eval() : U;

  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(WX.nnz()) +
               static_cast<std::size_t>(n) * static_cast<std::size_t>(t.ell_A + 1));
  for (Index r = 0; r < n; ++r)
    for (Index p = WX.row_ptr()[static_cast<std::size_t>(r)]; p < WX.row_ptr()[static_cast<std::size_t>(r) + 1]; ++p)
      trip.push_back({r, static_cast<Index>(WX.cols()[static_cast<std::size_t>(p)]),
                      WX.values()[static_cast<std::size_t>(p)]});

  // lift(U): couples A indices at fixed (j, k).
  for (Index r = 0; r < n; ++r) {
    const MultiIndex ri = unflatten_index(r, t);
    for (Index l = 0; l < t.ell_A; ++l) {
      const double u = u_eff(ri.i, l);
      if (u != 0.0) trip.push_back({r, flatten_index({l, ri.j, ri.k}, t), Complex{u, 0.0}});
    }
  }

  GeneratorMatrix g;
  g.theta = theta;
  g.provenance = GeneratorProvenance::datadriven;
  g.trunc = t;
  g.eta_diag.resize(static_cast<std::size_t>(n));
  for (Index r = 0; r < n; ++r) {
    const MultiIndex mi = unflatten_index(r, t);
    g.eta_diag[static_cast<std::size_t>(r)] =
        eta_A[mi.i] + static_cast<double>(mi.j * mi.j + mi.k * mi.k);
  }
  if (theta != 0.0)
    for (Index r = 0; r < n; ++r)
      trip.push_back({r, r, Complex{-theta * g.eta_diag[static_cast<std::size_t>(r)], 0.0}});
  g.L = SparseComplexMatrix::from_triplets(n, n, std::move(trip));
  return g;
}

ReconstructionError reconstruction_error(const Eigen::MatrixXcd& modes, const MarkovBasis& basis,
                                         Index ell_A) {
  require(ell_A >= 1 && ell_A <= basis.n_eig(), "invalid-input", "ell_A must lie in [1, n_eig]");
  const Index n = basis.count();
  require(modes.rows() == n, "invalid-input", "mode/basis sample count mismatch");

  ReconstructionError err;
  err.abs_rms.resize(modes.cols());
  err.rel_rms.resize(modes.cols());
  const Eigen::VectorXd w = basis.beta / static_cast<double>(n);
  for (Index c = 0; c < modes.cols(); ++c) {
    const Eigen::VectorXcd coeff = project_on_basis(basis, modes.col(c), ell_A);
    const Eigen::VectorXcd residual =
        modes.col(c) - basis.phi.leftCols(ell_A).cast<Complex>() * coeff;
    const double num = std::sqrt((residual.cwiseAbs2().cwiseProduct(w)).sum());
    const double den = std::sqrt((modes.col(c).cwiseAbs2().cwiseProduct(w)).sum());
    err.abs_rms[c] = num;
    err.rel_rms[c] = den > 0.0 ? num / den : std::numeric_limits<double>::quiet_NaN();
  }
  return err;
}

}  // namespace kst
