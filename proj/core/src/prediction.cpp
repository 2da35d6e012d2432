#include "kst/prediction.hpp"

#include <cmath>

#include "kst/analytic_generators.hpp"
#include "kst/errors.hpp"

namespace kst {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0.0 ? a + kTwoPi : a;
}

}  // namespace

ObservableCoeffs observable_f1(const TruncationParams& t) {
  ObservableCoeffs f;
  f.label = "f1";
  f.b.assign(static_cast<std::size_t>(t.ell_total()), {0.0, 0.0});
  f.b[static_cast<std::size_t>(flatten_index({t.a_constant(), 1, 0}, t))] = {1.0, 0.0};
  return f;
}

ObservableCoeffs observable_f2(const TruncationParams& t) {
  ObservableCoeffs f;
  f.label = "f2";
  f.b.assign(static_cast<std::size_t>(t.ell_total()), {0.0, 0.0});
  f.b[static_cast<std::size_t>(flatten_index({t.a_constant(), 0, 1}, t))] = {1.0, 0.0};
  return f;
}

ObservableCoeffs project_observable_modes(const std::vector<ModeCoeff>& modes,
                                          const TruncationParams& t) {
  ObservableCoeffs f;
  f.b.assign(static_cast<std::size_t>(t.ell_total()), {0.0, 0.0});
  for (const auto& m : modes) {
    require(std::isfinite(m.value.real()) && std::isfinite(m.value.imag()), "invalid-input",
            "non-finite observable coefficient");
    f.b[static_cast<std::size_t>(flatten_index(m.idx, t))] += m.value;
  }
  return f;
}

ObservableCoeffs project_observable_grid(const CVector& samples, Index g1, Index g2,
                                         const TruncationParams& t) {
  require(g1 >= 1 && g2 >= 1, "invalid-input", "grid sizes must be >= 1");
  require(static_cast<Index>(samples.size()) == g1 * g2, "invalid-input",
          "sample count mismatch");
  for (const auto& v : samples)
    require(std::isfinite(v.real()) && std::isfinite(v.imag()), "invalid-input",
            "non-finite grid sample");

  ObservableCoeffs f;
  f.b.assign(static_cast<std::size_t>(t.ell_total()), {0.0, 0.0});
  const double norm = 1.0 / (static_cast<double>(g1) * static_cast<double>(g2));
  for (Index j = -t.ell_X1; j <= t.ell_X1; ++j)
    for (Index k = -t.ell_X2; k <= t.ell_X2; ++k) {
      Complex acc{0.0, 0.0};
      for (Index a = 0; a < g1; ++a) {
        const double x1 = kTwoPi * static_cast<double>(a) / static_cast<double>(g1);
        for (Index b = 0; b < g2; ++b) {
          const double x2 = kTwoPi * static_cast<double>(b) / static_cast<double>(g2);
          const double ang = -(static_cast<double>(j) * x1 + static_cast<double>(k) * x2);
          acc += samples[static_cast<std::size_t>(a * g2 + b)] *
                 Complex{std::cos(ang), std::sin(ang)};
        }
      }
      f.b[static_cast<std::size_t>(flatten_index({t.a_constant(), j, k}, t))] = acc * norm;
    }
  return f;
}

StepSequenceResult evolve_observable(const GeneratorMatrix& g, const ObservableCoeffs& f,
                                     double tilde_tau, Index n_steps, bool renormalize,
                                     const LejaOptions& opts) {
  return step_sequence(g.L, f.b, tilde_tau, n_steps, renormalize, opts);
}

void evolve_observable_cb(const GeneratorMatrix& g, const ObservableCoeffs& f, double tilde_tau,
                          Index n_steps, bool renormalize,
                          const std::function<void(Index, const CVector&)>& on_step,
                          const LejaOptions& opts) {
  step_sequence_cb(g.L, f.b, tilde_tau, n_steps, renormalize, on_step, opts);
}

StepSequenceResult evolve_density(const GeneratorMatrix& g, const DensityField& rho,
                                  double tilde_tau, Index n_steps, const LejaOptions& opts) {
  const SparseComplexMatrix l_adj = g.L.adjoint();
  return step_sequence(l_adj, rho.b, tilde_tau, n_steps, /*renormalize=*/false, opts);
}

void evolve_density_cb(const GeneratorMatrix& g, const DensityField& rho, double tilde_tau,
                       Index n_steps, const std::function<void(Index, const CVector&)>& on_step,
                       const LejaOptions& opts) {
  const SparseComplexMatrix l_adj = g.L.adjoint();
  step_sequence_cb(l_adj, rho.b, tilde_tau, n_steps, /*renormalize=*/false, on_step, opts);
}

PositionEstimate tracer_position_estimate(const CVector& b1_t, const CVector& b2_t,
                                          const Eigen::VectorXcd& a_values,
                                          const TruncationParams& t, Index n1, Index n2) {
  const Eigen::MatrixXcd z1 = field_on_grid(b1_t, a_values, t, n1, n2);
  const Eigen::MatrixXcd z2 = field_on_grid(b2_t, a_values, t, n1, n2);

  PositionEstimate est;
  est.n1 = n1;
  est.n2 = n2;
  const auto total = static_cast<std::size_t>(n1 * n2);
  est.x1.resize(total);
  est.x2.resize(total);
  est.mag1.resize(total);
  est.mag2.resize(total);
  est.low_confidence.resize(total);
  for (Index a = 0; a < n1; ++a)
    for (Index b = 0; b < n2; ++b) {
      const auto p = static_cast<std::size_t>(a * n2 + b);
      est.x1[p] = wrap_angle(std::arg(z1(a, b)));
      est.x2[p] = wrap_angle(std::arg(z2(a, b)));
      est.mag1[p] = std::abs(z1(a, b));
      est.mag2[p] = std::abs(z2(a, b));
      // Diffusion that has destroyed most of the phase information shows up as
      // a collapsed modulus; flag rather than suppress.
      est.low_confidence[p] = est.mag1[p] < 0.1 || est.mag2[p] < 0.1;
    }
  return est;
}

MarginalResult marginal_density(const CVector& rho_coeffs, const TruncationParams& t,
                                Index n_grid) {
  require(n_grid >= 1, "invalid-input", "n_grid must be >= 1");
  require(static_cast<Index>(rho_coeffs.size()) == t.ell_total(), "invalid-input",
          "coefficient length mismatch");

  // Marginalization over A picks the constant-on-A block of coefficients.
  const Index nj = t.size_X1(), nk = t.size_X2();
  Eigen::MatrixXcd g(nj, nk);
  for (Index j = -t.ell_X1; j <= t.ell_X1; ++j)
    for (Index k = -t.ell_X2; k <= t.ell_X2; ++k)
      g(j + t.ell_X1, k + t.ell_X2) =
          rho_coeffs[static_cast<std::size_t>(flatten_index({t.a_constant(), j, k}, t))];

  MarginalResult out;
  out.n_grid = n_grid;
  out.mass = g(t.ell_X1, t.ell_X2).real();
  out.sigma.assign(static_cast<std::size_t>(n_grid * n_grid), 0.0);
  out.sigma1.assign(static_cast<std::size_t>(n_grid), 0.0);
  out.sigma2.assign(static_cast<std::size_t>(n_grid), 0.0);

  Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(1);
  TruncationParams tx = t;
  tx.a_basis = ABasis::datadriven;
  tx.ell_A = 1;
  tx.ell_v = 1;
  CVector flat(static_cast<std::size_t>(nj * nk));
  for (Index j = 0; j < nj; ++j)
    for (Index k = 0; k < nk; ++k)
      flat[static_cast<std::size_t>((j * nk) + k)] = g(j, k);
  const Eigen::MatrixXcd field = field_on_grid(flat, ones, tx, n_grid, n_grid);

  double max_imag = 0.0;
  for (Index a = 0; a < n_grid; ++a)
    for (Index b = 0; b < n_grid; ++b) {
      max_imag = std::max(max_imag, std::abs(field(a, b).imag()));
      out.sigma[static_cast<std::size_t>(a * n_grid + b)] = field(a, b).real();
    }
  out.max_imag_residue = max_imag;

  // 1-d marginals against normalized Haar: k = 0 / j = 0 sub-blocks.
  for (Index gpt = 0; gpt < n_grid; ++gpt) {
    const double x = kTwoPi * static_cast<double>(gpt) / static_cast<double>(n_grid);
    Complex s1{0.0, 0.0}, s2{0.0, 0.0};
    for (Index j = -t.ell_X1; j <= t.ell_X1; ++j)
      s1 += g(j + t.ell_X1, t.ell_X2) *
            Complex{std::cos(static_cast<double>(j) * x), std::sin(static_cast<double>(j) * x)};
    for (Index k = -t.ell_X2; k <= t.ell_X2; ++k)
      s2 += g(t.ell_X1, k + t.ell_X2) *
            Complex{std::cos(static_cast<double>(k) * x), std::sin(static_cast<double>(k) * x)};
    out.sigma1[static_cast<std::size_t>(gpt)] = s1.real();
    out.sigma2[static_cast<std::size_t>(gpt)] = s2.real();
  }
  return out;
}

namespace {

CVector von_mises_x_coeffs(double kappa_tilde, double xbar1, double xbar2,
                           const TruncationParams& t) {
  CVector coeffs(static_cast<std::size_t>(t.size_X1() * t.size_X2()));
  for (Index j = -t.ell_X1; j <= t.ell_X1; ++j) {
    const double rj = kappa_tilde > 0.0 ? bessel_ratio(j, kappa_tilde) : (j == 0 ? 1.0 : 0.0);
    for (Index k = -t.ell_X2; k <= t.ell_X2; ++k) {
      const double rk = kappa_tilde > 0.0 ? bessel_ratio(k, kappa_tilde) : (k == 0 ? 1.0 : 0.0);
      const double ang = -(static_cast<double>(j) * xbar1 + static_cast<double>(k) * xbar2);
      coeffs[static_cast<std::size_t>((j + t.ell_X1) * t.size_X2() + (k + t.ell_X2))] =
          rj * rk * Complex{std::cos(ang), std::sin(ang)};
    }
  }
  return coeffs;
}

}  // namespace

DensityField gaussian_initial_density_fourier(double kappa_tilde, double xbar1, double xbar2,
                                              const TruncationParams& t) {
  require(kappa_tilde >= 0.0, "invalid-input", "kappa_tilde must be >= 0");
  require(t.a_basis == ABasis::fourier, "invalid-input", "Fourier driver basis expected");
  const CVector x_coeffs = von_mises_x_coeffs(kappa_tilde, xbar1, xbar2, t);

  DensityField rho;
  rho.b.assign(static_cast<std::size_t>(t.ell_total()), {0.0, 0.0});
  for (Index i = -t.ell_A; i <= t.ell_A; ++i) {
    const double ri = kappa_tilde > 0.0 ? bessel_ratio(i, kappa_tilde) : (i == 0 ? 1.0 : 0.0);
    if (ri == 0.0) continue;
    for (Index j = -t.ell_X1; j <= t.ell_X1; ++j)
      for (Index k = -t.ell_X2; k <= t.ell_X2; ++k)
        rho.b[static_cast<std::size_t>(flatten_index({i, j, k}, t))] =
            ri * x_coeffs[static_cast<std::size_t>((j + t.ell_X1) * t.size_X2() + (k + t.ell_X2))];
  }
  rho.mass = rho.b[static_cast<std::size_t>(flatten_index({0, 0, 0}, t))];
  return rho;
}

DensityField gaussian_initial_density_datadriven(double kappa_tilde, double xbar1, double xbar2,
                                                 const Eigen::VectorXd& anchor,
                                                 const SnapshotSet& snapshots,
                                                 const MarkovBasis& basis,
                                                 const TruncationParams& t) {
  require(kappa_tilde >= 0.0, "invalid-input", "kappa_tilde must be >= 0");
  require(t.a_basis == ABasis::datadriven, "invalid-input", "data-driven basis expected");
  require(anchor.size() == snapshots.dim(), "invalid-input", "anchor dimension mismatch");
  const Index n = basis.count();
  require(snapshots.count() == n, "invalid-input", "snapshot/basis sample count mismatch");
  require(t.ell_A <= basis.n_eig(), "invalid-input", "ell_A exceeds the basis size");

  // Out-of-sample bandwidth at the anchor, then one kernel row.
  Eigen::VectorXd d2(n);
  for (Index i = 0; i < n; ++i)
    d2[i] = std::max(0.0, (snapshots.data.row(i).transpose() - anchor).squaredNorm());

  std::vector<double> sorted(d2.data(), d2.data() + n);
  std::sort(sorted.begin(), sorted.end());
  const Index k_nn = std::min<Index>(basis.k_nn_density, n);
  double mean = 0.0;
  for (Index j = 1; j < k_nn; ++j) mean += sorted[static_cast<std::size_t>(j)];
  mean /= static_cast<double>(k_nn - 1);
  require(mean > 0.0, "degenerate-bandwidth", "anchor duplicates the training samples");
  const double rt_anchor = std::sqrt(mean);

  double sigma_acc = 0.0;
  for (Index i = 0; i < n; ++i)
    sigma_acc += std::exp(-d2[i] / (basis.eps_pre * rt_anchor * basis.r_tilde[i]));
  const double m_dim = basis.dim_est;
  const double sigma_anchor =
      sigma_acc * std::exp(-0.5 * m_dim * std::log(M_PI * basis.eps_pre * rt_anchor * rt_anchor)) /
      static_cast<double>(n);
  require(sigma_anchor > 0.0, "unreachable-anchor", "density estimate vanished at the anchor");
  const double r_anchor = std::exp(-std::log(sigma_anchor) / m_dim);

  Eigen::VectorXd kernel_row(n);
  double k_max = 0.0;
  for (Index i = 0; i < n; ++i) {
    kernel_row[i] = std::exp(-d2[i] / (basis.eps * r_anchor * basis.r[i]));
    k_max = std::max(k_max, kernel_row[i]);
  }
  require(k_max >= 1e-300, "unreachable-anchor", "all kernel values vanish at the anchor");

  const double d_anchor = kernel_row.cwiseQuotient(basis.q).sum();
  Eigen::VectorXd rho_a = kernel_row.array() / (d_anchor * basis.q.array());

  // beta-weighted projection of rho_A onto the basis, then the von Mises factor.
  Eigen::VectorXd proj(t.ell_A);
  const Eigen::VectorXd w = basis.beta / static_cast<double>(n);
  for (Index i = 0; i < t.ell_A; ++i) proj[i] = basis.phi.col(i).cwiseProduct(w).dot(rho_a);
  require(std::abs(proj[0]) > 0.0, "unreachable-anchor", "zero total mass at the anchor");

  const CVector x_coeffs = von_mises_x_coeffs(kappa_tilde, xbar1, xbar2, t);
  DensityField rho;
  rho.b.assign(static_cast<std::size_t>(t.ell_total()), {0.0, 0.0});
  for (Index i = 0; i < t.ell_A; ++i) {
    const double ri = proj[i] / proj[0];  // mass-normalized
    for (Index j = -t.ell_X1; j <= t.ell_X1; ++j)
      for (Index k = -t.ell_X2; k <= t.ell_X2; ++k)
        rho.b[static_cast<std::size_t>(flatten_index({i, j, k}, t))] =
            ri * x_coeffs[static_cast<std::size_t>((j + t.ell_X1) * t.size_X2() + (k + t.ell_X2))];
  }
  rho.mass = rho.b[static_cast<std::size_t>(flatten_index({0, 0, 0}, t))];
  return rho;
}

EigForecast predict_observable_eig(const std::vector<EigenPair>& pairs,
                                   const std::vector<double>& eta, const CVector& f_phi,
                                   double t_forecast) {
  require(!pairs.empty(), "invalid-input", "need at least one eigenpair");
  const Index n = static_cast<Index>(f_phi.size());
  const Index r = static_cast<Index>(pairs.size());
  require(static_cast<Index>(eta.size()) == n, "invalid-input", "eta length mismatch");

  Eigen::MatrixXcd z(n, r);
  for (Index c = 0; c < r; ++c) {
    require(static_cast<Index>(pairs[static_cast<std::size_t>(c)].coeffs.size()) == n,
            "invalid-input", "eigenvector length mismatch");
    for (Index k = 0; k < n; ++k) {
      const double e = eta[static_cast<std::size_t>(k)];
      z(k, c) = pairs[static_cast<std::size_t>(c)].coeffs[static_cast<std::size_t>(k)] *
                (e == 0.0 ? 1.0 : 1.0 / std::sqrt(e));
    }
  }
  Eigen::VectorXcd f(n);
  for (Index k = 0; k < n; ++k) f[k] = f_phi[static_cast<std::size_t>(k)];

  Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(z);
  const Eigen::VectorXcd c = qr.solve(f);

  EigForecast out;
  out.lsq_residual = (z * c - f).norm();
  const auto& rdiag = qr.matrixR().diagonal();
  double rmax = 0.0, rmin = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < std::min<Index>(r, rdiag.size()); ++i) {
    rmax = std::max(rmax, std::abs(rdiag[i]));
    rmin = std::min(rmin, std::abs(rdiag[i]));
  }
  out.ill_conditioned = !(rmin > 0.0) || rmax / rmin > 1e8;

  Eigen::VectorXcd evolved = Eigen::VectorXcd::Zero(n);
  for (Index k = 0; k < r; ++k)
    evolved += std::exp(t_forecast * pairs[static_cast<std::size_t>(k)].lambda) * c[k] * z.col(k);
  out.coeffs.assign(evolved.data(), evolved.data() + n);
  return out;
}

}  // namespace kst
