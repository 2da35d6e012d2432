#include "kst/reference_sim.hpp"

#include <algorithm>
#include <cmath>

#include "kst/datadriven_generator.hpp"
#include "kst/errors.hpp"
#include "kst/io.hpp"
#include "kst/parallel.hpp"
#include "kst/rng.hpp"

namespace kst {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0.0 ? a + kTwoPi : a;
}

}  // namespace

Eigen::VectorXd l96_rhs(const Eigen::VectorXd& s, double F) {
  const Index n = s.size();
  require(n >= 4, "invalid-input", "L96 needs at least 4 variables");
  Eigen::VectorXd u(n);
  for (Index j = 0; j < n; ++j) {
    const Index jp1 = (j + 1) % n;
    const Index jm1 = (j - 1 + n) % n;
    const Index jm2 = (j - 2 + 2 * n) % n;
    u[j] = (s[jp1] - s[jm2]) * s[jm1] - s[j] + F;
  }
  return u;
}

namespace {

void rk4_l96_step(Eigen::VectorXd& s, double F, double h) {
  const Eigen::VectorXd k1 = l96_rhs(s, F);
  const Eigen::VectorXd k2 = l96_rhs(s + 0.5 * h * k1, F);
  const Eigen::VectorXd k3 = l96_rhs(s + 0.5 * h * k2, F);
  const Eigen::VectorXd k4 = l96_rhs(s + h * k3, F);
  s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

SnapshotSet integrate_l96(const Eigen::VectorXd& s0, double F, double tau, Index n_samples,
                          double spinup, Index substeps_per_tau) {
  require(tau > 0.0, "invalid-input", "tau must be positive");
  require(n_samples >= 3, "invalid-input", "need at least 3 samples");
  require(substeps_per_tau >= 1, "invalid-input", "substeps_per_tau must be >= 1");

  Eigen::VectorXd s = s0;
  const double h = tau / static_cast<double>(substeps_per_tau);
  const auto spin_steps = static_cast<Index>(std::ceil(spinup / h));
  for (Index k = 0; k < spin_steps; ++k) {
    rk4_l96_step(s, F, h);
    if (!s.allFinite()) fail("blow-up", "L96 state diverged during spinup");
  }

  SnapshotSet out;
  out.tau = tau;
  out.source = "l96 F=" + format_g17(F) + " J=" + std::to_string((s0.size() - 1) / 2);
  out.data.resize(n_samples, s.size());
  out.data.row(0) = s;
  for (Index n = 1; n < n_samples; ++n) {
    for (Index k = 0; k < substeps_per_tau; ++k) rk4_l96_step(s, F, h);
    if (!s.allFinite()) fail("blow-up", "L96 state diverged");
    out.data.row(n) = s;
  }
  return out;
}

void vortex_velocity(const VortexParams& p, double a, double x1, double x2, double& v1,
                     double& v2) {
  static thread_local double cached_kappa = -1.0;
  static thread_local double cached_norm = 0.0;
  if (p.kappa != cached_kappa) {
    // 1 / I_0(kappa)^2 via the ratio-free series for I_0.
    double term = 1.0, total = 1.0;
    const double q = 0.25 * p.kappa * p.kappa;
    for (int m = 1; m < 64; ++m) {
      term *= q / (static_cast<double>(m) * static_cast<double>(m));
      total += term;
      if (term < 1e-18 * total) break;
    }
    cached_norm = 1.0 / (total * total);
    cached_kappa = p.kappa;
  }
  const double norm = cached_norm;

  if (p.flavor == VortexFlavor::moving) {
    const double zeta = std::exp(p.kappa * (std::cos(x1 - a) + std::cos(x2))) * norm;
    v1 = p.kappa * std::sin(x2) * zeta;
    v2 = -p.kappa * std::sin(x1 - a) * zeta;
  } else {
    const double g1 = std::exp(p.kappa * (std::cos(x1) + std::cos(x2))) * norm;
    const double g2 = std::exp(p.kappa * (-std::cos(x1) + std::cos(x2))) * norm;
    const double ca = std::cos(a), sa = std::sin(a);
    v1 = p.C * p.kappa * std::sin(x2) * (ca * g1 + sa * g2);
    v2 = p.C * p.kappa * std::sin(x1) * (-ca * g1 + sa * g2);
  }
}

namespace {

struct L96Sweep {
  // Fourier coefficients s_hat_q of one driver state; q >= 0 suffices (real field).
  Eigen::VectorXcd modes;
  Index J;

  void compute(const Eigen::VectorXd& s) {
    const Index dim = s.size();
    J = (dim - 1) / 2;
    modes.resize(J + 1);
    for (Index q = 0; q <= J; ++q) {
      Complex acc{0.0, 0.0};
      for (Index j = 0; j < dim; ++j) {
        const double ang = -kTwoPi * static_cast<double>(q) * static_cast<double>(j) /
                           static_cast<double>(dim);
        acc += s[j] * Complex{std::cos(ang), std::sin(ang)};
      }
      modes[q] = acc / static_cast<double>(dim);
    }
  }

  void velocity(double x1, double& v1, double& v2) const {
    v1 = modes[0].real();
    const Complex rot{std::cos(x1), std::sin(x1)};
    Complex e{1.0, 0.0};
    double acc = 0.0;
    for (Index q = 1; q <= J; ++q) {
      e *= rot;
      acc += 2.0 * (modes[q] * e).real();
    }
    v2 = acc;
  }
};

}  // namespace

std::vector<EnsembleState> integrate_tracers(const FlowSpec& flow, const EnsembleState& ens0,
                                             const std::vector<double>& t_checkpoints,
                                             double max_step) {
  require(max_step > 0.0, "invalid-input", "max_step must be positive");
  require(!t_checkpoints.empty(), "invalid-input", "need at least one checkpoint");
  for (std::size_t i = 0; i + 1 < t_checkpoints.size(); ++i)
    require(t_checkpoints[i] <= t_checkpoints[i + 1], "invalid-input",
            "checkpoints must be ascending");
  require(t_checkpoints.front() >= ens0.time, "invalid-input",
          "checkpoints must not precede the initial time");

  const Index m = ens0.size();
  EnsembleState cur = ens0;
  std::vector<EnsembleState> out;
  out.reserve(t_checkpoints.size());

  const bool is_l96 = flow.flavor == FlowFlavor::l96;
  if (is_l96) {
    require(cur.driver_states.rows() >= 1, "invalid-input", "l96 flow needs driver states");
    require(cur.driver_map.size() == m, "invalid-input", "driver map length mismatch");
  } else {
    require(cur.driver_phase.size() == m, "invalid-input", "driver phase length mismatch");
  }

  std::vector<L96Sweep> sweeps[4];
  for (double t_target : t_checkpoints) {
    while (cur.time < t_target - 1e-14) {
      const double h = std::min(max_step, t_target - cur.time);
      const double t0 = cur.time;

      if (is_l96) {
        // Coupled RK4: driver stage states shared by all members of a group.
        const Index nd = cur.driver_states.rows();
        for (auto& sv : sweeps) sv.resize(static_cast<std::size_t>(nd));
        Eigen::MatrixXd k1(nd, cur.driver_states.cols()), k2 = k1, k3 = k1, k4 = k1;
        for (Index d = 0; d < nd; ++d) {
          const Eigen::VectorXd s1 = cur.driver_states.row(d);
          k1.row(d) = l96_rhs(s1, flow.l96.F);
          const Eigen::VectorXd s2 = s1 + 0.5 * h * k1.row(d).transpose();
          k2.row(d) = l96_rhs(s2, flow.l96.F);
          const Eigen::VectorXd s3 = s1 + 0.5 * h * k2.row(d).transpose();
          k3.row(d) = l96_rhs(s3, flow.l96.F);
          const Eigen::VectorXd s4 = s1 + h * k3.row(d).transpose();
          k4.row(d) = l96_rhs(s4, flow.l96.F);
          sweeps[0][static_cast<std::size_t>(d)].compute(s1);
          sweeps[1][static_cast<std::size_t>(d)].compute(s2);
          sweeps[2][static_cast<std::size_t>(d)].compute(s3);
          sweeps[3][static_cast<std::size_t>(d)].compute(s4);
        }
        parallel_for(0, m, [&](Index i) {
          const auto d = static_cast<std::size_t>(cur.driver_map[i]);
          double x1 = cur.positions(i, 0), x2 = cur.positions(i, 1);
          double a1, b1, a2, b2, a3, b3, a4, b4;
          sweeps[0][d].velocity(x1, a1, b1);
          sweeps[1][d].velocity(x1 + 0.5 * h * a1, a2, b2);
          sweeps[2][d].velocity(x1 + 0.5 * h * a2, a3, b3);
          sweeps[3][d].velocity(x1 + h * a3, a4, b4);
          cur.positions(i, 0) = wrap_angle(x1 + h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4));
          cur.positions(i, 1) = wrap_angle(x2 + h / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4));
        });
        for (Index d = 0; d < nd; ++d)
          cur.driver_states.row(d) +=
              (h / 6.0) * (k1.row(d) + 2.0 * k2.row(d) + 2.0 * k3.row(d) + k4.row(d));
        require(cur.driver_states.allFinite(), "blow-up", "l96 driver diverged");
      } else {
        parallel_for(0, m, [&](Index i) {
          const double a0 = cur.driver_phase[i];
          const double om = flow.vortex.omega;
          double x1 = cur.positions(i, 0), x2 = cur.positions(i, 1);
          double a1, b1, a2, b2, a3, b3, a4, b4;
          vortex_velocity(flow.vortex, a0 + om * (t0 - 0.0), x1, x2, a1, b1);
          vortex_velocity(flow.vortex, a0 + om * (t0 + 0.5 * h), x1 + 0.5 * h * a1,
                          x2 + 0.5 * h * b1, a2, b2);
          vortex_velocity(flow.vortex, a0 + om * (t0 + 0.5 * h), x1 + 0.5 * h * a2,
                          x2 + 0.5 * h * b2, a3, b3);
          vortex_velocity(flow.vortex, a0 + om * (t0 + h), x1 + h * a3, x2 + h * b3, a4, b4);
          cur.positions(i, 0) = wrap_angle(x1 + h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4));
          cur.positions(i, 1) = wrap_angle(x2 + h / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4));
        });
      }
      cur.time = t0 + h;
    }
    cur.time = t_target;
    out.push_back(cur);
  }
  return out;
}

EnsembleState sample_initial_ensemble(const FlowSpec& flow, const DensitySpec& density, Index M,
                                      std::uint64_t seed) {
  require(M >= 1, "invalid-input", "ensemble size must be >= 1");
  EnsembleState ens;
  ens.seed = seed;
  ens.positions.resize(M, 2);
  CounterRng rng(seed);
  for (Index i = 0; i < M; ++i) {
    ens.positions(i, 0) = sample_von_mises(rng, density.kappa_tilde, density.xbar1);
    ens.positions(i, 1) = sample_von_mises(rng, density.kappa_tilde, density.xbar2);
  }

  if (flow.flavor == FlowFlavor::l96) {
    require(density.driver_pool.rows() >= 1, "invalid-input", "l96 sampling needs a driver pool");
    Eigen::VectorXd w = density.driver_weights.size() > 0
                            ? density.driver_weights
                            : Eigen::VectorXd::Ones(density.driver_pool.rows());
    require(w.size() == density.driver_pool.rows(), "invalid-input",
            "driver weight length mismatch");
    require(w.minCoeff() >= 0.0 && w.sum() > 0.0, "invalid-input", "bad driver weights");
    std::vector<double> cdf(static_cast<std::size_t>(w.size()));
    double acc = 0.0;
    for (Index i = 0; i < w.size(); ++i) {
      acc += w[i];
      cdf[static_cast<std::size_t>(i)] = acc;
    }

    // Cap the distinct co-integrated drivers; members share rows round-robin.
    const Index nd = std::min<Index>(density.max_distinct_drivers, M);
    ens.driver_states.resize(nd, density.driver_pool.cols());
    ens.driver_map.resize(M);
    for (Index d = 0; d < nd; ++d) {
      const double u = rng.uniform() * acc;
      const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
      const Index pick = std::min<Index>(static_cast<Index>(it - cdf.begin()), w.size() - 1);
      ens.driver_states.row(d) = density.driver_pool.row(pick);
    }
    for (Index i = 0; i < M; ++i) ens.driver_map[i] = static_cast<int>(i % nd);
  } else {
    ens.driver_phase.resize(M);
    for (Index i = 0; i < M; ++i)
      ens.driver_phase[i] = sample_von_mises(rng, density.driver_kappa, 0.0);
  }
  return ens;
}

BinnedDensity monte_carlo_density(const EnsembleState& ens, Index n_bins) {
  require(n_bins >= 1, "invalid-input", "n_bins must be >= 1");
  const Index m = ens.size();
  require(m >= 1, "invalid-input", "empty ensemble");

  BinnedDensity out;
  out.n_bins = n_bins;
  out.sigma.assign(static_cast<std::size_t>(n_bins * n_bins), 0.0);
  out.sigma1.assign(static_cast<std::size_t>(n_bins), 0.0);
  out.sigma2.assign(static_cast<std::size_t>(n_bins), 0.0);

  const double scale = static_cast<double>(n_bins) / kTwoPi;
  for (Index i = 0; i < m; ++i) {
    auto b1 = static_cast<Index>(wrap_angle(ens.positions(i, 0)) * scale);
    auto b2 = static_cast<Index>(wrap_angle(ens.positions(i, 1)) * scale);
    b1 = std::min(b1, n_bins - 1);
    b2 = std::min(b2, n_bins - 1);
    out.sigma[static_cast<std::size_t>(b1 * n_bins + b2)] += 1.0;
    out.sigma1[static_cast<std::size_t>(b1)] += 1.0;
    out.sigma2[static_cast<std::size_t>(b2)] += 1.0;
  }
  const double w2 = static_cast<double>(n_bins * n_bins) / static_cast<double>(m);
  const double w1 = static_cast<double>(n_bins) / static_cast<double>(m);
  for (auto& v : out.sigma) v *= w2;
  for (auto& v : out.sigma1) v *= w1;
  for (auto& v : out.sigma2) v *= w1;
  return out;
}

Eigen::VectorXd rms_mode_amplitudes(const SnapshotSet& snapshots, Index J) {
  const Eigen::MatrixXcd modes = l96_fourier_modes(snapshots.data, J);
  Eigen::VectorXd rms(modes.cols());
  for (Index q = 0; q < modes.cols(); ++q)
    rms[q] = std::sqrt(modes.col(q).cwiseAbs2().mean());
  return rms;
}

}  // namespace kst
