#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "kst/analytic_generators.hpp"
#include "kst/snapshots.hpp"

namespace kst {

enum class FlowFlavor { moving, switching, l96 };

struct L96Params {
  Index J = 20;
  double F = 4.0;
};

// Ground-truth velocity field: vortex flavors evaluate in closed form from the
// streamfunction; the l96 flavor co-integrates its driver along the tracers.
struct FlowSpec {
  FlowFlavor flavor = FlowFlavor::moving;
  VortexParams vortex;
  L96Params l96;
};

struct EnsembleState {
  Eigen::MatrixXd positions;      // M x 2, angles kept in [0, 2pi)
  Eigen::VectorXd driver_phase;   // per member, circle drivers
  Eigen::MatrixXd driver_states;  // distinct l96 driver states (rows)
  Eigen::VectorXi driver_map;     // member -> driver row, l96 only
  double time = 0.0;
  std::uint64_t seed = 0;

  Index size() const { return positions.rows(); }
};

Eigen::VectorXd l96_rhs(const Eigen::VectorXd& s, double F);

// Fixed-step RK4 (internal step <= tau/substeps_per_tau), spinup discarded.
SnapshotSet integrate_l96(const Eigen::VectorXd& s0, double F, double tau, Index n_samples,
                          double spinup, Index substeps_per_tau = 5);

// Closed-form velocity of the vortex flows at driver phase a.
void vortex_velocity(const VortexParams& p, double a, double x1, double x2, double& v1,
                     double& v2);

// RK4 tracer advection with step <= max_step; returns the ensemble at each
// requested checkpoint time (ascending, first may equal ens0.time).
std::vector<EnsembleState> integrate_tracers(const FlowSpec& flow, const EnsembleState& ens0,
                                             const std::vector<double>& t_checkpoints,
                                             double max_step = 0.005);

struct DensitySpec {
  double kappa_tilde = 4.0;
  double xbar1 = M_PI;
  double xbar2 = M_PI / 4.0;
  double driver_kappa = 0.0;       // circle drivers: von Mises concentration about 0
  Eigen::MatrixXd driver_pool;     // l96: candidate driver states (training rows)
  Eigen::VectorXd driver_weights;  // l96: categorical weights over the pool
  Index max_distinct_drivers = 256;
};

// Reproducible draw from rho_A x rho_X (rejection sampling for the von Mises
// factors; weighted resampling over the driver pool for l96).
EnsembleState sample_initial_ensemble(const FlowSpec& flow, const DensitySpec& density, Index M,
                                      std::uint64_t seed);

struct BinnedDensity {
  Index n_bins = 0;
  std::vector<double> sigma;   // n x n, normalized against normalized Haar
  std::vector<double> sigma1;  // n
  std::vector<double> sigma2;  // n
};

BinnedDensity monte_carlo_density(const EnsembleState& ens, Index n_bins = 65);

// RMS over time of |s_hat_q|; index q + J.
Eigen::VectorXd rms_mode_amplitudes(const SnapshotSet& snapshots, Index J);

}  // namespace kst
