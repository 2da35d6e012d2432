#pragma once

#include <string>
#include <vector>

#include "kst/generator.hpp"
#include "kst/kernel_basis.hpp"
#include "kst/koopman_eigs.hpp"
#include "kst/leja_expm.hpp"
#include "kst/snapshots.hpp"

namespace kst {

// Expansion coefficients of an observable f in the phi basis (b_k = <phi_k, f>).
struct ObservableCoeffs {
  CVector b;
  std::string label = "custom";
};

// Coefficients of an evolving probability density; mass tracks the constant mode.
struct DensityField {
  CVector b;
  Complex mass{0.0, 0.0};
};

struct ModeCoeff {
  MultiIndex idx;
  Complex value;
};

// f1 = e^{i x1}, f2 = e^{i x2}: unit coefficient at (a-constant, 1, 0) / (.., 0, 1).
ObservableCoeffs observable_f1(const TruncationParams& t);
ObservableCoeffs observable_f2(const TruncationParams& t);
ObservableCoeffs project_observable_modes(const std::vector<ModeCoeff>& modes,
                                          const TruncationParams& t);
// Uniform g1 x g2 grid samples on X (row-major, constant in a); trapezoid
// quadrature is exact for band-limited f when the grid resolves 2*ell+1 modes.
ObservableCoeffs project_observable_grid(const CVector& samples, Index g1, Index g2,
                                         const TruncationParams& t);

StepSequenceResult evolve_observable(const GeneratorMatrix& g, const ObservableCoeffs& f,
                                     double tilde_tau, Index n_steps, bool renormalize = false,
                                     const LejaOptions& opts = {});
void evolve_observable_cb(const GeneratorMatrix& g, const ObservableCoeffs& f, double tilde_tau,
                          Index n_steps, bool renormalize,
                          const std::function<void(Index, const CVector&)>& on_step,
                          const LejaOptions& opts = {});

// Steps with the conjugate-transpose generator (Perron-Frobenius side).
StepSequenceResult evolve_density(const GeneratorMatrix& g, const DensityField& rho,
                                  double tilde_tau, Index n_steps, const LejaOptions& opts = {});
void evolve_density_cb(const GeneratorMatrix& g, const DensityField& rho, double tilde_tau,
                       Index n_steps, const std::function<void(Index, const CVector&)>& on_step,
                       const LejaOptions& opts = {});

struct PositionEstimate {
  Index n1 = 0, n2 = 0;
  std::vector<double> x1, x2;          // phase estimates in [0, 2pi), row-major grid
  std::vector<double> mag1, mag2;      // |W_t f_i| at each grid point
  std::vector<char> low_confidence;    // |W_t f| < 0.1 on either component
};

// Recover x_i(t) = arg W_t f_i(a, x) on the uniform grid of initial positions.
PositionEstimate tracer_position_estimate(const CVector& b1_t, const CVector& b2_t,
                                          const Eigen::VectorXcd& a_values,
                                          const TruncationParams& t, Index n1, Index n2);

struct MarginalResult {
  Index n_grid = 0;
  std::vector<double> sigma;   // n x n, density against normalized Haar on X
  std::vector<double> sigma1;  // marginal along x1, against normalized Haar on T^1
  std::vector<double> sigma2;  // marginal along x2
  double mass = 0.0;
  double max_imag_residue = 0.0;
};

MarginalResult marginal_density(const CVector& rho_coeffs, const TruncationParams& t,
                                Index n_grid);

// rho = rho_A x rho_X with von Mises factors of concentration kappa_tilde; the
// analytic route uses the circle-driver von Mises rho_A centered at a = 0.
DensityField gaussian_initial_density_fourier(double kappa_tilde, double xbar1, double xbar2,
                                              const TruncationParams& t);
// Data-driven route: rho_A(a_n) = p_{eps,N}(anchor, a_n) by a single out-of-sample
// kernel-row evaluation against the training snapshots.
DensityField gaussian_initial_density_datadriven(double kappa_tilde, double xbar1, double xbar2,
                                                 const Eigen::VectorXd& anchor,
                                                 const SnapshotSet& snapshots,
                                                 const MarkovBasis& basis,
                                                 const TruncationParams& t);

struct EigForecast {
  CVector coeffs;          // phi convention, after multiplying by e^{t lambda_k}
  double lsq_residual = 0.0;
  bool ill_conditioned = false;  // eigenbasis Gram condition > 1e8
};

// Least-squares expansion of f over the supplied eigenpairs, then exact
// exponential propagation of each component.
EigForecast predict_observable_eig(const std::vector<EigenPair>& pairs,
                                   const std::vector<double>& eta, const CVector& f_phi,
                                   double t_forecast);

}  // namespace kst
