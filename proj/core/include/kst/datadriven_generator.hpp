#pragma once

#include <Eigen/Dense>

#include "kst/analytic_generators.hpp"
#include "kst/generator.hpp"
#include "kst/kernel_basis.hpp"
#include "kst/sparse_matrix.hpp"

namespace kst {

// Spectral coefficients v^(1)_pqr, v^(2)_pqr of a state-dependent velocity field:
// p indexes the basis on A (p < ell_v), (q, r) the spatial wavenumbers.
struct VelocityCoeffs {
  Index ell_v = 0;
  Index q_max = 0;
  Index r_max = 0;
  CVector v1, v2;  // ell_v x (2 q_max + 1) x (2 r_max + 1), row-major (p, q, r)

  Complex at1(Index p, Index q, Index r) const {
    if (p >= ell_v || q < -q_max || q > q_max || r < -r_max || r > r_max) return {0.0, 0.0};
    return v1[idx(p, q, r)];
  }
  Complex at2(Index p, Index q, Index r) const {
    if (p >= ell_v || q < -q_max || q > q_max || r < -r_max || r > r_max) return {0.0, 0.0};
    return v2[idx(p, q, r)];
  }
  std::size_t idx(Index p, Index q, Index r) const {
    return static_cast<std::size_t>((p * (2 * q_max + 1) + (q + q_max)) * (2 * r_max + 1) +
                                    (r + r_max));
  }
};

enum class FdEndpoint { zero, extrapolate };

// U_il = <phi_i, u_{N,tau}(phi_l)> with the second-order central difference along
// the trajectory; the end samples contribute zero (or a linear extrapolation of
// the interior differences when requested).
Eigen::MatrixXd finite_diff_generator(const MarkovBasis& basis, double tau, Index ell_A,
                                      FdEndpoint endpoint = FdEndpoint::zero);

// DFT of the L96 state vectors; column q + J holds s_hat_q(a_n), |q| <= J.
Eigen::MatrixXcd l96_fourier_modes(const Eigen::MatrixXd& states, Index J);

// Cross-sweep + shear expansion of the L96-driven velocity field: v1 carries only
// (q, r) = (0, 0) via s_hat_0, v2 carries (q, 0) for 1 <= |q| <= J.
VelocityCoeffs velocity_coeffs_l96(const SnapshotSet& l96_snapshots, const MarkovBasis& basis,
                                   Index J, Index ell_v);

// Vortex-flow velocity expanded in a data-driven basis on a circle driver whose
// phases are given per sample. Coefficients are derived from the streamfunction
// projection so the divergence-free identity q v1 + r v2 = 0 holds exactly.
VelocityCoeffs velocity_coeffs_vortex(const Eigen::VectorXd& phases, const MarkovBasis& basis,
                                      const VortexParams& p, Index q_max, Index r_max,
                                      Index ell_v);

// Spatial advection block in the tensor-product basis:
//   entry[(ijk),(lmn)] = sum_p i (m v1_{p,j-m,k-n} + n v2_{p,j-m,k-n}) c_{ilp}.
SparseComplexMatrix assemble_wx_datadriven(const TripleProducts& c, const VelocityCoeffs& v,
                                           const TruncationParams& t, double drop_tol = 1e-14);

// L = lift(U) + WX - theta diag(eta), eta_{ijk} = eta^A_i + j^2 + k^2.
GeneratorMatrix assemble_generator_datadriven(const Eigen::MatrixXd& U,
                                              const SparseComplexMatrix& WX,
                                              const Eigen::VectorXd& eta_A,
                                              const TruncationParams& t, double theta,
                                              bool antisymmetrize_u = false);

struct ReconstructionError {
  Eigen::VectorXd abs_rms;  // delta_{j, ell_A} per mode
  Eigen::VectorXd rel_rms;  // delta / RMS(mode); NaN where the mode RMS vanishes
};

// beta-weighted RMS residual of projecting each column of modes onto the leading
// ell_A basis functions.
ReconstructionError reconstruction_error(const Eigen::MatrixXcd& modes, const MarkovBasis& basis,
                                         Index ell_A);

}  // namespace kst
