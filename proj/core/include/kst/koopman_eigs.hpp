#pragma once

#include <vector>

#include <Eigen/Dense>

#include "kst/generator.hpp"
#include "kst/kernel_basis.hpp"
#include "kst/sparse_matrix.hpp"

namespace kst {

// One coherent pattern: eigenvalue, coefficients in the normalized H^1 (varphi)
// basis, and its Dirichlet energy.
struct EigenPair {
  Complex lambda{0.0, 0.0};
  CVector coeffs;                 // varphi convention, |c_k0|^2 + sum |c_k|^2/eta_k = 1
  double dirichlet_energy = 0.0;  // sum_{k != k0} |c_k|^2
  double l2_norm = 1.0;
  double residual = 0.0;          // ||A c - lambda B c|| / ||B c||
};

// A c = lambda B c in the varphi basis: A = W-rescaled - theta * E-block,
// B diagonal with B_k0 = 1 and B_kk = 1/eta_k.
struct GevpSystem {
  SparseComplexMatrix A;
  std::vector<double> b_diag;
  std::vector<double> scale;  // varphi rescaling s_k (1 at k0, 1/sqrt(eta_k) else)
  std::vector<double> eta;
  double theta = 0.0;
  Index k0 = 0;  // index of the constant basis function

  Index dim() const { return A.nrows(); }
};

GevpSystem build_h1_system(const SparseComplexMatrix& W, const std::vector<double>& eta,
                           double theta);
GevpSystem build_h1_system(const GeneratorMatrix& g);

enum class EigTarget { smallest_modulus, largest_real };
enum class GevpMethod { automatic, arnoldi, dense };

struct GevpOptions {
  Index n_eig = 51;
  EigTarget target = EigTarget::smallest_modulus;
  double residual_tol = 1e-9;
  double shift = 0.0;  // 0 -> automatic small negative shift for the factorization
  GevpMethod method = GevpMethod::automatic;
  Index max_subspace = 600;
};

// Raw pairs in target order; run order_and_normalize for the energy ordering,
// Rayleigh-refined eigenvalues, and unit-norm phase-fixed coefficients.
std::vector<EigenPair> solve_gevp(const GevpSystem& sys, const GevpOptions& opts);

std::vector<EigenPair> order_and_normalize(const GevpSystem& sys, std::vector<EigenPair> pairs);

struct PatternField {
  Index n1 = 0, n2 = 0;
  CVector values;  // row-major over (x1, x2)

  Complex at(Index g1, Index g2) const {
    return values[static_cast<std::size_t>(g1 * n2 + g2)];
  }
};

// f(a, x) = sum b_ijk phi^A_i(a) e^(i(j x1 + k x2)) on the uniform n1 x n2 grid,
// for coefficients in the plain (phi) convention.
Eigen::MatrixXcd field_on_grid(const CVector& phi_coeffs, const Eigen::VectorXcd& a_values,
                               const TruncationParams& t, Index n1, Index n2);

// z(a, x) = sum c_ijk phi^A_i(a) e^(i(j x1 + k x2)) on a uniform n1 x n2 grid;
// a enters through the per-index values phi^A_i(a).
PatternField evaluate_pattern(const EigenPair& pair, const std::vector<double>& eta,
                              const Eigen::VectorXcd& a_values, const TruncationParams& t,
                              Index n1, Index n2);

Eigen::VectorXcd fourier_a_values(double a, const TruncationParams& t);
// phi^A_i at a training sample; out-of-sample states are not supported.
Eigen::VectorXcd datadriven_a_values(const MarkovBasis& basis, Index sample,
                                     const TruncationParams& t);

}  // namespace kst
