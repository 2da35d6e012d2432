#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "kst/indexing.hpp"
#include "kst/snapshots.hpp"

namespace kst {

// Symmetric sparse kernel operator in CSR form (real entries).
struct SymmetricCsr {
  Index n = 0;
  std::vector<Index> row_ptr;
  std::vector<std::int32_t> cols;
  std::vector<double> vals;

  void matvec(const Eigen::VectorXd& x, Eigen::VectorXd& y) const;
  Eigen::MatrixXd dense() const;
};

struct BandwidthScan {
  Eigen::VectorXd grid;  // log-spaced epsilon values
  Eigen::VectorXd S;     // S_N(eps), normalized to [0, 1]
  Eigen::VectorXd T;     // d log S / d log eps, centered differences
  double eps_star = 0.0;
  double dim_est = 0.0;  // 2 * max T
};

struct ScanGrid {
  double p_min = -40.0;
  double p_max = 40.0;
  int per_octave = 4;
};

// Data-driven basis on A: kernel eigenpairs, stationary density, Dirichlet
// energies, and the normalization vectors needed for out-of-sample kernel rows.
struct MarkovBasis {
  Eigen::VectorXd lambda;  // descending, lambda[0] = 1
  Eigen::MatrixXd phi;     // N x n_eig, weighted-orthonormal: (1/N) sum phi_i phi_j beta = delta
  Eigen::VectorXd beta;    // stationary density, mean 1, > 0
  Eigen::VectorXd eta;     // Dirichlet energies, eta[0] = 0, non-decreasing
  double eps = 0.0;
  int dirichlet_option = 3;
  double dim_est = 0.0;
  double eps_pre = 0.0;        // bandwidth used inside the density estimate
  Eigen::VectorXd q, d;        // kernel normalization vectors (per sample)
  Eigen::VectorXd r;           // final bandwidth function at samples
  Eigen::VectorXd r_tilde;     // k-NN bandwidth at samples
  Index k_nn_density = 8;

  Index count() const { return phi.rows(); }
  Index n_eig() const { return phi.cols(); }
};

struct TripleProducts {
  Index ell_A = 0;
  std::vector<double> c;  // dense ell_A^3, fully symmetric

  double at(Index i, Index j, Index k) const {
    return c[static_cast<std::size_t>((i * ell_A + j) * ell_A + k)];
  }
};

struct MarkovKernel {
  SymmetricCsr p_hat;  // similar to the Markov operator P
  Eigen::VectorXd q, d;
  Eigen::VectorXd r;
  double eps = 0.0;
};

enum class EigMethod { automatic, lanczos, dense };

// r_tilde(a_n): sqrt of the mean squared distance to the 2nd..k_nn-th nearest samples.
Eigen::VectorXd knn_bandwidth(const SnapshotSet& s, Index k_nn_density);

struct DensityEstimate {
  Eigen::VectorXd sigma;  // sampling density estimate at samples
  Eigen::VectorXd r;      // final bandwidth function sigma^(-1/dim)
};
DensityEstimate estimate_density(const SnapshotSet& s, const Eigen::VectorXd& r_tilde, double eps,
                                 double dim);

BandwidthScan tune_bandwidth(const SnapshotSet& s, const Eigen::VectorXd& r, const ScanGrid& grid = {});

MarkovKernel build_markov(const SnapshotSet& s, const Eigen::VectorXd& r, double eps,
                          Index k_nn_graph);

// Eigenpairs of the symmetric operator, converted to the Markov (phi, beta) pair.
// Dirichlet energies are left empty; fill via dirichlet_energies.
MarkovBasis eig_markov(const MarkovKernel& kernel, Index n_eig,
                       EigMethod method = EigMethod::automatic);

// Options 1..3 of the eigenvalue-to-energy map; negative eigenvalues under
// options 2 and 3 fall back to the Weyl-law tail eta_k* (k/k*)^(2/dim).
Eigen::VectorXd dirichlet_energies(const Eigen::VectorXd& lambda, double eps, int option,
                                   double dim);

TripleProducts triple_products(const MarkovBasis& basis, Index ell_A);

struct BasisOptions {
  Index k_nn_density = 8;
  Index k_nn_graph = 0;  // 0 -> min(N, max(500, N/10))
  Index n_eig = 2;
  int dirichlet_option = 3;
  double eps_override = 0.0;  // 0 -> tuned
  ScanGrid grid;
  EigMethod method = EigMethod::automatic;
};

struct BasisBuildResult {
  MarkovBasis basis;
  BandwidthScan scan_pre;    // scan of the k-NN-bandwidth kernel
  BandwidthScan scan_final;  // scan of the variable-bandwidth kernel
};

// Full pipeline: k-NN bandwidth, pre-tuning, density estimate, final tuning,
// Markov normalization, eigendecomposition, Dirichlet energies.
BasisBuildResult build_basis(const SnapshotSet& s, const BasisOptions& opts);

void save_basis(const std::filesystem::path& prefix, const MarkovBasis& b);
MarkovBasis load_basis(const std::filesystem::path& prefix);

}  // namespace kst
