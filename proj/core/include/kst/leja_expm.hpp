#pragma once

#include <functional>
#include <vector>

#include "kst/sparse_matrix.hpp"

namespace kst {

// Spectrum enclosure [beta_lo, alpha] x i[-gamma, gamma] from Gershgorin disks of
// the Hermitian and skew-Hermitian parts.
struct SpectralBox {
  double alpha = 0.0;
  double beta_lo = 0.0;
  double gamma = 0.0;

  double diameter() const {
    const double dr = alpha - beta_lo;
    return std::sqrt(dr * dr + 4.0 * gamma * gamma);
  }
};

SpectralBox gershgorin_box(const SparseComplexMatrix& l);

// d+1 Leja nodes on the segment (alpha+beta)/2 + i[-gamma, gamma], selected by the
// max-product rule over a uniform 10,000-point discretization; deterministic.
CVector leja_nodes(const SpectralBox& box, Index d);

// Divided differences r[z_0..z_j] of exp at the given nodes (confluent limits for
// repeated nodes), via the exponential of the associated bidiagonal matrix.
CVector divided_differences(const CVector& nodes);

struct ExpmStats {
  Index substeps = 0;
  Index max_degree = 0;
  double est_rel_error = 0.0;
};

struct LejaOptions {
  double tol = 1e-7;
  Index d_max = 150;
  double segment_budget = 50.0;  // initial substeps: ceil(t * box diameter / budget)
  int max_attempts = 8;
};

// Reusable e^(tL) applier: nodes and divided differences are built once per
// (L, t) and shared by every apply; substeps double persistently on stagnation.
class LejaOperator {
public:
  LejaOperator(const SparseComplexMatrix& l, double t, LejaOptions opts = {});
  // holds a reference to l across applies; a temporary would dangle
  LejaOperator(SparseComplexMatrix&&, double, LejaOptions = {}) = delete;

  CVector apply(std::span<const Complex> b);
  const ExpmStats& stats() const { return stats_; }
  const SpectralBox& box() const { return box_; }

private:
  void rebuild();
  void ensure_degree(Index d);
  bool try_apply(std::span<const Complex> b, CVector& out);

  const SparseComplexMatrix* l_;
  double t_;
  LejaOptions opts_;
  SpectralBox box_;
  Index substeps_ = 1;
  double h_ = 0.0;
  CVector nodes_;
  CVector divdiff_;
  // node selection grows on demand: discretized segment + accumulated log products
  std::vector<double> disc_y_;
  std::vector<double> disc_logdist_;
  double segment_center_ = 0.0;
  ExpmStats stats_;
};

// One-shot e^(tL) b with estimated relative error <= tol.
CVector expm_action(const SparseComplexMatrix& l, std::span<const Complex> b, double t,
                    double tol = 1e-7, ExpmStats* stats = nullptr);

struct StepSequenceResult {
  std::vector<CVector> states;  // states[0] = b0, states[n] = nth step
};

// b_{n+1} = e^(tilde_tau L) b_n, optionally rescaled to keep ||b_n|| constant.
StepSequenceResult step_sequence(const SparseComplexMatrix& l, std::span<const Complex> b0,
                                 double tilde_tau, Index n_steps, bool renormalize,
                                 const LejaOptions& opts = {});

// Streaming variant: on_step(n, state) fires for n = 0..n_steps without keeping
// the whole history.
void step_sequence_cb(const SparseComplexMatrix& l, std::span<const Complex> b0, double tilde_tau,
                      Index n_steps, bool renormalize,
                      const std::function<void(Index, const CVector&)>& on_step,
                      const LejaOptions& opts = {});

}  // namespace kst
