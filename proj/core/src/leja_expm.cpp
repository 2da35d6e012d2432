#include "kst/leja_expm.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "kst/errors.hpp"

namespace kst {

SpectralBox gershgorin_box(const SparseComplexMatrix& l) {
  require(l.nrows() == l.ncols(), "invalid-input", "gershgorin_box needs a square matrix");
  const Index n = l.nrows();
  const SparseComplexMatrix adj = l.adjoint();

  SpectralBox box;
  box.alpha = -std::numeric_limits<double>::infinity();
  box.beta_lo = std::numeric_limits<double>::infinity();
  box.gamma = 0.0;
  if (n == 0) return SpectralBox{};

  for (Index r = 0; r < n; ++r) {
    double h_diag = 0.0, h_rad = 0.0, k_center = 0.0, k_rad = 0.0;
    Index pl = l.row_ptr()[static_cast<std::size_t>(r)];
    Index pa = adj.row_ptr()[static_cast<std::size_t>(r)];
    const Index el = l.row_ptr()[static_cast<std::size_t>(r) + 1];
    const Index ea = adj.row_ptr()[static_cast<std::size_t>(r) + 1];
    while (pl < el || pa < ea) {
      Index c;
      Complex lv{0.0, 0.0}, av{0.0, 0.0};
      const Index cl = pl < el ? l.cols()[static_cast<std::size_t>(pl)] : n;
      const Index ca = pa < ea ? adj.cols()[static_cast<std::size_t>(pa)] : n;
      if (cl <= ca) {
        lv = l.values()[static_cast<std::size_t>(pl)];
        c = cl;
        ++pl;
      } else {
        c = ca;
      }
      if (ca == c && pa < ea) {
        av = adj.values()[static_cast<std::size_t>(pa)];
        ++pa;
      }
      const Complex h = 0.5 * (lv + av);
      const Complex k = 0.5 * (lv - av);
      if (c == r) {
        h_diag = h.real();
        k_center = std::abs(k.imag());
      } else {
        h_rad += std::abs(h);
        k_rad += std::abs(k);
      }
    }
    box.alpha = std::max(box.alpha, h_diag + h_rad);
    box.beta_lo = std::min(box.beta_lo, h_diag - h_rad);
    box.gamma = std::max(box.gamma, k_center + k_rad);
  }
  return box;
}

CVector leja_nodes(const SpectralBox& box, Index d) {
  require(d >= 0, "invalid-input", "node count must be >= 0");
  require(box.beta_lo <= box.alpha, "invalid-input", "invalid spectral box");
  const double c = 0.5 * (box.alpha + box.beta_lo);
  CVector nodes;
  nodes.reserve(static_cast<std::size_t>(d) + 1);

  if (box.gamma <= 0.0) {
    nodes.assign(static_cast<std::size_t>(d) + 1, Complex{c, 0.0});
    return nodes;
  }

  constexpr Index n_disc = 10000;
  std::vector<double> y(n_disc), logdist(n_disc, 0.0);
  for (Index i = 0; i < n_disc; ++i)
    y[static_cast<std::size_t>(i)] =
        -box.gamma + 2.0 * box.gamma * static_cast<double>(i) / static_cast<double>(n_disc - 1);

  nodes.push_back(Complex{c, 0.0});  // segment midpoint
  for (Index k = 0; k < d; ++k) {
    const Complex last = nodes.back();
    Index best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n_disc; ++i) {
      logdist[static_cast<std::size_t>(i)] +=
          std::log(std::abs(Complex{c, y[static_cast<std::size_t>(i)]} - last));
      if (logdist[static_cast<std::size_t>(i)] > best_val) {
        best_val = logdist[static_cast<std::size_t>(i)];
        best = i;
      }
    }
    nodes.push_back(Complex{c, y[static_cast<std::size_t>(best)]});
  }
  return nodes;
}

CVector divided_differences(const CVector& nodes) {
  const Index d = static_cast<Index>(nodes.size()) - 1;
  require(d >= 0, "invalid-input", "need at least one node");

  // Opitz: dd of exp at the nodes are the first column of exp of the lower
  // bidiagonal matrix with the nodes on the diagonal. The common midpoint is
  // factored out to keep the auxiliary exponential well scaled.
  Complex center{0.0, 0.0};
  for (const auto& z : nodes) center += z;
  center /= static_cast<double>(nodes.size());

  const Index m = d + 1;
  Eigen::MatrixXcd z0 = Eigen::MatrixXcd::Zero(m, m);
  for (Index i = 0; i < m; ++i) {
    z0(i, i) = nodes[static_cast<std::size_t>(i)] - center;
    if (i + 1 < m) z0(i + 1, i) = 1.0;
  }

  // Scaling-and-squaring Taylor on the shifted matrix.
  double norm1 = 0.0;
  for (Index c = 0; c < m; ++c) norm1 = std::max(norm1, z0.col(c).cwiseAbs().sum());
  int squarings = 0;
  while (norm1 > 0.5) {
    norm1 /= 2.0;
    ++squarings;
  }
  const double scale = std::ldexp(1.0, -squarings);
  Eigen::MatrixXcd a = scale * z0;
  Eigen::MatrixXcd expa = Eigen::MatrixXcd::Identity(m, m);
  Eigen::MatrixXcd term = Eigen::MatrixXcd::Identity(m, m);
  for (int k = 1; k <= 24; ++k) {
    term = (term * a) / static_cast<double>(k);
    expa += term;
  }
  for (int k = 0; k < squarings; ++k) expa = expa * expa;

  const Complex e_center = std::exp(center);
  CVector dd(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) dd[static_cast<std::size_t>(i)] = e_center * expa(i, 0);
  for (const auto& v : dd)
    require(std::isfinite(v.real()) && std::isfinite(v.imag()), "accuracy-failure",
            "divided differences overflow; segment too long");
  return dd;
}

LejaOperator::LejaOperator(const SparseComplexMatrix& l, double t, LejaOptions opts)
    : l_(&l), t_(t), opts_(opts) {
  require(t >= 0.0, "invalid-input", "time must be >= 0");
  require(opts_.tol > 0.0, "invalid-input", "tolerance must be positive");
  require(l.nrows() == l.ncols(), "invalid-input", "expm needs a square matrix");
  if (t_ > 0.0) {
    box_ = gershgorin_box(l);
    substeps_ = std::max<Index>(
        1, static_cast<Index>(std::ceil(t_ * box_.diameter() / opts_.segment_budget)));
    rebuild();
  }
}

void LejaOperator::rebuild() {
  h_ = t_ / static_cast<double>(substeps_);
  const SpectralBox scaled{h_ * box_.alpha, h_ * box_.beta_lo, h_ * box_.gamma};
  segment_center_ = 0.5 * (scaled.alpha + scaled.beta_lo);
  nodes_.clear();
  nodes_.push_back(Complex{segment_center_, 0.0});
  if (scaled.gamma > 0.0) {
    constexpr Index n_disc = 10000;
    disc_y_.resize(static_cast<std::size_t>(n_disc));
    disc_logdist_.assign(static_cast<std::size_t>(n_disc), 0.0);
    for (Index i = 0; i < n_disc; ++i)
      disc_y_[static_cast<std::size_t>(i)] = -scaled.gamma + 2.0 * scaled.gamma *
                                                                 static_cast<double>(i) /
                                                                 static_cast<double>(n_disc - 1);
  } else {
    disc_y_.clear();
    disc_logdist_.clear();
  }
  divdiff_.clear();
  // typical substeps converge at low degree; grow toward d_max only when needed
  ensure_degree(std::min<Index>(opts_.d_max, 24));
}

void LejaOperator::ensure_degree(Index d) {
  d = std::min(d, opts_.d_max);
  if (static_cast<Index>(divdiff_.size()) > d) return;
  while (static_cast<Index>(nodes_.size()) <= d) {
    if (disc_y_.empty()) {
      nodes_.push_back(Complex{segment_center_, 0.0});
      continue;
    }
    const Complex last = nodes_.back();
    Index best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < disc_y_.size(); ++i) {
      disc_logdist_[i] += std::log(std::abs(Complex{segment_center_, disc_y_[i]} - last));
      if (disc_logdist_[i] > best_val) {
        best_val = disc_logdist_[i];
        best = static_cast<Index>(i);
      }
    }
    nodes_.push_back(Complex{segment_center_, disc_y_[static_cast<std::size_t>(best)]});
  }
  divdiff_ = divided_differences(nodes_);
}

bool LejaOperator::try_apply(std::span<const Complex> b, CVector& out) {
  const Index n = l_->nrows();
  const double b_norm = [&] {
    double acc = 0.0;
    for (const auto& v : b) acc += std::norm(v);
    return std::sqrt(acc);
  }();
  if (b_norm == 0.0) {
    out.assign(b.begin(), b.end());
    return true;
  }

  CVector cur(b.begin(), b.end());
  CVector w(static_cast<std::size_t>(n)), lw(static_cast<std::size_t>(n)),
      acc(static_cast<std::size_t>(n));
  const double tol_sub = opts_.tol / static_cast<double>(substeps_);
  stats_.substeps = substeps_;
  stats_.est_rel_error = 0.0;

  for (Index step = 0; step < substeps_; ++step) {
    w = cur;
    for (Index i = 0; i < n; ++i)
      acc[static_cast<std::size_t>(i)] = divdiff_[0] * w[static_cast<std::size_t>(i)];
    double prev_err = std::numeric_limits<double>::infinity();
    bool converged = false;
    for (Index k = 1; k <= opts_.d_max; ++k) {
      if (k >= static_cast<Index>(divdiff_.size()))
        ensure_degree(std::min(opts_.d_max, 2 * k));
      l_->matvec(w, lw);
      const Complex zeta = nodes_[static_cast<std::size_t>(k - 1)];
      double w_norm2 = 0.0, acc_norm2 = 0.0;
      for (Index i = 0; i < n; ++i) {
        w[static_cast<std::size_t>(i)] =
            h_ * lw[static_cast<std::size_t>(i)] - zeta * w[static_cast<std::size_t>(i)];
        acc[static_cast<std::size_t>(i)] += divdiff_[static_cast<std::size_t>(k)] * w[static_cast<std::size_t>(i)];
        w_norm2 += std::norm(w[static_cast<std::size_t>(i)]);
        acc_norm2 += std::norm(acc[static_cast<std::size_t>(i)]);
      }
      const double w_norm = std::sqrt(w_norm2);
      const double acc_norm = std::sqrt(acc_norm2);
      if (w_norm > 1e12 * b_norm) return false;  // hump: force more substeps
      const double err = std::abs(divdiff_[static_cast<std::size_t>(k)]) * w_norm;
      if (acc_norm > 0.0 && err <= tol_sub * acc_norm && prev_err <= tol_sub * acc_norm && k >= 2) {
        stats_.max_degree = std::max(stats_.max_degree, k);
        stats_.est_rel_error += err / std::max(acc_norm, 1e-300);
        converged = true;
        break;
      }
      prev_err = err;
    }
    if (!converged) return false;
    cur = acc;
  }
  out = std::move(cur);
  return true;
}

CVector LejaOperator::apply(std::span<const Complex> b) {
  require(static_cast<Index>(b.size()) == l_->nrows(), "invalid-input", "vector length mismatch");
  if (t_ == 0.0) return CVector(b.begin(), b.end());

  CVector out;
  for (int attempt = 0; attempt < opts_.max_attempts; ++attempt) {
    if (try_apply(b, out)) return out;
    substeps_ *= 2;
    rebuild();
  }
  fail("accuracy-failure", "Leja iteration stagnated at " + std::to_string(substeps_) +
                               " substeps; estimated error " +
                               std::to_string(stats_.est_rel_error));
}

CVector expm_action(const SparseComplexMatrix& l, std::span<const Complex> b, double t, double tol,
                    ExpmStats* stats) {
  LejaOptions opts;
  opts.tol = tol;
  LejaOperator op(l, t, opts);
  CVector out = op.apply(b);
  if (stats) *stats = op.stats();
  return out;
}

StepSequenceResult step_sequence(const SparseComplexMatrix& l, std::span<const Complex> b0,
                                 double tilde_tau, Index n_steps, bool renormalize,
                                 const LejaOptions& opts) {
  StepSequenceResult res;
  res.states.reserve(static_cast<std::size_t>(n_steps) + 1);
  step_sequence_cb(
      l, b0, tilde_tau, n_steps, renormalize,
      [&res](Index, const CVector& state) { res.states.push_back(state); }, opts);
  return res;
}

void step_sequence_cb(const SparseComplexMatrix& l, std::span<const Complex> b0, double tilde_tau,
                      Index n_steps, bool renormalize,
                      const std::function<void(Index, const CVector&)>& on_step,
                      const LejaOptions& opts) {
  require(tilde_tau > 0.0, "invalid-input", "tilde_tau must be positive");
  require(n_steps >= 0, "invalid-input", "n_steps must be >= 0");

  CVector cur(b0.begin(), b0.end());
  on_step(0, cur);
  if (n_steps == 0) return;

  LejaOperator op(l, tilde_tau, opts);
  auto norm2 = [](const CVector& v) {
    double acc = 0.0;
    for (const auto& x : v) acc += std::norm(x);
    return std::sqrt(acc);
  };
  const double target_norm = norm2(cur);
  for (Index n = 1; n <= n_steps; ++n) {
    cur = op.apply(cur);
    if (renormalize) {
      const double nn = norm2(cur);
      if (nn > 0.0)
        for (auto& x : cur) x *= target_norm / nn;
    }
    on_step(n, cur);
  }
}

}  // namespace kst
