#pragma once

#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "kst/sparse_matrix.hpp"
#include "kst/snapshots.hpp"

namespace kst::testing {

inline Eigen::MatrixXcd to_dense(const SparseComplexMatrix& m) {
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(m.nrows(), m.ncols());
  for (Index r = 0; r < m.nrows(); ++r)
    for (Index p = m.row_ptr()[static_cast<std::size_t>(r)];
         p < m.row_ptr()[static_cast<std::size_t>(r) + 1]; ++p)
      d(r, m.cols()[static_cast<std::size_t>(p)]) = m.values()[static_cast<std::size_t>(p)];
  return d;
}

// Equispaced points on the circle embedded in R^2.
inline SnapshotSet equispaced_circle(Index n) {
  SnapshotSet s;
  s.tau = 1.0;
  s.source = "circle-equispaced";
  s.data.resize(n, 2);
  for (Index i = 0; i < n; ++i) {
    const double a = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n);
    s.data(i, 0) = std::cos(a);
    s.data(i, 1) = std::sin(a);
  }
  return s;
}

// Irrational rotation on the circle embedded in R^2.
inline SnapshotSet circle_snapshots(Index n, double step, double tau = 0.01) {
  SnapshotSet s;
  s.tau = tau;
  s.source = "circle";
  s.data.resize(n, 2);
  for (Index i = 0; i < n; ++i) {
    const double a = step * static_cast<double>(i);
    s.data(i, 0) = std::cos(a);
    s.data(i, 1) = std::sin(a);
  }
  return s;
}

inline Eigen::VectorXd circle_phases(Index n, double step) {
  Eigen::VectorXd p(n);
  for (Index i = 0; i < n; ++i)
    p[i] = std::fmod(step * static_cast<double>(i), 2.0 * M_PI);
  return p;
}

inline double wrap_pi(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a < 0) a += 2.0 * M_PI;
  return a - M_PI;
}

}  // namespace kst::testing
