#pragma once

#include <filesystem>
#include <string>

#include <Eigen/Dense>

#include "kst/errors.hpp"

namespace kst {

// Time-ordered driver observations: row n holds the observation-space vector at
// time n*tau.
struct SnapshotSet {
  Eigen::MatrixXd data;  // N x d, rows time-ordered with uniform spacing tau
  double tau = 0.0;
  std::string source;

  Eigen::Index count() const { return data.rows(); }
  Eigen::Index dim() const { return data.cols(); }

  void validate() const {
    require(data.rows() >= 3, "invalid-input", "need at least 3 snapshots");
    require(tau > 0.0, "invalid-input", "sampling interval must be positive");
  }
};

// KST1 matrix plus a "<path>.meta" sidecar holding tau and the source tag.
void save_snapshots(const std::filesystem::path& path, const SnapshotSet& s);
SnapshotSet load_snapshots(const std::filesystem::path& path);

}  // namespace kst
