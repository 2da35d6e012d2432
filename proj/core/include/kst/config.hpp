#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kst/io.hpp"

namespace kst {

// Every key a run configuration may carry; unknown keys are rejected up front.
const std::vector<std::string>& known_config_keys();

void validate_run_config(const RunConfig& cfg);

struct ResourceEstimate {
  std::int64_t ell_total = 0;
  std::int64_t est_generator_nnz = 0;
  double est_generator_gib = 0.0;
  double est_basis_gib = 0.0;
  bool desk_scale = true;  // false once the estimate exceeds the desk budget
};

// Coarse memory model used by `kst <cmd> --validate`: the generator dominates at
// large ell, the pairwise kernel stage at large N.
ResourceEstimate estimate_resources(const RunConfig& cfg);

std::string tool_version();

}  // namespace kst
