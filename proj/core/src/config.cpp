#include "kst/config.hpp"

#include <algorithm>
#include <cmath>

#include "kst/errors.hpp"

namespace kst {

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = {
      // flow / model
      "flow", "omega", "kappa", "C", "theta", "J", "F_l96",
      // truncations
      "ell_A", "ell_X1", "ell_X2", "ell_v",
      // sampling / simulation
      "tau", "n_samples", "spinup", "seed", "s0_mode",
      // kernel basis
      "k_nn_density", "k_nn_graph", "n_basis", "dirichlet_option", "eps_override",
      "scan_p_min", "scan_p_max", "scan_per_octave", "basis_method",
      // eigensolver
      "n_eig", "eig_target", "eig_tol", "eig_shift", "eig_method", "max_subspace",
      // generator options
      "antisymmetrize_u", "fd_endpoint", "drop_tol",
      // prediction
      "leja_tol", "tilde_tau", "n_steps", "renormalize", "kappa_tilde", "xbar1", "xbar2",
      "anchor_mode", "n_grid", "checkpoint_every",
      // monte carlo
      "M", "n_bins", "driver_kappa", "max_distinct_drivers",
      // file wiring
      "snapshots", "basis", "generator", "trajectory",
  };
  return keys;
}

void validate_run_config(const RunConfig& cfg) {
  cfg.validate_keys(known_config_keys());
  if (cfg.has("flow")) {
    const std::string flow = cfg.get_string("flow");
    require(flow == "moving" || flow == "switching" || flow == "l96" || flow == "circle",
            "config-error", "flow must be moving|switching|l96|circle");
  }
  if (cfg.has("dirichlet_option")) {
    const auto opt = cfg.get_int("dirichlet_option");
    require(opt >= 1 && opt <= 3, "config-error", "dirichlet_option must be 1, 2, or 3");
  }
  if (cfg.has("eig_target")) {
    const std::string t = cfg.get_string("eig_target");
    require(t == "smallest-modulus" || t == "largest-real", "config-error",
            "eig_target must be smallest-modulus|largest-real");
  }
  if (cfg.has("fd_endpoint")) {
    const std::string e = cfg.get_string("fd_endpoint");
    require(e == "zero" || e == "extrapolate", "config-error",
            "fd_endpoint must be zero|extrapolate");
  }
  for (const char* positive : {"theta", "tau", "tilde_tau", "leja_tol", "eig_tol"})
    if (cfg.has(positive))
      require(cfg.get_double(positive) >= 0.0, "config-error",
              std::string(positive) + " must be >= 0");
}

ResourceEstimate estimate_resources(const RunConfig& cfg) {
  ResourceEstimate est;
  const std::string flow = cfg.get_string("flow", "moving");
  const auto ell_a = cfg.get_int("ell_A", 8);
  const auto ell_x1 = cfg.get_int("ell_X1", 8);
  const auto ell_x2 = cfg.get_int("ell_X2", ell_x1);
  const auto n = cfg.get_int("n_samples", 0);

  const bool fourier_a = flow == "moving" || flow == "switching";
  const std::int64_t size_a = fourier_a ? 2 * ell_a + 1 : ell_a;
  const std::int64_t nx1 = 2 * ell_x1 + 1, nx2 = 2 * ell_x2 + 1;
  est.ell_total = size_a * nx1 * nx2;

  // per-row couplings: Bessel decay caps the offsets for the vortex flows; the
  // L96 shear couples all of ell_A x (2J+1) wavenumber offsets.
  std::int64_t per_row = 0;
  if (flow == "moving" || flow == "switching") {
    const std::int64_t band = std::min<std::int64_t>(nx1, 24);
    per_row = band * nx2 + 1;
  } else {
    const auto j = cfg.get_int("J", 20);
    per_row = ell_a * std::min<std::int64_t>(2 * j + 1, nx1) + ell_a;
  }
  est.est_generator_nnz = est.ell_total * per_row;
  est.est_generator_gib = static_cast<double>(est.est_generator_nnz) * 20.0 / (1 << 30);
  if (n > 0) {
    const auto k_graph =
        cfg.get_int("k_nn_graph", std::min<std::int64_t>(n, std::max<std::int64_t>(500, n / 10)));
    est.est_basis_gib = static_cast<double>(n) * static_cast<double>(k_graph) * 2.0 * 12.0 /
                        (1 << 30);
  }
  est.desk_scale = est.est_generator_gib + est.est_basis_gib < 8.0 && est.ell_total < 3000000;
  return est;
}

std::string tool_version() { return "kst 0.1.0"; }

}  // namespace kst
