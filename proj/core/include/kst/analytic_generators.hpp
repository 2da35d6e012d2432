#pragma once

#include "kst/generator.hpp"
#include "kst/indexing.hpp"
#include "kst/sparse_matrix.hpp"

namespace kst {

enum class VortexFlavor { moving, switching };

// Periodic Gaussian-vortex flows on T^3 = A x X. The streamfunction carries a
// 1/I_0(kappa)^2 normalization so that each circular Gaussian factor is a von
// Mises density with respect to the normalized Haar measure:
//   moving:    zeta(a)(x) = exp(kappa [cos(x1 - a) + cos x2]) / I_0(kappa)^2
//   switching: zeta(a)(x) = C cos(a) g(x1, x2) + C sin(a) g(x1 - pi, x2),
//              g(x1, x2) = exp(kappa [cos x1 + cos x2]) / I_0(kappa)^2
// with velocity v = (-d_2 zeta, d_1 zeta) and driver rotation Phi_t(a) = a + omega t.
struct VortexParams {
  double omega = 1.0;
  double kappa = 0.5;
  double C = 2.0;  // vortex strength, switching flavor only
  VortexFlavor flavor = VortexFlavor::moving;

  void validate() const {
    require(kappa > 0.0, "invalid-input", "kappa must be positive");
    if (flavor == VortexFlavor::switching)
      require(C > 0.0, "invalid-input", "switching flow needs C > 0");
  }
};

// I_|n|(kappa) / I_0(kappa), in [0, 1]. Stable for 0 <= kappa <= ~700 via a
// downward Miller recurrence; kappa beyond that overflows the unscaled Bessel
// functions and raises a range error.
double bessel_ratio(Index n, double kappa);

// Full generator entry <phi_ijk, w(phi_lmn)> (advection + i omega l driver term).
Complex moving_vortex_entry(const MultiIndex& row, const MultiIndex& col, const VortexParams& p);
Complex switching_vortex_entry(const MultiIndex& row, const MultiIndex& col, const VortexParams& p);

// L = W - theta * diag(eta_ijk), eta_ijk = i^2 + j^2 + k^2, on the signed Fourier
// box of t; advection entries below drop_tol are discarded.
GeneratorMatrix assemble_generator_analytic(const VortexParams& p, const TruncationParams& t,
                                            double theta, double drop_tol = 1e-14);

}  // namespace kst
