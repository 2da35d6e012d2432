#include "kst/analytic_generators.hpp"

#include <cmath>
#include <vector>

#include "kst/errors.hpp"
#include "kst/parallel.hpp"

namespace kst {

double bessel_ratio(Index n, double kappa) {
  require(kappa >= 0.0, "invalid-input", "bessel_ratio needs kappa >= 0");
  require(kappa <= 700.0, "range-error", "bessel_ratio overflows beyond kappa ~ 700");
  n = n < 0 ? -n : n;
  if (kappa == 0.0) return n == 0 ? 1.0 : 0.0;
  if (n == 0) return 1.0;

  // Downward Miller recurrence on unscaled values; only the ratio survives.
  const Index start = std::max<Index>(n, static_cast<Index>(kappa)) + 40 +
                      static_cast<Index>(std::sqrt(40.0 * std::max<double>(n, kappa)));
  double above = 0.0;     // I_{k+1}
  double here = 1e-280;   // I_k (arbitrary scale)
  double at_n = 0.0;
  for (Index k = start; k >= 1; --k) {
    const double below = (2.0 * static_cast<double>(k) / kappa) * here + above;
    above = here;
    here = below;
    if (k - 1 == n) at_n = here;
    if (std::abs(here) > 1e250) {
      here *= 1e-250;
      above *= 1e-250;
      at_n *= 1e-250;
    }
  }
  return at_n / here;  // here == I_0 at loop exit
}

namespace {

// Common spatial factor of both vortex flavors:
//   G(row, col) = (n p - m q) R(|p|) R(|q|),  p = m - j, q = n - k,
// where R(x) = I_|x|(kappa)/I_0(kappa). Uses a precomputed ratio table.
struct RatioTable {
  std::vector<double> r;
  explicit RatioTable(Index max_arg, double kappa) : r(static_cast<std::size_t>(max_arg) + 1) {
    for (Index x = 0; x <= max_arg; ++x) r[static_cast<std::size_t>(x)] = bessel_ratio(x, kappa);
  }
  double operator()(Index x) const { return r[static_cast<std::size_t>(x < 0 ? -x : x)]; }
};

double spatial_factor(const MultiIndex& row, const MultiIndex& col, const RatioTable& R) {
  const Index p = col.j - row.j;
  const Index q = col.k - row.k;
  return static_cast<double>(col.k * p - col.j * q) * R(p) * R(q);
}

}  // namespace

Complex moving_vortex_entry(const MultiIndex& row, const MultiIndex& col, const VortexParams& p) {
  p.validate();
  require(p.flavor == VortexFlavor::moving, "invalid-input", "moving flavor expected");
  const RatioTable R(std::max(std::abs(col.j - row.j), std::abs(col.k - row.k)) + 1, p.kappa);
  Complex v{0.0, 0.0};
  if (row.i + row.j == col.i + col.j) v += spatial_factor(row, col, R);
  if (row == col) v += Complex{0.0, p.omega * static_cast<double>(col.i)};
  return v;
}

Complex switching_vortex_entry(const MultiIndex& row, const MultiIndex& col,
                               const VortexParams& p) {
  p.validate();
  require(p.flavor == VortexFlavor::switching, "invalid-input", "switching flavor expected");
  const RatioTable R(std::max(std::abs(col.j - row.j), std::abs(col.k - row.k)) + 1, p.kappa);
  Complex v{0.0, 0.0};
  const double g = 0.5 * p.C * spatial_factor(row, col, R);
  const double parity = (col.j - row.j) % 2 == 0 ? 1.0 : -1.0;
  if (row.i == col.i + 1) v += Complex{g, -g * parity};
  if (row.i == col.i - 1) v += Complex{g, g * parity};
  if (row == col) v += Complex{0.0, p.omega * static_cast<double>(col.i)};
  return v;
}

GeneratorMatrix assemble_generator_analytic(const VortexParams& p, const TruncationParams& t,
                                            double theta, double drop_tol) {
  p.validate();
  t.validate();
  require(t.a_basis == ABasis::fourier, "invalid-input",
          "analytic generators use the Fourier basis on A");
  require(theta >= 0.0, "invalid-input", "theta must be >= 0");

  const Index n = t.ell_total();
  const RatioTable R(2 * std::max(t.ell_X1, t.ell_X2) + 1, p.kappa);

  // Per-row entry generation; rows are independent, merged in order afterwards.
  std::vector<std::vector<std::pair<Index, Complex>>> rows(static_cast<std::size_t>(n));
  parallel_for(0, n, [&](Index r) {
    const MultiIndex ri = unflatten_index(r, t);
    auto& out = rows[static_cast<std::size_t>(r)];
    if (p.flavor == VortexFlavor::moving) {
      const Index s = ri.i + ri.j;
      for (Index m = -t.ell_X1; m <= t.ell_X1; ++m) {
        const Index l = s - m;
        if (l < -t.ell_A || l > t.ell_A) continue;
        for (Index nn = -t.ell_X2; nn <= t.ell_X2; ++nn) {
          const MultiIndex ci{l, m, nn};
          const double g = spatial_factor(ri, ci, R);
          if (std::abs(g) >= drop_tol)
            out.emplace_back(flatten_index(ci, t), Complex{g, 0.0});
        }
      }
    } else {
      for (Index l : {ri.i - 1, ri.i + 1}) {
        if (l < -t.ell_A || l > t.ell_A) continue;
        const double sign = (l == ri.i - 1) ? -1.0 : 1.0;  // row.i == l+1 vs l-1
        for (Index m = -t.ell_X1; m <= t.ell_X1; ++m) {
          const double parity = (m - ri.j) % 2 == 0 ? 1.0 : -1.0;
          for (Index nn = -t.ell_X2; nn <= t.ell_X2; ++nn) {
            const MultiIndex ci{l, m, nn};
            const double g = 0.5 * p.C * spatial_factor(ri, ci, R);
            const Complex v{g, sign * g * parity};
            if (std::abs(v) >= drop_tol) out.emplace_back(flatten_index(ci, t), v);
          }
        }
      }
    }
    // Driver term i*omega*l on the diagonal.
    if (p.omega != 0.0 && ri.i != 0) {
      const Complex d{0.0, p.omega * static_cast<double>(ri.i)};
      bool merged = false;
      for (auto& [c, v] : out)
        if (c == r) {
          v += d;
          merged = true;
          break;
        }
      if (!merged) out.emplace_back(r, d);
    }
  });

  SparseRowBuilder builder(n, n);
  for (Index r = 0; r < n; ++r)
    for (const auto& [c, v] : rows[static_cast<std::size_t>(r)]) builder.add(r, c, v);
  SparseComplexMatrix W = builder.finalize(drop_tol);

  GeneratorMatrix g;
  g.theta = theta;
  g.provenance = GeneratorProvenance::analytic;
  g.trunc = t;
  g.eta_diag.resize(static_cast<std::size_t>(n));
  for (Index r = 0; r < n; ++r) {
    const MultiIndex mi = unflatten_index(r, t);
    g.eta_diag[static_cast<std::size_t>(r)] =
        static_cast<double>(mi.i * mi.i + mi.j * mi.j + mi.k * mi.k);
  }
  g.L = theta == 0.0 ? std::move(W) : W.with_added_diagonal(g.eta_diag, -theta);
  return g;
}

}  // namespace kst
