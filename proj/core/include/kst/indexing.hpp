#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "kst/errors.hpp"

namespace kst {

using Index = std::int64_t;

// Which basis lives on the driver factor A. The Fourier case uses signed mode
// numbers i in [-ell_A, ell_A]; the data-driven case uses ordinals i in [0, ell_A).
enum class ABasis { fourier, datadriven };

struct TruncationParams {
  ABasis a_basis = ABasis::fourier;
  Index ell_A = 1;   // basis count on A (Fourier: max |mode|)
  Index ell_X1 = 1;  // max wavenumber along x1; per-axis size 2*ell_X1+1
  Index ell_X2 = 1;  // max wavenumber along x2
  Index ell_v = 1;   // velocity spectral truncation (<= size_A())

  static TruncationParams fourier(Index ell_a, Index ell_x1, Index ell_x2) {
    return {ABasis::fourier, ell_a, ell_x1, ell_x2, 2 * ell_a + 1};
  }
  static TruncationParams datadriven(Index ell_a, Index ell_x1, Index ell_x2, Index ell_v = -1) {
    return {ABasis::datadriven, ell_a, ell_x1, ell_x2, ell_v < 0 ? ell_a : ell_v};
  }

  Index size_A() const { return a_basis == ABasis::fourier ? 2 * ell_A + 1 : ell_A; }
  Index size_X1() const { return 2 * ell_X1 + 1; }
  Index size_X2() const { return 2 * ell_X2 + 1; }
  Index ell_total() const { return size_A() * size_X1() * size_X2(); }

  // First (lowest) A index: -ell_A for Fourier modes, 0 for ordinals.
  Index a_first() const { return a_basis == ABasis::fourier ? -ell_A : 0; }
  Index a_last() const { return a_basis == ABasis::fourier ? ell_A : ell_A - 1; }
  // Index of the constant basis function on A.
  Index a_constant() const { return 0; }

  void validate() const {
    require(ell_A >= 1 && ell_X1 >= 1 && ell_X2 >= 1, "invalid-input",
            "truncation counts must be >= 1");
    require(ell_v >= 1 && ell_v <= size_A(), "invalid-input", "ell_v must lie in [1, size_A]");
  }
};

struct MultiIndex {
  Index i = 0;  // basis index on A (signed Fourier mode or ordinal)
  Index j = 0;  // wavenumber along x1
  Index k = 0;  // wavenumber along x2

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
};

inline bool in_box(const MultiIndex& m, const TruncationParams& t) {
  return m.i >= t.a_first() && m.i <= t.a_last() && m.j >= -t.ell_X1 && m.j <= t.ell_X1 &&
         m.k >= -t.ell_X2 && m.k <= t.ell_X2;
}

// Row-major flattening, i slowest and k fastest; index 0 is the (a_first, -ell_X1, -ell_X2)
// corner. Bijective on the index box of t.
inline Index flatten_index(const MultiIndex& m, const TruncationParams& t) {
  require(in_box(m, t), "range-error", "multi-index outside the truncation box");
  const Index oi = m.i - t.a_first();
  const Index oj = m.j + t.ell_X1;
  const Index ok = m.k + t.ell_X2;
  return (oi * t.size_X1() + oj) * t.size_X2() + ok;
}

inline MultiIndex unflatten_index(Index n, const TruncationParams& t) {
  require(n >= 0 && n < t.ell_total(), "range-error", "linear index outside [0, ell_total)");
  const Index ok = n % t.size_X2();
  const Index rest = n / t.size_X2();
  const Index oj = rest % t.size_X1();
  const Index oi = rest / t.size_X1();
  return {oi + t.a_first(), oj - t.ell_X1, ok - t.ell_X2};
}

// Permutation that sorts energies in non-decreasing order; ties keep the lower
// original index first.
inline std::vector<Index> dirichlet_sort(const std::vector<double>& energies) {
  for (double e : energies)
    require(std::isfinite(e) && e >= 0.0, "invalid-input", "Dirichlet energies must be finite and >= 0");
  std::vector<Index> perm(energies.size());
  std::iota(perm.begin(), perm.end(), Index{0});
  std::stable_sort(perm.begin(), perm.end(),
                   [&](Index a, Index b) { return energies[a] < energies[b]; });
  return perm;
}

}  // namespace kst
