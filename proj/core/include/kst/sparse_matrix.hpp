#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "kst/indexing.hpp"

namespace kst {

using Complex = std::complex<double>;
using CVector = std::vector<Complex>;

struct Triplet {
  Index row;
  Index col;
  Complex value;
};

// Compressed-row complex matrix. Assembly is single-writer (triplets or a
// row-wise builder); duplicates are summed at finalize; immutable afterwards.
class SparseComplexMatrix {
public:
  SparseComplexMatrix() = default;

  // Sums duplicate (row, col) entries, then drops entries with |value| < drop_tol.
  static SparseComplexMatrix from_triplets(Index nrows, Index ncols, std::vector<Triplet> entries,
                                           double drop_tol = 0.0);

  Index nrows() const { return nrows_; }
  Index ncols() const { return ncols_; }
  Index nnz() const { return static_cast<Index>(values_.size()); }

  std::span<const Index> row_ptr() const { return row_ptr_; }
  std::span<const std::int32_t> cols() const { return cols_; }
  std::span<const Complex> values() const { return values_; }

  // Zero if the entry is not stored.
  Complex get(Index row, Index col) const;

  void matvec(std::span<const Complex> x, std::span<Complex> y) const;
  CVector matvec(std::span<const Complex> x) const;

  SparseComplexMatrix transpose() const;
  SparseComplexMatrix adjoint() const;  // conjugate transpose, entrywise exact

  // B = alpha*A; diagonal shift helpers used by generator assembly.
  SparseComplexMatrix scaled(Complex alpha) const;
  SparseComplexMatrix with_added_diagonal(std::span<const double> d, Complex alpha) const;
  // B_rc = A_rc * s_r * s_c (real row/column scaling).
  SparseComplexMatrix scaled_rows_cols(std::span<const double> s) const;

  double max_abs() const;

private:
  Index nrows_ = 0;
  Index ncols_ = 0;
  std::vector<Index> row_ptr_;
  std::vector<std::int32_t> cols_;
  std::vector<Complex> values_;

  friend class SparseRowBuilder;
};

// Two-pass row-ordered builder: rows must be appended in increasing order
// (columns within a row in any order; duplicates within a row are summed).
class SparseRowBuilder {
public:
  SparseRowBuilder(Index nrows, Index ncols);
  void add(Index row, Index col, Complex value);
  SparseComplexMatrix finalize(double drop_tol = 0.0);

private:
  Index nrows_;
  Index ncols_;
  Index current_row_ = -1;
  std::vector<Index> row_ptr_;
  std::vector<std::int32_t> cols_;
  std::vector<Complex> values_;
};

}  // namespace kst
