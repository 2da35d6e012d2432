#include "kst/sparse_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "kst/errors.hpp"
#include "kst/parallel.hpp"

namespace kst {

namespace {

void check_dims(Index nrows, Index ncols) {
  require(nrows >= 0 && ncols >= 0, "invalid-input", "negative matrix dimension");
  require(ncols <= std::numeric_limits<std::int32_t>::max(), "invalid-input",
          "column count exceeds 32-bit index range");
}

}  // namespace

SparseComplexMatrix SparseComplexMatrix::from_triplets(Index nrows, Index ncols,
                                                       std::vector<Triplet> entries,
                                                       double drop_tol) {
  check_dims(nrows, ncols);
  for (const auto& e : entries)
    require(e.row >= 0 && e.row < nrows && e.col >= 0 && e.col < ncols, "range-error",
            "triplet index out of range");
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseComplexMatrix m;
  m.nrows_ = nrows;
  m.ncols_ = ncols;
  m.row_ptr_.assign(static_cast<std::size_t>(nrows) + 1, 0);
  m.cols_.reserve(entries.size());
  m.values_.reserve(entries.size());

  std::size_t i = 0;
  for (Index r = 0; r < nrows; ++r) {
    m.row_ptr_[static_cast<std::size_t>(r)] = static_cast<Index>(m.values_.size());
    while (i < entries.size() && entries[i].row == r) {
      Complex v = entries[i].value;
      const Index c = entries[i].col;
      ++i;
      while (i < entries.size() && entries[i].row == r && entries[i].col == c) {
        v += entries[i].value;
        ++i;
      }
      if (std::abs(v) >= drop_tol) {
        m.cols_.push_back(static_cast<std::int32_t>(c));
        m.values_.push_back(v);
      }
    }
  }
  m.row_ptr_[static_cast<std::size_t>(nrows)] = static_cast<Index>(m.values_.size());
  return m;
}

Complex SparseComplexMatrix::get(Index row, Index col) const {
  require(row >= 0 && row < nrows_ && col >= 0 && col < ncols_, "range-error",
          "entry index out of range");
  const auto b = cols_.begin() + row_ptr_[static_cast<std::size_t>(row)];
  const auto e = cols_.begin() + row_ptr_[static_cast<std::size_t>(row) + 1];
  const auto it = std::lower_bound(b, e, static_cast<std::int32_t>(col));
  if (it == e || *it != static_cast<std::int32_t>(col)) return {0.0, 0.0};
  return values_[static_cast<std::size_t>(it - cols_.begin())];
}

void SparseComplexMatrix::matvec(std::span<const Complex> x, std::span<Complex> y) const {
  require(static_cast<Index>(x.size()) == ncols_ && static_cast<Index>(y.size()) == nrows_,
          "invalid-input", "matvec dimension mismatch");
  parallel_blocks(0, nrows_, [&](Index r0, Index r1) {
    for (Index r = r0; r < r1; ++r) {
      Complex acc{0.0, 0.0};
      const Index b = row_ptr_[static_cast<std::size_t>(r)];
      const Index e = row_ptr_[static_cast<std::size_t>(r) + 1];
      for (Index p = b; p < e; ++p)
        acc += values_[static_cast<std::size_t>(p)] * x[static_cast<std::size_t>(cols_[static_cast<std::size_t>(p)])];
      y[static_cast<std::size_t>(r)] = acc;
    }
  });
}

CVector SparseComplexMatrix::matvec(std::span<const Complex> x) const {
  CVector y(static_cast<std::size_t>(nrows_));
  matvec(x, y);
  return y;
}

SparseComplexMatrix SparseComplexMatrix::transpose() const {
  SparseComplexMatrix m;
  m.nrows_ = ncols_;
  m.ncols_ = nrows_;
  m.row_ptr_.assign(static_cast<std::size_t>(ncols_) + 1, 0);
  m.cols_.resize(values_.size());
  m.values_.resize(values_.size());
  for (std::int32_t c : cols_) ++m.row_ptr_[static_cast<std::size_t>(c) + 1];
  for (std::size_t r = 1; r < m.row_ptr_.size(); ++r) m.row_ptr_[r] += m.row_ptr_[r - 1];
  std::vector<Index> next(m.row_ptr_.begin(), m.row_ptr_.end() - 1);
  for (Index r = 0; r < nrows_; ++r) {
    for (Index p = row_ptr_[static_cast<std::size_t>(r)]; p < row_ptr_[static_cast<std::size_t>(r) + 1]; ++p) {
      const auto c = static_cast<std::size_t>(cols_[static_cast<std::size_t>(p)]);
      const auto slot = static_cast<std::size_t>(next[c]++);
      m.cols_[slot] = static_cast<std::int32_t>(r);
      m.values_[slot] = values_[static_cast<std::size_t>(p)];
    }
  }
  return m;
}

SparseComplexMatrix SparseComplexMatrix::adjoint() const {
  SparseComplexMatrix m = transpose();
  for (auto& v : m.values_) v = std::conj(v);
  return m;
}

SparseComplexMatrix SparseComplexMatrix::scaled(Complex alpha) const {
  SparseComplexMatrix m = *this;
  for (auto& v : m.values_) v *= alpha;
  return m;
}

SparseComplexMatrix SparseComplexMatrix::with_added_diagonal(std::span<const double> d,
                                                             Complex alpha) const {
  require(nrows_ == ncols_ && static_cast<Index>(d.size()) == nrows_, "invalid-input",
          "diagonal length mismatch");
  std::vector<Triplet> t;
  t.reserve(values_.size() + static_cast<std::size_t>(nrows_));
  for (Index r = 0; r < nrows_; ++r)
    for (Index p = row_ptr_[static_cast<std::size_t>(r)]; p < row_ptr_[static_cast<std::size_t>(r) + 1]; ++p)
      t.push_back({r, static_cast<Index>(cols_[static_cast<std::size_t>(p)]), values_[static_cast<std::size_t>(p)]});
  for (Index r = 0; r < nrows_; ++r) t.push_back({r, r, alpha * d[static_cast<std::size_t>(r)]});
  return from_triplets(nrows_, ncols_, std::move(t));
}

SparseComplexMatrix SparseComplexMatrix::scaled_rows_cols(std::span<const double> s) const {
  require(nrows_ == ncols_ && static_cast<Index>(s.size()) == nrows_, "invalid-input",
          "scaling vector length mismatch");
  SparseComplexMatrix m = *this;
  for (Index r = 0; r < nrows_; ++r) {
    const double sr = s[static_cast<std::size_t>(r)];
    for (Index p = row_ptr_[static_cast<std::size_t>(r)]; p < row_ptr_[static_cast<std::size_t>(r) + 1]; ++p)
      m.values_[static_cast<std::size_t>(p)] *= sr * s[static_cast<std::size_t>(cols_[static_cast<std::size_t>(p)])];
  }
  return m;
}

double SparseComplexMatrix::max_abs() const {
  double m = 0.0;
  for (const auto& v : values_) m = std::max(m, std::abs(v));
  return m;
}

SparseRowBuilder::SparseRowBuilder(Index nrows, Index ncols) : nrows_(nrows), ncols_(ncols) {
  check_dims(nrows, ncols);
  row_ptr_.reserve(static_cast<std::size_t>(nrows) + 1);
}

void SparseRowBuilder::add(Index row, Index col, Complex value) {
  require(row >= current_row_ && row < nrows_, "invalid-input",
          "rows must be appended in non-decreasing order");
  require(col >= 0 && col < ncols_, "range-error", "column out of range");
  while (current_row_ < row) {
    row_ptr_.push_back(static_cast<Index>(values_.size()));
    ++current_row_;
  }
  cols_.push_back(static_cast<std::int32_t>(col));
  values_.push_back(value);
}

SparseComplexMatrix SparseRowBuilder::finalize(double drop_tol) {
  while (current_row_ < nrows_) {
    row_ptr_.push_back(static_cast<Index>(values_.size()));
    ++current_row_;
  }
  row_ptr_.push_back(static_cast<Index>(values_.size()));

  SparseComplexMatrix m;
  m.nrows_ = nrows_;
  m.ncols_ = ncols_;
  m.row_ptr_.assign(static_cast<std::size_t>(nrows_) + 1, 0);
  m.cols_.reserve(cols_.size());
  m.values_.reserve(values_.size());

  std::vector<std::size_t> order;
  for (Index r = 0; r < nrows_; ++r) {
    const auto b = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(r)]);
    const auto e = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(r) + 1]);
    m.row_ptr_[static_cast<std::size_t>(r)] = static_cast<Index>(m.values_.size());
    order.resize(e - b);
    for (std::size_t p = 0; p < order.size(); ++p) order[p] = b + p;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b2) { return cols_[a] < cols_[b2]; });
    std::size_t p = 0;
    while (p < order.size()) {
      const std::int32_t c = cols_[order[p]];
      Complex v = values_[order[p]];
      ++p;
      while (p < order.size() && cols_[order[p]] == c) {
        v += values_[order[p]];
        ++p;
      }
      if (std::abs(v) >= drop_tol) {
        m.cols_.push_back(c);
        m.values_.push_back(v);
      }
    }
  }
  m.row_ptr_[static_cast<std::size_t>(nrows_)] = static_cast<Index>(m.values_.size());
  return m;
}

}  // namespace kst
