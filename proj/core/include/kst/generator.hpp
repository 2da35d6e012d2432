#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "kst/indexing.hpp"
#include "kst/sparse_matrix.hpp"

namespace kst {

enum class GeneratorProvenance { analytic, datadriven };

// Sparse Galerkin matrix of the regularized generator L = W - theta * diag(eta)
// on the tensor-product basis indexed by TruncationParams.
struct GeneratorMatrix {
  SparseComplexMatrix L;
  double theta = 0.0;
  std::vector<double> eta_diag;  // per flattened index
  GeneratorProvenance provenance = GeneratorProvenance::analytic;
  TruncationParams trunc;

  Index dim() const { return L.nrows(); }

  // W = L + theta * diag(eta): the advection (skew) part in the phi basis.
  SparseComplexMatrix advection_part() const {
    return theta == 0.0 ? L : L.with_added_diagonal(eta_diag, theta);
  }
};

// Directory bundle: <prefix>.values/.indices/.eta KST1 arrays plus a text manifest.
void save_generator(const std::filesystem::path& prefix, const GeneratorMatrix& g);
GeneratorMatrix load_generator(const std::filesystem::path& prefix);

}  // namespace kst
