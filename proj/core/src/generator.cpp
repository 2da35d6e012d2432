#include "kst/generator.hpp"

#include <fstream>

#include "kst/io.hpp"

namespace kst {

void save_generator(const std::filesystem::path& prefix, const GeneratorMatrix& g) {
  const auto base = prefix.string();
  const Index nnz = g.L.nnz();

  RealArray idx;
  idx.dims = {2, static_cast<std::uint64_t>(nnz)};
  idx.data.resize(static_cast<std::size_t>(2 * nnz));
  ComplexArray vals;
  vals.dims = {static_cast<std::uint64_t>(nnz)};
  vals.data.resize(static_cast<std::size_t>(nnz));
  Index p = 0;
  for (Index r = 0; r < g.L.nrows(); ++r) {
    for (Index q = g.L.row_ptr()[static_cast<std::size_t>(r)];
         q < g.L.row_ptr()[static_cast<std::size_t>(r) + 1]; ++q, ++p) {
      idx.data[static_cast<std::size_t>(p)] = static_cast<double>(r);
      idx.data[static_cast<std::size_t>(nnz + p)] =
          static_cast<double>(g.L.cols()[static_cast<std::size_t>(q)]);
      vals.data[static_cast<std::size_t>(p)] = g.L.values()[static_cast<std::size_t>(q)];
    }
  }
  write_array(base + ".indices.kst", idx);
  write_array(base + ".values.kst", vals);
  write_array(base + ".eta.kst", RealArray{{g.eta_diag.size()}, g.eta_diag});

  std::ofstream mf(base + ".manifest");
  require(mf.good(), "io-error", "cannot write manifest " + base);
  mf << "format = kst-generator-1\n";
  mf << "nrows = " << g.L.nrows() << "\n";
  mf << "theta = " << format_g17(g.theta) << "\n";
  mf << "provenance = " << (g.provenance == GeneratorProvenance::analytic ? "analytic" : "datadriven")
     << "\n";
  mf << "a_basis = " << (g.trunc.a_basis == ABasis::fourier ? "fourier" : "datadriven") << "\n";
  mf << "ell_A = " << g.trunc.ell_A << "\n";
  mf << "ell_X1 = " << g.trunc.ell_X1 << "\n";
  mf << "ell_X2 = " << g.trunc.ell_X2 << "\n";
  mf << "ell_v = " << g.trunc.ell_v << "\n";
}

GeneratorMatrix load_generator(const std::filesystem::path& prefix) {
  const auto base = prefix.string();
  const RunConfig mf = RunConfig::from_file(base + ".manifest");
  require(mf.get_string("format") == "kst-generator-1", "io-error", "unknown generator format");

  GeneratorMatrix g;
  g.theta = mf.get_double("theta");
  g.provenance = mf.get_string("provenance") == "analytic" ? GeneratorProvenance::analytic
                                                           : GeneratorProvenance::datadriven;
  g.trunc.a_basis = mf.get_string("a_basis") == "fourier" ? ABasis::fourier : ABasis::datadriven;
  g.trunc.ell_A = mf.get_int("ell_A");
  g.trunc.ell_X1 = mf.get_int("ell_X1");
  g.trunc.ell_X2 = mf.get_int("ell_X2");
  g.trunc.ell_v = mf.get_int("ell_v");
  const Index n = mf.get_int("nrows");

  const RealArray idx = read_real_array(base + ".indices.kst");
  const ComplexArray vals = read_complex_array(base + ".values.kst");
  require(idx.dims.size() == 2 && idx.dims[0] == 2, "io-error", "bad index array shape");
  const auto nnz = static_cast<std::size_t>(idx.dims[1]);
  require(vals.data.size() == nnz, "io-error", "index/value length mismatch");

  std::vector<Triplet> t(nnz);
  for (std::size_t p = 0; p < nnz; ++p)
    t[p] = {static_cast<Index>(idx.data[p]), static_cast<Index>(idx.data[nnz + p]), vals.data[p]};
  g.L = SparseComplexMatrix::from_triplets(n, n, std::move(t));

  const RealArray eta = read_real_array(base + ".eta.kst");
  g.eta_diag = eta.data;
  require(static_cast<Index>(g.eta_diag.size()) == n, "io-error", "eta length mismatch");
  return g;
}

}  // namespace kst
