#include "kst/snapshots.hpp"

#include <fstream>

#include "kst/io.hpp"

namespace kst {

void save_snapshots(const std::filesystem::path& path, const SnapshotSet& s) {
  s.validate();
  RealArray a;
  a.dims = {static_cast<std::uint64_t>(s.data.rows()), static_cast<std::uint64_t>(s.data.cols())};
  a.data.resize(static_cast<std::size_t>(s.data.size()));
  for (Eigen::Index r = 0; r < s.data.rows(); ++r)
    for (Eigen::Index c = 0; c < s.data.cols(); ++c)
      a.data[static_cast<std::size_t>(r * s.data.cols() + c)] = s.data(r, c);
  write_array(path, a);

  std::ofstream meta(path.string() + ".meta");
  require(meta.good(), "io-error", "cannot write sidecar for " + path.string());
  meta << "tau = " << format_g17(s.tau) << "\n";
  meta << "source = " << s.source << "\n";
}

SnapshotSet load_snapshots(const std::filesystem::path& path) {
  const RealArray a = read_real_array(path);
  require(a.dims.size() == 2, "io-error", "snapshot file must be a 2-d array");
  SnapshotSet s;
  s.data.resize(static_cast<Eigen::Index>(a.dims[0]), static_cast<Eigen::Index>(a.dims[1]));
  for (Eigen::Index r = 0; r < s.data.rows(); ++r)
    for (Eigen::Index c = 0; c < s.data.cols(); ++c)
      s.data(r, c) = a.data[static_cast<std::size_t>(r * s.data.cols() + c)];

  const RunConfig meta = RunConfig::from_file(path.string() + ".meta");
  s.tau = meta.get_double("tau");
  s.source = meta.get_string("source", "");
  s.validate();
  return s;
}

}  // namespace kst
