#include "pigan/dataset.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "pigan/binary_io.hpp"
#include "pigan/parallel.hpp"

namespace pigan::data {

Eigen::MatrixXd SnapshotDataset::as_matrix() const {
  const auto rows = static_cast<Eigen::Index>(2 * sensors.size());
  Eigen::MatrixXd m(rows, static_cast<Eigen::Index>(snapshots.size()));
  for (std::size_t j = 0; j < snapshots.size(); ++j)
    m.col(static_cast<Eigen::Index>(j)) =
        Eigen::Map<const Eigen::VectorXd>(snapshots[j].u.data(), rows);
  return m;
}

void SnapshotDataset::validate() const {
  if (sensors.empty()) throw ValidationError("dataset has no sensors");
  std::size_t n_terms = snapshots.empty() ? 0 : snapshots.front().kl_coefficients.size();
  for (const auto& s : snapshots) {
    if (s.u.size() != 2 * sensors.size())
      throw ValidationError("snapshot size does not match sensor count");
    if (s.kl_coefficients.size() != n_terms)
      throw ValidationError("inconsistent KL provenance across snapshots");
  }
  for (const auto& p : sensors)
    if (p.x1 < 0 || p.x1 > 1 || p.x2 < 0 || p.x2 > 1)
      throw ValidationError("sensor outside the unit square");
}

SnapshotDataset generate_dataset(const field::RandomFieldModel& model,
                                 const GenerationSpec& spec) {
  if (spec.n_snapshots < 1) throw ValidationError("n_snapshots must be >= 1");
  if (spec.sensors.empty()) throw ValidationError("no sensor locations given");
  spec.mesh.validate();
  spec.load.validate();

  SnapshotDataset ds;
  ds.sensors = spec.sensors;
  ds.fingerprint = spec.fingerprint;
  ds.snapshots.resize(static_cast<std::size_t>(spec.n_snapshots));

  parallel::for_each_index(ds.snapshots.size(), [&](std::size_t j) {
    Rng rng = make_rng(spec.seed, 0, j);
    const auto sample = field::sample_field(model, rng);
    fem::DisplacementField disp;
    try {
      disp = fem::solve_plane_stress([&](Coord2 x) { return sample(x); },
                                     spec.mesh, spec.load, spec.nu);
    } catch (const NumericalError& e) {
      throw NumericalError("snapshot " + std::to_string(j) + ": " + e.what());
    }
    Snapshot& snap = ds.snapshots[j];
    snap.u.resize(2 * ds.sensors.size());
    for (std::size_t i = 0; i < ds.sensors.size(); ++i) {
      const auto v = disp.at(ds.sensors[i]);
      snap.u[2 * i] = v[0];
      snap.u[2 * i + 1] = v[1];
    }
    snap.kl_coefficients = sample.kl_coefficients();
  });
  return ds;
}

namespace {
constexpr char kDatasetMagic[9] = "PIGANDS1";
}

void write_dataset(const std::filesystem::path& path, const SnapshotDataset& ds) {
  ds.validate();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  io::write_magic(os, kDatasetMagic);
  io::write_pod<std::uint32_t>(os, 1);
  io::write_pod<std::uint64_t>(os, ds.sensors.size());
  io::write_pod<std::uint64_t>(os, ds.snapshots.size());
  for (const auto& p : ds.sensors) {
    io::write_pod(os, p.x1);
    io::write_pod(os, p.x2);
  }
  io::write_string(os, ds.fingerprint);
  for (const auto& s : ds.snapshots) io::write_doubles(os, s.u.data(), s.u.size());
  const std::uint32_t n_terms =
      ds.snapshots.empty() ? 0 : static_cast<std::uint32_t>(ds.snapshots.front().kl_coefficients.size());
  io::write_pod(os, n_terms);
  for (const auto& s : ds.snapshots)
    io::write_doubles(os, s.kl_coefficients.data(), s.kl_coefficients.size());
  if (!os) throw IoError("failed writing " + path.string());
}

SnapshotDataset read_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open dataset " + path.string());
  io::expect_magic(is, kDatasetMagic, "dataset");
  if (io::read_pod<std::uint32_t>(is) != 1) throw IoError("unsupported dataset version");
  const auto n_sensors = io::read_pod<std::uint64_t>(is);
  const auto n_snap = io::read_pod<std::uint64_t>(is);
  if (n_sensors == 0 || n_sensors > 1'000'000 || n_snap > 100'000'000)
    throw IoError("corrupt dataset header");
  SnapshotDataset ds;
  ds.sensors.resize(n_sensors);
  for (auto& p : ds.sensors) {
    p.x1 = io::read_pod<double>(is);
    p.x2 = io::read_pod<double>(is);
  }
  ds.fingerprint = io::read_string(is);
  ds.snapshots.resize(n_snap);
  for (auto& s : ds.snapshots) {
    s.u.resize(2 * n_sensors);
    io::read_doubles(is, s.u.data(), s.u.size());
  }
  const auto n_terms = io::read_pod<std::uint32_t>(is);
  for (auto& s : ds.snapshots) {
    s.kl_coefficients.resize(n_terms);
    io::read_doubles(is, s.kl_coefficients.data(), n_terms);
  }
  ds.validate();
  return ds;
}

void write_dataset_csv(const std::filesystem::path& path, const SnapshotDataset& ds) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "snapshot_id,x1,x2,u1,u2\n" << std::setprecision(17);
  for (std::size_t j = 0; j < ds.snapshots.size(); ++j)
    for (std::size_t i = 0; i < ds.sensors.size(); ++i)
      os << j << ',' << ds.sensors[i].x1 << ',' << ds.sensors[i].x2 << ','
         << ds.snapshots[j].u[2 * i] << ',' << ds.snapshots[j].u[2 * i + 1] << '\n';
  if (!os) throw IoError("failed writing " + path.string());
}

}  // namespace pigan::data
