#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pigan/fem.hpp"
#include "pigan/random_field.hpp"

namespace pigan::data {

/// Displacement readings of one realization at every sensor, interleaved
/// (u1, u2) in sensor order.
struct Snapshot {
  std::vector<double> u;
  /// KL coefficients of the generating modulus field; empty if unknown.
  std::vector<double> kl_coefficients;
};

struct SnapshotDataset {
  std::vector<Coord2> sensors;
  std::vector<Snapshot> snapshots;
  /// Canonical "key=value" lines describing how the data was produced.
  std::string fingerprint;

  std::size_t sensor_count() const { return sensors.size(); }
  std::size_t snapshot_count() const { return snapshots.size(); }
  /// (2 * sensors) x snapshots, one column per snapshot.
  Eigen::MatrixXd as_matrix() const;
  void validate() const;
};

struct GenerationSpec {
  fem::MeshSpec mesh;
  fem::BoundaryLoad load;
  double nu = 0.3;
  std::vector<Coord2> sensors;
  int n_snapshots = 1000;
  std::uint64_t seed = 0;
  std::string fingerprint;
};

/// Solves one plane-stress problem per sampled modulus field and interpolates
/// the displacements to the sensors. Snapshot j draws its field from
/// derive_seed(seed, 0, j), so the result is independent of scheduling.
SnapshotDataset generate_dataset(const field::RandomFieldModel& model,
                                 const GenerationSpec& spec);

// Binary layout (little-endian):
//   char[8] "PIGANDS1", u32 version = 1, u64 sensor_count, u64 snapshot_count,
//   f64 sensors[sensor_count][2], u64 len + fingerprint bytes,
//   f64 u[snapshot_count][sensor_count][2]            (row-major records)
//   u32 n_terms (0 = no provenance), f64 kl[snapshot_count][n_terms]
void write_dataset(const std::filesystem::path& path, const SnapshotDataset& ds);
SnapshotDataset read_dataset(const std::filesystem::path& path);

/// Columns: snapshot_id,x1,x2,u1,u2.
void write_dataset_csv(const std::filesystem::path& path, const SnapshotDataset& ds);

}  // namespace pigan::data
