#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pigan/fem.hpp"
#include "pigan/physics.hpp"
#include "pigan/random_field.hpp"
#include "pigan/wgan.hpp"

namespace pigan::cli {

struct FieldConfig {
  field::UniformGrid kl_grid{25, 25};
  field::KernelSpec kernel;
  int kl_terms = 5;
  double alpha = 1.0;
  double beta = 0.1;
};

struct PhysicsConfig {
  double nu = 0.3;
  fem::BoundaryLoad load;
};

struct DataConfig {
  fem::MeshSpec mesh;
  int sensors_per_side = 10;
  int n_snapshots = 1000;
  std::uint64_t seed = 0;
};

struct EvalConfig {
  field::UniformGrid grid{25, 25};
  int n_generated = 1000;
  int n_reference = 10000;
  std::uint64_t generated_seed = 101;
  std::uint64_t reference_seed = 202;
  std::string pdf_method = "kde";  ///< "kde" or "histogram"
  int pdf_points = 201;
  double bandwidth = 0.0;  ///< 0 = Silverman
};

struct SweepConfig {
  std::string kind = "n_r";  ///< "n_r" (collocation grids) or "n_u"
  std::vector<physics::GridSpec> grids{{4, 4}, {6, 6}, {8, 8}, {10, 10}, {15, 15}, {20, 20}};
  std::vector<int> n_u{100, 200, 500, 1000};
  int trials = 3;
  std::int64_t steps = 2000;
  std::uint64_t seed = 7;
};

/// Every setting of a pipeline run. Training noise and network settings live
/// in `training`; its nu and load are taken from `physics`.
struct RunConfig {
  FieldConfig field;
  PhysicsConfig physics;
  DataConfig data;
  wgan::TrainingConfig training;
  EvalConfig evaluation;
  SweepConfig sweep;

  void validate() const;
  /// Training configuration with the physics section applied.
  wgan::TrainingConfig effective_training() const;
  field::RandomFieldModel build_field_model() const;
};

/// Parses a JSON document; missing keys keep their defaults, unknown keys
/// and ill-typed values raise ValidationError.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);
std::string dump_config(const RunConfig& c);

/// Canonical sorted "key=value" lines over the field, physics and data
/// sections.
std::string data_fingerprint(const RunConfig& c);
/// Lines of the two fingerprints that differ on keys that affect the
/// measurements (snapshot count and seed excluded), as "key: a != b".
std::vector<std::string> fingerprint_conflicts(const std::string& dataset_fp,
                                               const std::string& config_fp);
/// 16 hex digits (FNV-1a) of a fingerprint.
std::string fingerprint_hash(const std::string& fp);

}  // namespace pigan::cli
