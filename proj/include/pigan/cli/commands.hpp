#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pigan/cli/config.hpp"
#include "pigan/dataset.hpp"
#include "pigan/stats.hpp"

namespace pigan::cli {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitValidation = 2,
  kExitNumerical = 3,
  kExitIo = 4,
};

/// Solves config.data.n_snapshots FEM problems and writes the dataset
/// atomically. Returns the dataset that was written.
data::SnapshotDataset cmd_generate_data(const RunConfig& config,
                                        const std::filesystem::path& out,
                                        bool with_csv = false);

struct TrainOptions {
  bool resume = false;
  std::ostream* progress = nullptr;  ///< one line per checkpoint when set
};

/// Trains into run_dir (config.json, fingerprint.txt, log.csv,
/// checkpoints/step_XXXXXXXX.bin). Returns the final state.
wgan::TrainingState cmd_train(const RunConfig& config, const data::SnapshotDataset& dataset,
                              const std::filesystem::path& run_dir,
                              const TrainOptions& options = {});

std::filesystem::path checkpoint_path(const std::filesystem::path& run_dir, std::int64_t step);
/// Highest-step checkpoint in run_dir/checkpoints; nullopt when there is none.
std::optional<std::filesystem::path> latest_checkpoint(const std::filesystem::path& run_dir);

struct EvalSummary {
  double mean_error_analytic = 0.0;  ///< relative L2, generated vs analytic moments
  double std_error_analytic = 0.0;
  double mean_error_sampled = 0.0;   ///< relative L2, generated vs reference ensemble
  double std_error_sampled = 0.0;
  std::int64_t checkpoint_step = -1;  ///< -1 for the identity pipeline
};

/// Mean/std relative-L2 errors of a modulus generator against the analytic
/// moments of the field model (no files written).
EvalSummary evaluate_generator_errors(const RunConfig& config, const nn::Mlp& gen_E);

/// Writes the report CSVs. With `identity` the generated ensemble is a copy
/// of the reference ensemble and `state` is ignored.
EvalSummary cmd_evaluate(const RunConfig& config, const wgan::TrainingState* state,
                         const std::filesystem::path& report_dir, bool identity = false);

/// Runs sweep.trials trainings for every cell and writes sweep_trials.csv and
/// sweep_summary.csv into out_dir.
std::vector<stats::SweepCell> cmd_sweep(const RunConfig& config,
                                        const data::SnapshotDataset& dataset,
                                        const std::filesystem::path& out_dir,
                                        std::ostream* progress = nullptr);

/// Full command-line entry point; args exclude the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pigan::cli
