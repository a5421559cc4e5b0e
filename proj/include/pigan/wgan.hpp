#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pigan/dataset.hpp"
#include "pigan/fem.hpp"
#include "pigan/nn/generator.hpp"
#include "pigan/nn/mlp.hpp"
#include "pigan/physics.hpp"

namespace pigan::wgan {

// ---------------------------------------------------------------------------
// Snapshots and adversarial losses

/// Generator outputs at every sensor for each noise column, flattened as
/// (component-interleaved) sensor order: rows K*i + k, one column per sample.
Eigen::MatrixXd generate_snapshots(const nn::Generator& gen_u,
                                   std::span<const Coord2> sensors,
                                   const Eigen::MatrixXd& noise);
Eigen::VectorXd generate_snapshot(const nn::Generator& gen_u,
                                  std::span<const Coord2> sensors,
                                  std::span<const double> xi);

/// Gradient of sum_b adjoint(:, b) . snapshot_b w.r.t. generator parameters.
std::vector<double> snapshot_vjp(const nn::Generator& gen_u,
                                 std::span<const Coord2> sensors,
                                 const Eigen::MatrixXd& noise,
                                 const Eigen::MatrixXd& adjoint);

struct CriticLoss {
  double value = 0.0;        ///< wasserstein + lambda * penalty
  double wasserstein = 0.0;  ///< mean D(fake) - mean D(real)
  double penalty = 0.0;      ///< mean (|grad D(v_hat)| - 1)^2
  std::vector<double> grad_critic;
  Eigen::MatrixXd grad_fake;  ///< d value / d fake batch
};

/// WGAN-GP critic loss with interpolates eps_b * real_b + (1 - eps_b) * fake_b.
CriticLoss critic_loss(const nn::Mlp& critic, const Eigen::MatrixXd& real,
                       const Eigen::MatrixXd& fake, double lambda,
                       const Eigen::VectorXd& eps);
/// Draws eps_b ~ U(0, 1) from `rng`.
CriticLoss critic_loss(const nn::Mlp& critic, const Eigen::MatrixXd& real,
                       const Eigen::MatrixXd& fake, double lambda, Rng& rng);

struct AdversarialLoss {
  double value = 0.0;          ///< -mean D(fake)
  Eigen::MatrixXd grad_fake;   ///< d value / d fake batch
};
AdversarialLoss generator_adversarial_loss(const nn::Mlp& critic, const Eigen::MatrixXd& fake);

/// -mean D(G(sensors, xi_b)) and its gradient w.r.t. the generator.
struct GeneratorAdversarial {
  double value = 0.0;
  std::vector<double> grad_u;
};
GeneratorAdversarial generator_adversarial(const nn::Mlp& critic, const nn::Generator& gen_u,
                                           std::span<const Coord2> sensors,
                                           const Eigen::MatrixXd& noise);

// ---------------------------------------------------------------------------
// Combined objectives

struct LossWeights {
  double adversarial = 1.0;
  double pde = 1.0;
  double bc = 1.0;
};

/// Noise draws for one evaluation of both objectives.
struct NoiseDraws {
  Eigen::MatrixXd generator;  ///< m x batch, fake snapshots for L_G^w
  Eigen::MatrixXd critic;     ///< m x batch, fake snapshots for L_D^w
  Eigen::MatrixXd pde;        ///< m x N_r
  Eigen::MatrixXd bc;         ///< m x N_b
  Eigen::VectorXd eps;        ///< batch interpolation weights
};

struct PhysicsProblem {
  std::vector<Coord2> sensors;
  physics::CollocationSet colloc;
  physics::ElasticityConstants constants;
  fem::BoundaryLoad load;
};

struct PiganLosses {
  double gen_adversarial = 0.0;
  double pde = 0.0;
  double bc = 0.0;
  double generator = 0.0;  ///< L_G^PI
  double critic = 0.0;     ///< L_D^PI
  double critic_penalty = 0.0;
  double critic_wasserstein = 0.0;
  std::vector<double> gen_grad_u, gen_grad_E;              ///< of L_G^PI
  std::vector<double> critic_grad_phi;                     ///< of L_D^PI
  std::vector<double> critic_grad_u, critic_grad_E;        ///< of L_D^PI
};

PiganLosses pigan_losses(const nn::Generator& gen_u, const nn::Generator& gen_E,
                         const nn::Mlp& critic, const Eigen::MatrixXd& real,
                         const PhysicsProblem& problem, const NoiseDraws& noise,
                         double lambda, const LossWeights& weights = {});

// ---------------------------------------------------------------------------
// Optimizer

struct AdamHyper {
  double lr = 1e-4;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double eps = 1e-8;
};

struct AdamState {
  AdamHyper hyper;
  std::int64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;

  AdamState() = default;
  AdamState(std::size_t n, AdamHyper h) : hyper(h), m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected Adam update in place.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

// ---------------------------------------------------------------------------
// Training

struct TrainingConfig {
  std::vector<int> hidden_u{128, 128, 128, 128};
  std::vector<int> hidden_E{128, 128, 128, 128};
  std::vector<int> hidden_critic{128, 128, 128, 128};
  int noise_dim = 5;
  int n_r = 100;
  int n_b = 100;
  int batch_size = 0;  ///< 0 = every snapshot in the dataset
  double lambda = 0.1;
  int gen_steps_per_critic = 5;
  std::int64_t total_steps = 100000;
  std::int64_t checkpoint_every = 1000;
  AdamHyper adam;
  LossWeights weights;
  physics::GridSpec interior_grid{10, 10};
  int boundary_points = 10;
  double nu = 0.3;
  fem::BoundaryLoad load;
  std::uint64_t init_seed = 1;
  std::uint64_t train_seed = 2;

  void validate() const;
  std::vector<int> widths_u() const;
  std::vector<int> widths_E() const;
  std::vector<int> widths_critic(std::size_t n_sensors) const;
};

struct TrainingRecord {
  std::int64_t step = 0;
  double gen_adversarial = 0.0;
  double pde = 0.0;
  double bc = 0.0;
  double critic_wasserstein = 0.0;
  double penalty = 0.0;
  double seconds = 0.0;
};

struct TrainingState {
  nn::Mlp gen_u;
  nn::Mlp gen_E;
  nn::Mlp critic;
  AdamState gen_opt;
  AdamState critic_opt;
  std::int64_t step = 0;
  std::uint64_t init_seed = 0;
  std::uint64_t train_seed = 0;
  /// Most recent critic-step values, reported on generator-only steps.
  double last_wasserstein = 0.0;
  double last_penalty = 0.0;
};

// Checkpoint layout (little-endian): char[8] "PIGANCK1", u32 version = 1,
// i64 step, u64 init_seed, u64 train_seed, f64 last_wasserstein,
// f64 last_penalty, string note, then networks
// gen_u, gen_E, critic (u32 n_widths, i32 widths[], f64 params[]), then the
// generator and critic Adam states (f64 lr beta1 beta2 eps, i64 step,
// u64 n, f64 m[n], f64 v[n]).
void write_checkpoint(const std::filesystem::path& path, const TrainingState& state,
                      const std::string& note = {});
TrainingState read_checkpoint(const std::filesystem::path& path, std::string* note = nullptr);

class Trainer {
 public:
  /// Fresh networks from config.init_seed.
  Trainer(TrainingConfig config, const data::SnapshotDataset& dataset);
  /// Continue from a saved state.
  Trainer(TrainingConfig config, const data::SnapshotDataset& dataset, TrainingState state);

  using StepCallback = std::function<void(const TrainingState&, const TrainingRecord&)>;

  /// Advances until state().step == config.total_steps. On a non-finite loss
  /// `on_abort` receives the last good state and a NumericalError is thrown.
  void run(const StepCallback& on_step = {},
           const std::function<void(const TrainingState&)>& on_abort = {});
  /// One schedule step: a critic update when step % ratio == 0, then a
  /// generator update.
  TrainingRecord step();

  const TrainingState& state() const { return state_; }
  const TrainingConfig& config() const { return config_; }
  const PhysicsProblem& problem() const { return problem_; }

 private:
  TrainingConfig config_;
  const data::SnapshotDataset* dataset_;
  Eigen::MatrixXd real_;
  PhysicsProblem problem_;
  TrainingState state_;
  std::chrono::steady_clock::time_point start_;
};

/// Noise for step `step`; every stream is derived from (train_seed, step).
NoiseDraws draw_noise(std::uint64_t train_seed, std::int64_t step, int noise_dim,
                      int batch, int n_r, int n_b);

/// Columns: step,L_G_w,L_PDE,L_BC,L_D_w,gp,seconds
void write_log_header(std::ostream& os);
void write_log_row(std::ostream& os, const TrainingRecord& r);

}  // namespace pigan::wgan
