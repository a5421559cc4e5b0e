#include "pigan/wgan.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include "pigan/binary_io.hpp"
#include "pigan/nn/critic.hpp"
#include "pigan/parallel.hpp"

namespace pigan::wgan {

namespace {

constexpr std::size_t kEvalChunk = 128;

std::size_t snapshots_per_chunk(std::size_t n_sensors) {
  return std::max<std::size_t>(1, kEvalChunk / std::max<std::size_t>(1, n_sensors));
}

// Generator pass for snapshots [first, last): sample b at every sensor.
std::unique_ptr<nn::GeneratorPass> snapshot_pass(const nn::Generator& gen,
                                                 std::span<const Coord2> sensors,
                                                 const Eigen::MatrixXd& noise,
                                                 std::size_t first, std::size_t last) {
  const std::size_t s = sensors.size();
  std::vector<Coord2> xs;
  xs.reserve((last - first) * s);
  Eigen::MatrixXd nz(noise.rows(), static_cast<Eigen::Index>((last - first) * s));
  for (std::size_t b = first; b < last; ++b)
    for (std::size_t i = 0; i < s; ++i) {
      nz.col(static_cast<Eigen::Index>(xs.size())) = noise.col(static_cast<Eigen::Index>(b));
      xs.push_back(sensors[i]);
    }
  return gen.evaluate(xs, nz, nn::JetLayout::value_only());
}

void add_to(std::vector<double>& acc, const std::vector<double>& v) {
  for (std::size_t k = 0; k < v.size(); ++k) acc[k] += v[k];
}

}  // namespace

Eigen::MatrixXd generate_snapshots(const nn::Generator& gen_u,
                                   std::span<const Coord2> sensors,
                                   const Eigen::MatrixXd& noise) {
  const std::size_t s = sensors.size();
  const int k_out = gen_u.output_dim();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(k_out * s), noise.cols());
  const auto chunks = parallel::make_chunks(static_cast<std::size_t>(noise.cols()),
                                            snapshots_per_chunk(s));
  parallel::for_each_index(chunks.size(), [&](std::size_t ci) {
    const auto ch = chunks[ci];
    const auto pass = snapshot_pass(gen_u, sensors, noise, ch.begin, ch.end);
    const auto& o = pass->outputs();
    for (std::size_t b = ch.begin; b < ch.end; ++b)
      for (std::size_t i = 0; i < s; ++i)
        for (int k = 0; k < k_out; ++k)
          out(static_cast<Eigen::Index>(k_out * i + k), static_cast<Eigen::Index>(b)) =
              o(k, static_cast<Eigen::Index>((b - ch.begin) * s + i));
  });
  return out;
}

Eigen::VectorXd generate_snapshot(const nn::Generator& gen_u,
                                  std::span<const Coord2> sensors,
                                  std::span<const double> xi) {
  if (static_cast<int>(xi.size()) != gen_u.noise_dim())
    throw ValidationError("noise vector length does not match generator noise dimension");
  const Eigen::MatrixXd nz = Eigen::Map<const Eigen::VectorXd>(xi.data(), static_cast<Eigen::Index>(xi.size()));
  return generate_snapshots(gen_u, sensors, nz).col(0);
}

std::vector<double> snapshot_vjp(const nn::Generator& gen_u,
                                 std::span<const Coord2> sensors,
                                 const Eigen::MatrixXd& noise,
                                 const Eigen::MatrixXd& adjoint) {
  const std::size_t s = sensors.size();
  const int k_out = gen_u.output_dim();
  if (adjoint.rows() != static_cast<Eigen::Index>(k_out * s) || adjoint.cols() != noise.cols())
    throw std::logic_error("snapshot adjoint has the wrong shape");
  const auto chunks = parallel::make_chunks(static_cast<std::size_t>(noise.cols()),
                                            snapshots_per_chunk(s));
  std::vector<std::vector<double>> partial(chunks.size());
  parallel::for_each_index(chunks.size(), [&](std::size_t ci) {
    const auto ch = chunks[ci];
    const auto pass = snapshot_pass(gen_u, sensors, noise, ch.begin, ch.end);
    Eigen::MatrixXd adj(k_out, static_cast<Eigen::Index>(ch.size() * s));
    for (std::size_t b = ch.begin; b < ch.end; ++b)
      for (std::size_t i = 0; i < s; ++i)
        for (int k = 0; k < k_out; ++k)
          adj(k, static_cast<Eigen::Index>((b - ch.begin) * s + i)) =
              adjoint(static_cast<Eigen::Index>(k_out * i + k), static_cast<Eigen::Index>(b));
    partial[ci].assign(gen_u.parameter_count(), 0.0);
    pass->backward(adj, partial[ci]);
  });
  std::vector<double> grad(gen_u.parameter_count(), 0.0);
  for (const auto& p : partial) add_to(grad, p);
  return grad;
}

CriticLoss critic_loss(const nn::Mlp& critic, const Eigen::MatrixXd& real,
                       const Eigen::MatrixXd& fake, double lambda,
                       const Eigen::VectorXd& eps) {
  if (real.cols() < 1 || real.cols() != fake.cols() || real.rows() != fake.rows())
    throw ValidationError("real and fake batches must have equal, non-zero size");
  if (eps.size() != real.cols()) throw ValidationError("one interpolation weight per pair required");
  if (!(lambda >= 0.0)) throw ValidationError("gradient penalty coefficient must be >= 0");
  const double inv_b = 1.0 / static_cast<double>(real.cols());

  CriticLoss out;
  out.grad_critic.assign(critic.parameter_count(), 0.0);

  const nn::JetTape real_tape(critic, real, nn::JetLayout::value_only());
  const nn::JetTape fake_tape(critic, fake, nn::JetLayout::value_only());
  out.wasserstein = fake_tape.output().mean() - real_tape.output().mean();
  real_tape.backward(Eigen::MatrixXd::Constant(1, real.cols(), -inv_b), out.grad_critic);
  fake_tape.backward(Eigen::MatrixXd::Constant(1, fake.cols(), inv_b), out.grad_critic,
                     &out.grad_fake);

  Eigen::MatrixXd interp(real.rows(), real.cols());
  for (Eigen::Index b = 0; b < real.cols(); ++b)
    interp.col(b) = eps(b) * real.col(b) + (1.0 - eps(b)) * fake.col(b);
  Eigen::MatrixXd grad_interp;
  const auto pen = nn::gradient_penalty(critic, interp, lambda * inv_b, out.grad_critic,
                                        &grad_interp);
  out.penalty = (pen.grad_norms.array() - 1.0).square().mean();
  out.value = out.wasserstein + lambda * out.penalty;
  for (Eigen::Index b = 0; b < real.cols(); ++b)
    out.grad_fake.col(b) += (1.0 - eps(b)) * grad_interp.col(b);
  return out;
}

CriticLoss critic_loss(const nn::Mlp& critic, const Eigen::MatrixXd& real,
                       const Eigen::MatrixXd& fake, double lambda, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd eps(real.cols());
  for (auto& e : eps) e = u(rng);
  return critic_loss(critic, real, fake, lambda, eps);
}

AdversarialLoss generator_adversarial_loss(const nn::Mlp& critic, const Eigen::MatrixXd& fake) {
  if (fake.cols() < 1) throw ValidationError("fake batch must not be empty");
  if (critic.output_dim() != 1) throw std::logic_error("critic must have a scalar output");
  const nn::JetTape tape(critic, fake, nn::JetLayout::value_only());
  AdversarialLoss out;
  out.value = -tape.output().mean();
  tape.backward(Eigen::MatrixXd::Constant(1, fake.cols(), -1.0 / static_cast<double>(fake.cols())),
                {}, &out.grad_fake);
  return out;
}

GeneratorAdversarial generator_adversarial(const nn::Mlp& critic, const nn::Generator& gen_u,
                                           std::span<const Coord2> sensors,
                                           const Eigen::MatrixXd& noise) {
  const std::size_t s = sensors.size();
  const int k_out = gen_u.output_dim();
  const auto chunks = parallel::make_chunks(static_cast<std::size_t>(noise.cols()),
                                            snapshots_per_chunk(s));
  const double inv_b = 1.0 / static_cast<double>(noise.cols());
  std::vector<double> values(chunks.size(), 0.0);
  std::vector<std::vector<double>> partial(chunks.size());

  parallel::for_each_index(chunks.size(), [&](std::size_t ci) {
    const auto ch = chunks[ci];
    const auto pass = snapshot_pass(gen_u, sensors, noise, ch.begin, ch.end);
    const auto& o = pass->outputs();
    Eigen::MatrixXd fake(static_cast<Eigen::Index>(k_out * s), static_cast<Eigen::Index>(ch.size()));
    for (std::size_t b = 0; b < ch.size(); ++b)
      for (std::size_t i = 0; i < s; ++i)
        for (int k = 0; k < k_out; ++k)
          fake(static_cast<Eigen::Index>(k_out * i + k), static_cast<Eigen::Index>(b)) =
              o(k, static_cast<Eigen::Index>(b * s + i));
    const nn::JetTape tape(critic, fake, nn::JetLayout::value_only());
    values[ci] = -tape.output().sum() * inv_b;
    Eigen::MatrixXd grad_fake;
    tape.backward(Eigen::MatrixXd::Constant(1, fake.cols(), -inv_b), {}, &grad_fake);
    Eigen::MatrixXd adj(k_out, o.cols());
    for (std::size_t b = 0; b < ch.size(); ++b)
      for (std::size_t i = 0; i < s; ++i)
        for (int k = 0; k < k_out; ++k)
          adj(k, static_cast<Eigen::Index>(b * s + i)) =
              grad_fake(static_cast<Eigen::Index>(k_out * i + k), static_cast<Eigen::Index>(b));
    partial[ci].assign(gen_u.parameter_count(), 0.0);
    pass->backward(adj, partial[ci]);
  });

  GeneratorAdversarial out;
  out.grad_u.assign(gen_u.parameter_count(), 0.0);
  for (std::size_t ci = 0; ci < chunks.size(); ++ci) {
    out.value += values[ci];
    add_to(out.grad_u, partial[ci]);
  }
  return out;
}

PiganLosses pigan_losses(const nn::Generator& gen_u, const nn::Generator& gen_E,
                         const nn::Mlp& critic, const Eigen::MatrixXd& real,
                         const PhysicsProblem& problem, const NoiseDraws& noise,
                         double lambda, const LossWeights& weights) {
  PiganLosses out;
  const auto adv = generator_adversarial(critic, gen_u, problem.sensors, noise.generator);
  const auto pde = physics::loss_pde(gen_u, gen_E, problem.colloc, noise.pde, problem.constants);
  const auto bc = physics::loss_bc(gen_u, gen_E, problem.colloc, noise.bc, problem.constants,
                                   problem.load);
  out.gen_adversarial = adv.value;
  out.pde = pde.value;
  out.bc = bc.value;
  out.generator = weights.adversarial * adv.value + weights.pde * pde.value + weights.bc * bc.value;
  out.gen_grad_u.assign(gen_u.parameter_count(), 0.0);
  out.gen_grad_E.assign(gen_E.parameter_count(), 0.0);
  for (std::size_t k = 0; k < out.gen_grad_u.size(); ++k)
    out.gen_grad_u[k] = weights.adversarial * adv.grad_u[k] + weights.pde * pde.grad_u[k] +
                        weights.bc * bc.grad_u[k];
  for (std::size_t k = 0; k < out.gen_grad_E.size(); ++k)
    out.gen_grad_E[k] = weights.pde * pde.grad_E[k] + weights.bc * bc.grad_E[k];

  const Eigen::MatrixXd fake = generate_snapshots(gen_u, problem.sensors, noise.critic);
  auto cl = critic_loss(critic, real, fake, lambda, noise.eps);
  out.critic = cl.value;
  out.critic_penalty = cl.penalty;
  out.critic_wasserstein = cl.wasserstein;
  out.critic_grad_phi = std::move(cl.grad_critic);
  out.critic_grad_u = snapshot_vjp(gen_u, problem.sensors, noise.critic, cl.grad_fake);
  // The modulus generator never feeds the critic.
  out.critic_grad_E.assign(gen_E.parameter_count(), 0.0);
  return out;
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw ValidationError("Adam parameter, gradient and state sizes differ");
  const auto& h = state.hyper;
  ++state.step;
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = grads[k];
    state.m[k] = h.beta1 * state.m[k] + (1.0 - h.beta1) * g;
    state.v[k] = h.beta2 * state.v[k] + (1.0 - h.beta2) * g * g;
    const double m_hat = state.m[k] / c1;
    const double v_hat = state.v[k] / c2;
    params[k] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
  }
}

// ---------------------------------------------------------------------------

void TrainingConfig::validate() const {
  auto positive = [](auto v, const char* what) {
    if (!(v > 0)) throw ValidationError(std::string(what) + " must be positive");
  };
  positive(noise_dim, "noise_dim");
  positive(n_r, "n_r");
  positive(n_b, "n_b");
  positive(gen_steps_per_critic, "gen_steps_per_critic");
  positive(checkpoint_every, "checkpoint_every");
  positive(boundary_points, "boundary_points");
  positive(interior_grid.nx, "interior grid nx");
  positive(interior_grid.ny, "interior grid ny");
  positive(adam.lr, "learning rate");
  positive(adam.eps, "adam epsilon");
  if (batch_size < 0) throw ValidationError("batch_size must be >= 0");
  if (total_steps < 0) throw ValidationError("total_steps must be >= 0");
  if (!(lambda >= 0.0)) throw ValidationError("lambda must be >= 0");
  for (double w : {weights.adversarial, weights.pde, weights.bc})
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("loss weights must be finite and >= 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0))
    throw ValidationError("Adam betas must lie in [0, 1)");
  for (const auto* h : {&hidden_u, &hidden_E, &hidden_critic})
    for (int w : *h) positive(w, "hidden width");
  physics::ElasticityConstants{nu}.validate();
  load.validate();
}

namespace {
std::vector<int> with_ends(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> w{in};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(out);
  return w;
}
}  // namespace

std::vector<int> TrainingConfig::widths_u() const { return with_ends(2 + noise_dim, hidden_u, 2); }
std::vector<int> TrainingConfig::widths_E() const { return with_ends(2 + noise_dim, hidden_E, 1); }
std::vector<int> TrainingConfig::widths_critic(std::size_t n_sensors) const {
  return with_ends(static_cast<int>(2 * n_sensors), hidden_critic, 1);
}

namespace {

constexpr char kCheckpointMagic[9] = "PIGANCK1";

void write_adam(std::ostream& os, const AdamState& s) {
  for (double v : {s.hyper.lr, s.hyper.beta1, s.hyper.beta2, s.hyper.eps}) io::write_pod(os, v);
  io::write_pod<std::int64_t>(os, s.step);
  io::write_pod<std::uint64_t>(os, s.m.size());
  io::write_doubles(os, s.m.data(), s.m.size());
  io::write_doubles(os, s.v.data(), s.v.size());
}

AdamState read_adam(std::istream& is) {
  AdamState s;
  s.hyper.lr = io::read_pod<double>(is);
  s.hyper.beta1 = io::read_pod<double>(is);
  s.hyper.beta2 = io::read_pod<double>(is);
  s.hyper.eps = io::read_pod<double>(is);
  s.step = io::read_pod<std::int64_t>(is);
  const auto n = io::read_pod<std::uint64_t>(is);
  if (n > (std::uint64_t{1} << 32)) throw IoError("corrupt optimizer state");
  s.m.resize(n);
  s.v.resize(n);
  io::read_doubles(is, s.m.data(), n);
  io::read_doubles(is, s.v.data(), n);
  return s;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const TrainingState& state,
                      const std::string& note) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp + " for writing");
    io::write_magic(os, kCheckpointMagic);
    io::write_pod<std::uint32_t>(os, 1);
    io::write_pod<std::int64_t>(os, state.step);
    io::write_pod<std::uint64_t>(os, state.init_seed);
    io::write_pod<std::uint64_t>(os, state.train_seed);
    io::write_pod(os, state.last_wasserstein);
    io::write_pod(os, state.last_penalty);
    io::write_string(os, note);
    nn::write_network(os, state.gen_u);
    nn::write_network(os, state.gen_E);
    nn::write_network(os, state.critic);
    write_adam(os, state.gen_opt);
    write_adam(os, state.critic_opt);
    if (!os) throw IoError("failed writing " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

TrainingState read_checkpoint(const std::filesystem::path& path, std::string* note) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  io::expect_magic(is, kCheckpointMagic, "checkpoint");
  if (io::read_pod<std::uint32_t>(is) != 1) throw IoError("unsupported checkpoint version");
  TrainingState s;
  s.step = io::read_pod<std::int64_t>(is);
  s.init_seed = io::read_pod<std::uint64_t>(is);
  s.train_seed = io::read_pod<std::uint64_t>(is);
  s.last_wasserstein = io::read_pod<double>(is);
  s.last_penalty = io::read_pod<double>(is);
  const auto n = io::read_string(is);
  if (note) *note = n;
  s.gen_u = nn::read_network(is);
  s.gen_E = nn::read_network(is);
  s.critic = nn::read_network(is);
  s.gen_opt = read_adam(is);
  s.critic_opt = read_adam(is);
  if (s.gen_opt.m.size() != s.gen_u.parameter_count() + s.gen_E.parameter_count() ||
      s.critic_opt.m.size() != s.critic.parameter_count())
    throw IoError("checkpoint optimizer state does not match its networks");
  return s;
}

NoiseDraws draw_noise(std::uint64_t train_seed, std::int64_t step, int noise_dim,
                      int batch, int n_r, int n_b) {
  const auto idx = static_cast<std::uint64_t>(step);
  auto gaussian = [&](std::uint64_t stream, int cols) {
    Rng rng = make_rng(train_seed, stream, idx);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd m(noise_dim, cols);
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = normal(rng);
    return m;
  };
  NoiseDraws d;
  d.generator = gaussian(1, batch);
  d.pde = gaussian(2, n_r);
  d.bc = gaussian(3, n_b);
  d.critic = gaussian(4, batch);
  Rng rng = make_rng(train_seed, 5, idx);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  d.eps.resize(batch);
  for (auto& e : d.eps) e = u(rng);
  return d;
}

namespace {

TrainingState fresh_state(const TrainingConfig& c, std::size_t n_sensors) {
  TrainingState s;
  s.init_seed = c.init_seed;
  s.train_seed = c.train_seed;
  s.gen_u = nn::init_network(c.widths_u(), derive_seed(c.init_seed, 11));
  s.gen_E = nn::init_network(c.widths_E(), derive_seed(c.init_seed, 12));
  s.critic = nn::init_network(c.widths_critic(n_sensors), derive_seed(c.init_seed, 13));
  s.gen_opt = AdamState(s.gen_u.parameter_count() + s.gen_E.parameter_count(), c.adam);
  s.critic_opt = AdamState(s.critic.parameter_count(), c.adam);
  return s;
}

}  // namespace

Trainer::Trainer(TrainingConfig config, const data::SnapshotDataset& dataset)
    : Trainer(config, dataset, fresh_state(config, dataset.sensor_count())) {}

Trainer::Trainer(TrainingConfig config, const data::SnapshotDataset& dataset, TrainingState state)
    : config_(std::move(config)), dataset_(&dataset), state_(std::move(state)) {
  config_.validate();
  dataset.validate();
  if (dataset.snapshot_count() < 1) throw ValidationError("dataset has no snapshots");
  if (config_.batch_size > static_cast<int>(dataset.snapshot_count()))
    throw ValidationError("batch_size exceeds the number of snapshots");
  if (state_.gen_u.widths() != config_.widths_u() || state_.gen_E.widths() != config_.widths_E() ||
      state_.critic.widths() != config_.widths_critic(dataset.sensor_count()))
    throw ValidationError("network shapes do not match the configuration and dataset");
  real_ = dataset.as_matrix();
  problem_.sensors = dataset.sensors;
  problem_.colloc = physics::make_collocation(config_.interior_grid, config_.boundary_points);
  problem_.constants.nu = config_.nu;
  problem_.load = config_.load;
  start_ = std::chrono::steady_clock::now();
}

TrainingRecord Trainer::step() {
  const auto& c = config_;
  const int batch = c.batch_size > 0 ? c.batch_size : static_cast<int>(real_.cols());
  const auto noise = draw_noise(state_.train_seed, state_.step, c.noise_dim, batch, c.n_r, c.n_b);
  const nn::MlpGenerator gen_u(state_.gen_u);
  const nn::MlpGenerator gen_E(state_.gen_E);
  auto fail = [&](const std::string& what) {
    throw NumericalError("step " + std::to_string(state_.step) + ": non-finite " + what);
  };
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };

  // Critic first, every gen_steps_per_critic steps. Pending updates are
  // applied only after every loss of the step is known to be finite.
  std::vector<double> critic_grad;
  double wasserstein = state_.last_wasserstein;
  double penalty = state_.last_penalty;
  if (state_.step % c.gen_steps_per_critic == 0) {
    Eigen::MatrixXd real = real_;
    if (batch < real_.cols()) {
      std::vector<Eigen::Index> idx(static_cast<std::size_t>(real_.cols()));
      std::iota(idx.begin(), idx.end(), 0);
      Rng rng = make_rng(state_.train_seed, 6, static_cast<std::uint64_t>(state_.step));
      std::shuffle(idx.begin(), idx.end(), rng);
      real.resize(real_.rows(), batch);
      for (int b = 0; b < batch; ++b) real.col(b) = real_.col(idx[b]);
    }
    const Eigen::MatrixXd fake = generate_snapshots(gen_u, problem_.sensors, noise.critic);
    auto cl = critic_loss(state_.critic, real, fake, c.lambda, noise.eps);
    if (!std::isfinite(cl.value) || !finite(cl.grad_critic)) fail("critic loss");
    wasserstein = cl.wasserstein;
    penalty = cl.penalty;
    critic_grad = std::move(cl.grad_critic);
  }

  const auto adv = generator_adversarial(state_.critic, gen_u, problem_.sensors, noise.generator);
  const auto pde = physics::loss_pde(gen_u, gen_E, problem_.colloc, noise.pde, problem_.constants);
  const auto bc = physics::loss_bc(gen_u, gen_E, problem_.colloc, noise.bc, problem_.constants,
                                   problem_.load);
  if (!std::isfinite(adv.value) || !std::isfinite(pde.value) || !std::isfinite(bc.value) ||
      !finite(adv.grad_u) || !finite(pde.grad_u) || !finite(pde.grad_E) || !finite(bc.grad_u) ||
      !finite(bc.grad_E))
    fail("generator loss");

  state_.last_wasserstein = wasserstein;
  state_.last_penalty = penalty;
  if (!critic_grad.empty()) adam_step(state_.critic_opt, state_.critic.parameters(), critic_grad);

  const std::size_t nu_params = state_.gen_u.parameter_count();
  const std::size_t ne_params = state_.gen_E.parameter_count();
  std::vector<double> params(nu_params + ne_params), grads(nu_params + ne_params);
  std::copy_n(state_.gen_u.parameters().begin(), nu_params, params.begin());
  std::copy_n(state_.gen_E.parameters().begin(), ne_params, params.begin() + nu_params);
  for (std::size_t k = 0; k < nu_params; ++k)
    grads[k] = c.weights.adversarial * adv.grad_u[k] + c.weights.pde * pde.grad_u[k] +
               c.weights.bc * bc.grad_u[k];
  for (std::size_t k = 0; k < ne_params; ++k)
    grads[nu_params + k] = c.weights.pde * pde.grad_E[k] + c.weights.bc * bc.grad_E[k];
  adam_step(state_.gen_opt, params, grads);
  std::copy_n(params.begin(), nu_params, state_.gen_u.parameters().begin());
  std::copy_n(params.begin() + nu_params, ne_params, state_.gen_E.parameters().begin());

  TrainingRecord rec;
  rec.step = state_.step;
  rec.gen_adversarial = adv.value;
  rec.pde = pde.value;
  rec.bc = bc.value;
  rec.critic_wasserstein = state_.last_wasserstein;
  rec.penalty = state_.last_penalty;
  ++state_.step;
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  return rec;
}

void Trainer::run(const StepCallback& on_step,
                  const std::function<void(const TrainingState&)>& on_abort) {
  while (state_.step < config_.total_steps) {
    TrainingRecord rec;
    try {
      rec = step();
    } catch (const NumericalError&) {
      if (on_abort) on_abort(state_);
      throw;
    }
    if (on_step) on_step(state_, rec);
  }
}

void write_log_header(std::ostream& os) { os << "step,L_G_w,L_PDE,L_BC,L_D_w,gp,seconds\n"; }

void write_log_row(std::ostream& os, const TrainingRecord& r) {
  os << r.step << ',' << std::setprecision(10) << r.gen_adversarial << ',' << r.pde << ','
     << r.bc << ',' << r.critic_wasserstein << ',' << r.penalty << ',' << std::setprecision(6)
     << r.seconds << '\n';
}

}  // namespace pigan::wgan
