// Serial reference kernels against the batched tape and the OpenMP loss.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "pigan/nn/generator.hpp"
#include "pigan/nn/mlp.hpp"
#include "pigan/nn/reference.hpp"
#include "pigan/parallel.hpp"
#include "pigan/physics.hpp"

using namespace pigan;

namespace {

struct Inputs {
  std::vector<Coord2> x;
  Eigen::MatrixXd noise;
};

Inputs make_inputs(int n, int m) {
  Rng rng = make_rng(3);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> g;
  Inputs in{{}, Eigen::MatrixXd(m, n)};
  for (int b = 0; b < n; ++b) {
    in.x.push_back({u01(rng), u01(rng)});
    for (int r = 0; r < m; ++r) in.noise(r, b) = g(rng);
  }
  return in;
}

const nn::Mlp& generator_net(int out) {
  static const nn::Mlp u = nn::init_network({7, 32, 32, 2}, 1);
  static const nn::Mlp e = nn::init_network({7, 32, 32, 1}, 2);
  return out == 2 ? u : e;
}

void BM_JetSerial(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto in = make_inputs(n, 5);
  const auto& net = generator_net(2);
  for (auto _ : state)
    for (int b = 0; b < n; ++b) {
      const double* xi = in.noise.col(b).data();
      benchmark::DoNotOptimize(nn::reference::forward_jet(net, in.x[b], {xi, 5}));
    }
  state.SetItemsProcessed(state.iterations() * n);
}

void BM_JetBatched(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto in = make_inputs(n, 5);
  const nn::MlpGenerator gen(generator_net(2));
  for (auto _ : state) benchmark::DoNotOptimize(gen.evaluate(in.x, in.noise, nn::JetLayout::second_order()));
  state.SetItemsProcessed(state.iterations() * n);
}

void BM_ForwardSerial(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto in = make_inputs(n, 5);
  const auto& net = generator_net(2);
  std::vector<double> v(7);
  for (auto _ : state)
    for (int b = 0; b < n; ++b) {
      v[0] = in.x[b].x1;
      v[1] = in.x[b].x2;
      for (int r = 0; r < 5; ++r) v[2 + r] = in.noise(r, b);
      benchmark::DoNotOptimize(nn::reference::forward(net, v));
    }
  state.SetItemsProcessed(state.iterations() * n);
}

void BM_ForwardBatched(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto in = make_inputs(n, 5);
  const nn::MlpGenerator gen(generator_net(2));
  for (auto _ : state) benchmark::DoNotOptimize(gen.evaluate(in.x, in.noise, nn::JetLayout::value_only()));
  state.SetItemsProcessed(state.iterations() * n);
}

/// PDE loss and its gradient on a 10x10 grid with 100 noise samples.
void BM_LossPde(benchmark::State& state) {
  parallel::set_threads(static_cast<int>(state.range(0)));
  const nn::MlpGenerator gu(generator_net(2)), ge(generator_net(1));
  const auto colloc = physics::make_collocation({10, 10}, 10);
  const auto noise = make_inputs(100, 5).noise;
  for (auto _ : state) benchmark::DoNotOptimize(physics::loss_pde(gu, ge, colloc, noise, {}));
  state.SetItemsProcessed(state.iterations() * 100 * 100);
}

}  // namespace

BENCHMARK(BM_JetSerial)->Arg(64)->Arg(1024);
BENCHMARK(BM_JetBatched)->Arg(64)->Arg(1024);
BENCHMARK(BM_ForwardSerial)->Arg(64)->Arg(1024);
BENCHMARK(BM_ForwardBatched)->Arg(64)->Arg(1024);
BENCHMARK(BM_LossPde)->Arg(1)->Arg(2)->Arg(4)->UseRealTime();

BENCHMARK_MAIN();
