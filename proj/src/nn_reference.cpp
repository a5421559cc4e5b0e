#include "pigan/nn/reference.hpp"

#include <cmath>

namespace pigan::nn::reference {

Jet2 operator+(const Jet2& a, const Jet2& b) {
  Jet2 r;
  r.value = a.value + b.value;
  for (int i = 0; i < 2; ++i) r.d1[i] = a.d1[i] + b.d1[i];
  for (int i = 0; i < 3; ++i) r.d2[i] = a.d2[i] + b.d2[i];
  return r;
}

Jet2 operator*(double s, const Jet2& a) {
  Jet2 r;
  r.value = s * a.value;
  for (int i = 0; i < 2; ++i) r.d1[i] = s * a.d1[i];
  for (int i = 0; i < 3; ++i) r.d2[i] = s * a.d2[i];
  return r;
}

Jet2 operator*(const Jet2& a, const Jet2& b) {
  Jet2 r;
  r.value = a.value * b.value;
  r.d1[0] = a.d1[0] * b.value + a.value * b.d1[0];
  r.d1[1] = a.d1[1] * b.value + a.value * b.d1[1];
  r.d2[0] = a.d2[0] * b.value + 2 * a.d1[0] * b.d1[0] + a.value * b.d2[0];
  r.d2[1] = a.d2[1] * b.value + a.d1[0] * b.d1[1] + a.d1[1] * b.d1[0] + a.value * b.d2[1];
  r.d2[2] = a.d2[2] * b.value + 2 * a.d1[1] * b.d1[1] + a.value * b.d2[2];
  return r;
}

// Chain rule with f = tanh, f' = 1 - f^2, f'' = -2 f f'.
Jet2 tanh(const Jet2& a) {
  const double f = std::tanh(a.value);
  const double f1 = 1 - f * f;
  const double f2 = -2 * f * f1;
  Jet2 r;
  r.value = f;
  r.d1[0] = f1 * a.d1[0];
  r.d1[1] = f1 * a.d1[1];
  r.d2[0] = f1 * a.d2[0] + f2 * a.d1[0] * a.d1[0];
  r.d2[1] = f1 * a.d2[1] + f2 * a.d1[0] * a.d1[1];
  r.d2[2] = f1 * a.d2[2] + f2 * a.d1[1] * a.d1[1];
  return r;
}

std::vector<Jet2> forward_jet(const Mlp& net, Coord2 x, std::span<const double> xi) {
  if (static_cast<int>(2 + xi.size()) != net.input_dim())
    throw ValidationError("input width does not match network input");
  std::vector<Jet2> act(net.input_dim());
  act[0].value = x.x1;
  act[0].d1[0] = 1.0;
  act[1].value = x.x2;
  act[1].d1[1] = 1.0;
  for (std::size_t k = 0; k < xi.size(); ++k) act[2 + k].value = xi[k];

  for (int l = 0; l < net.layer_count(); ++l) {
    const auto w = net.weight(l);
    const auto b = net.bias(l);
    std::vector<Jet2> next(w.rows());
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      Jet2 acc;
      acc.value = b(i);
      for (Eigen::Index j = 0; j < w.cols(); ++j) acc = acc + w(i, j) * act[j];
      next[i] = l + 1 < net.layer_count() ? tanh(acc) : acc;
    }
    act = std::move(next);
  }
  return act;
}

std::vector<double> forward(const Mlp& net, std::span<const double> input) {
  if (static_cast<int>(input.size()) != net.input_dim())
    throw ValidationError("input width does not match network input");
  std::vector<double> act(input.begin(), input.end());
  for (int l = 0; l < net.layer_count(); ++l) {
    const auto w = net.weight(l);
    const auto b = net.bias(l);
    std::vector<double> next(w.rows());
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      double acc = b(i);
      for (Eigen::Index j = 0; j < w.cols(); ++j) acc += w(i, j) * act[j];
      next[i] = l + 1 < net.layer_count() ? std::tanh(acc) : acc;
    }
    act = std::move(next);
  }
  return act;
}

}  // namespace pigan::nn::reference
