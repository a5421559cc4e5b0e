#include "pigan/nn/mlp.hpp"

#include <cmath>
#include <random>

#include "pigan/binary_io.hpp"
#include "pigan/nn/tape.hpp"

namespace pigan::nn {

Mlp::Mlp(std::vector<int> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 2) throw ValidationError("network needs at least input and output widths");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    if (widths_[l] < 1 || widths_[l + 1] < 1) throw ValidationError("layer widths must be positive");
    offsets_.push_back(total);
    total += static_cast<std::size_t>(widths_[l]) * widths_[l + 1] + widths_[l + 1];
  }
  params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(total));
}

Eigen::Map<const Eigen::MatrixXd> Mlp::weight(int layer) const {
  return {params_.data() + offsets_[layer], widths_[layer + 1], widths_[layer]};
}
Eigen::Map<Eigen::MatrixXd> Mlp::weight(int layer) {
  return {params_.data() + offsets_[layer], widths_[layer + 1], widths_[layer]};
}
Eigen::Map<const Eigen::VectorXd> Mlp::bias(int layer) const {
  return {params_.data() + bias_offset(layer), widths_[layer + 1]};
}
Eigen::Map<Eigen::VectorXd> Mlp::bias(int layer) {
  return {params_.data() + bias_offset(layer), widths_[layer + 1]};
}

Mlp init_network(const std::vector<int>& widths, std::uint64_t seed) {
  Mlp net(widths);
  Rng rng(derive_seed(seed, 0x1417));
  for (int l = 0; l < net.layer_count(); ++l) {
    const double limit = std::sqrt(6.0 / (widths[l] + widths[l + 1]));
    std::uniform_real_distribution<double> dist(-limit, limit);
    auto w = net.weight(l);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
  }
  return net;
}

Eigen::VectorXd forward(const Mlp& net, std::span<const double> input) {
  if (static_cast<int>(input.size()) != net.input_dim())
    throw ValidationError("input width " + std::to_string(input.size()) +
                          " does not match network input " + std::to_string(net.input_dim()));
  Eigen::MatrixXd x = Eigen::Map<const Eigen::VectorXd>(input.data(), net.input_dim());
  const JetTape tape(net, std::move(x), JetLayout::value_only());
  return tape.output().col(0);
}

void write_network(std::ostream& os, const Mlp& net) {
  io::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(net.widths().size()));
  for (int w : net.widths()) io::write_pod<std::int32_t>(os, w);
  io::write_doubles(os, net.parameters().data(), net.parameter_count());
}

Mlp read_network(std::istream& is) {
  const auto n = io::read_pod<std::uint32_t>(is);
  if (n < 2 || n > 64) throw IoError("corrupt network layer count");
  std::vector<int> widths(n);
  for (auto& w : widths) {
    w = io::read_pod<std::int32_t>(is);
    if (w < 1 || w > 1'000'000) throw IoError("corrupt network width");
  }
  Mlp net(widths);
  io::read_doubles(is, net.parameters().data(), net.parameter_count());
  return net;
}

}  // namespace pigan::nn
