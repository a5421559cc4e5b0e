#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace pigan::nn {

/// Feed-forward network: tanh on hidden layers, identity on the output.
///
/// Parameters live in one contiguous vector, layer by layer: the weight
/// matrix (fan_out x fan_in, column-major) followed by the bias. Gradients use
/// the same layout.
class Mlp {
 public:
  Mlp() = default;
  /// Zero-initialized network with the given widths (input, hidden..., output).
  explicit Mlp(std::vector<int> widths);

  const std::vector<int>& widths() const { return widths_; }
  int layer_count() const { return static_cast<int>(widths_.size()) - 1; }
  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }
  std::size_t parameter_count() const { return static_cast<std::size_t>(params_.size()); }

  std::span<double> parameters() { return {params_.data(), parameter_count()}; }
  std::span<const double> parameters() const { return {params_.data(), parameter_count()}; }

  Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
  Eigen::Map<Eigen::MatrixXd> weight(int layer);
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;
  Eigen::Map<Eigen::VectorXd> bias(int layer);
  std::size_t weight_offset(int layer) const { return offsets_[layer]; }
  std::size_t bias_offset(int layer) const {
    return offsets_[layer] + static_cast<std::size_t>(widths_[layer]) * widths_[layer + 1];
  }

  friend bool operator==(const Mlp& a, const Mlp& b) {
    return a.widths_ == b.widths_ && a.params_ == b.params_;
  }

 private:
  std::vector<int> widths_;
  std::vector<std::size_t> offsets_;
  Eigen::VectorXd params_;
};

/// Glorot-uniform weights, zero biases. Deterministic per seed.
Mlp init_network(const std::vector<int>& widths, std::uint64_t seed);

/// Plain evaluation of one input vector.
Eigen::VectorXd forward(const Mlp& net, std::span<const double> input);

/// widths, then raw f64 parameters.
void write_network(std::ostream& os, const Mlp& net);
Mlp read_network(std::istream& is);

}  // namespace pigan::nn
