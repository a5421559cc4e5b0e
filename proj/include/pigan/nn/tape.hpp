#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "pigan/common.hpp"
#include "pigan/nn/jet.hpp"
#include "pigan/nn/mlp.hpp"

namespace pigan::nn {

/// Batched forward-over-reverse record of one network pass.
///
/// The forward sweep pushes truncated Taylor jets (value, tangents, and
/// optionally second derivatives) through every layer for a whole batch; the
/// recorded activations then allow a reverse sweep that maps adjoints of any
/// output channel, including second-derivative channels, back onto the
/// network parameters and the input channels.
///
/// Matrices are (width x batch*channels) with column b*C + c holding channel c
/// of sample b. The tape keeps a pointer to `net`, which must outlive it.
class JetTape {
 public:
  JetTape(const Mlp& net, Eigen::MatrixXd input, JetLayout layout);

  /// Inputs (x1, x2, xi...) with unit tangents on the two spatial slots.
  /// `noise` is (noise_dim x batch); it may have zero rows.
  static Eigen::MatrixXd spatial_input(std::span<const Coord2> x,
                                       const Eigen::MatrixXd& noise,
                                       JetLayout layout);
  /// Values with a single tangent direction per sample (layout first(1)).
  static Eigen::MatrixXd directional_input(const Eigen::MatrixXd& values,
                                           const Eigen::MatrixXd& tangents);

  const Mlp& network() const { return *net_; }
  JetLayout layout() const { return layout_; }
  std::size_t batch() const { return batch_; }
  const Eigen::MatrixXd& output() const { return pre_.back(); }

  /// Output component `k` of `sample` as a spatial jet; channels absent from
  /// the layout read as zero.
  Jet2 jet(std::size_t sample, int k) const;

  /// Reverse sweep. `output_adjoint` has the shape of output(). Parameter
  /// gradients are accumulated (+=) into `param_grad` unless it is empty;
  /// input-channel adjoints are written to `input_adjoint` when non-null.
  void backward(const Eigen::MatrixXd& output_adjoint,
                std::span<double> param_grad,
                Eigen::MatrixXd* input_adjoint = nullptr) const;

 private:
  const Mlp* net_;
  JetLayout layout_;
  std::size_t batch_;
  std::vector<Eigen::MatrixXd> acts_;
  std::vector<Eigen::MatrixXd> pre_;
};

}  // namespace pigan::nn
