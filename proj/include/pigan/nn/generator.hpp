#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <span>

#include "pigan/common.hpp"
#include "pigan/nn/jet.hpp"
#include "pigan/nn/mlp.hpp"
#include "pigan/nn/tape.hpp"

namespace pigan::nn {

/// Result of evaluating a generator on a batch of (x, xi) pairs.
class GeneratorPass {
 public:
  virtual ~GeneratorPass() = default;
  /// output_dim x (batch * channels), JetTape column convention.
  virtual const Eigen::MatrixXd& outputs() const = 0;
  virtual JetLayout layout() const = 0;
  /// Accumulates d(loss)/d(parameters) given d(loss)/d(outputs()).
  virtual void backward(const Eigen::MatrixXd& adjoint, std::span<double> grad) const = 0;

  Jet2 jet(std::size_t sample, int k) const;
};

/// A random-field generator (x, xi) -> R^k that can report spatial jets.
class Generator {
 public:
  virtual ~Generator() = default;
  virtual int output_dim() const = 0;
  virtual int noise_dim() const = 0;
  virtual std::size_t parameter_count() const = 0;
  /// `noise` is (noise_dim x batch); column b pairs with x[b].
  virtual std::unique_ptr<GeneratorPass> evaluate(std::span<const Coord2> x,
                                                  const Eigen::MatrixXd& noise,
                                                  JetLayout layout) const = 0;
};

/// Neural generator with input (x1, x2, xi_1..xi_m).
class MlpGenerator final : public Generator {
 public:
  explicit MlpGenerator(const Mlp& net);

  int output_dim() const override { return net_->output_dim(); }
  int noise_dim() const override { return net_->input_dim() - 2; }
  std::size_t parameter_count() const override { return net_->parameter_count(); }
  std::unique_ptr<GeneratorPass> evaluate(std::span<const Coord2> x,
                                          const Eigen::MatrixXd& noise,
                                          JetLayout layout) const override;

 private:
  const Mlp* net_;
};

/// Closed-form field without trainable parameters (manufactured and exact
/// solutions, hard-wired test generators).
class AnalyticGenerator final : public Generator {
 public:
  using Function = std::function<void(Coord2, std::span<const double> xi, std::span<Jet2> out)>;

  AnalyticGenerator(int output_dim, int noise_dim, Function f);

  int output_dim() const override { return output_dim_; }
  int noise_dim() const override { return noise_dim_; }
  std::size_t parameter_count() const override { return 0; }
  std::unique_ptr<GeneratorPass> evaluate(std::span<const Coord2> x,
                                          const Eigen::MatrixXd& noise,
                                          JetLayout layout) const override;

 private:
  int output_dim_;
  int noise_dim_;
  Function f_;
};

}  // namespace pigan::nn
