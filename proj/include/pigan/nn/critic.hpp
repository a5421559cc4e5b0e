#pragma once

#include <Eigen/Dense>
#include <span>

#include "pigan/nn/mlp.hpp"

namespace pigan::nn {

/// Regularizer inside the gradient-penalty norm, sqrt(|g|^2 + eps), which
/// keeps the penalty differentiable where the input gradient vanishes.
inline constexpr double kPenaltyNormEpsilon = 1e-12;

/// D(v) for every column of `v`. Throws std::logic_error unless the critic
/// has a scalar output.
Eigen::RowVectorXd critic_values(const Mlp& critic, const Eigen::MatrixXd& v);

/// grad_v D(v) for every column of `v`.
Eigen::MatrixXd input_gradient(const Mlp& critic, const Eigen::MatrixXd& v);

/// Differentiates s = sum_b c_b . grad_v D(v_b) with the cotangents c held
/// fixed: accumulates ds/dphi into `param_grad` (if non-empty) and writes
/// ds/dv into `input_grad` (if non-null). Any scalar built from the input
/// gradient reduces to this form by the chain rule.
void input_gradient_vjp(const Mlp& critic, const Eigen::MatrixXd& v,
                        const Eigen::MatrixXd& cotangent,
                        std::span<double> param_grad,
                        Eigen::MatrixXd* input_grad);

struct PenaltyResult {
  /// weight * sum_b (|grad_v D(v_b)| - 1)^2
  double value = 0.0;
  Eigen::VectorXd grad_norms;
};

/// Gradient penalty with its parameter and input gradients (both scaled by
/// `weight` and accumulated / written like input_gradient_vjp).
PenaltyResult gradient_penalty(const Mlp& critic, const Eigen::MatrixXd& v,
                               double weight, std::span<double> param_grad,
                               Eigen::MatrixXd* input_grad);

}  // namespace pigan::nn
