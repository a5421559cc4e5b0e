#include "pigan/nn/critic.hpp"

#include <cmath>
#include <stdexcept>

#include "pigan/nn/tape.hpp"

namespace pigan::nn {

namespace {
void require_scalar(const Mlp& critic) {
  if (critic.output_dim() != 1)
    throw std::logic_error("input gradients need a scalar-output critic");
}
}  // namespace

Eigen::RowVectorXd critic_values(const Mlp& critic, const Eigen::MatrixXd& v) {
  require_scalar(critic);
  const JetTape tape(critic, v, JetLayout::value_only());
  return tape.output().row(0);
}

Eigen::MatrixXd input_gradient(const Mlp& critic, const Eigen::MatrixXd& v) {
  require_scalar(critic);
  const JetTape tape(critic, v, JetLayout::value_only());
  Eigen::MatrixXd grad;
  tape.backward(Eigen::MatrixXd::Ones(1, v.cols()), {}, &grad);
  return grad;
}

// c . grad_v D(v) is the directional derivative of D along c, i.e. the tangent
// channel of a first-order jet seeded with c. Reversing that jet pass gives
// its sensitivities to phi and to v.
void input_gradient_vjp(const Mlp& critic, const Eigen::MatrixXd& v,
                        const Eigen::MatrixXd& cotangent,
                        std::span<double> param_grad,
                        Eigen::MatrixXd* input_grad) {
  require_scalar(critic);
  const JetTape tape(critic, JetTape::directional_input(v, cotangent), JetLayout::first(1));
  Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(1, 2 * v.cols());
  for (Eigen::Index b = 0; b < v.cols(); ++b) adj(0, 2 * b + 1) = 1.0;
  Eigen::MatrixXd in_adj;
  tape.backward(adj, param_grad, input_grad ? &in_adj : nullptr);
  if (input_grad) {
    input_grad->resize(v.rows(), v.cols());
    for (Eigen::Index b = 0; b < v.cols(); ++b) input_grad->col(b) = in_adj.col(2 * b);
  }
}

PenaltyResult gradient_penalty(const Mlp& critic, const Eigen::MatrixXd& v,
                               double weight, std::span<double> param_grad,
                               Eigen::MatrixXd* input_grad) {
  const Eigen::MatrixXd g = input_gradient(critic, v);
  PenaltyResult res;
  res.grad_norms.resize(v.cols());
  Eigen::MatrixXd cot(v.rows(), v.cols());
  double sum = 0.0;
  for (Eigen::Index b = 0; b < v.cols(); ++b) {
    const double norm = std::sqrt(g.col(b).squaredNorm() + kPenaltyNormEpsilon);
    res.grad_norms(b) = norm;
    sum += (norm - 1.0) * (norm - 1.0);
    cot.col(b) = weight * 2.0 * (norm - 1.0) / norm * g.col(b);
  }
  res.value = weight * sum;
  if (!param_grad.empty() || input_grad) input_gradient_vjp(critic, v, cot, param_grad, input_grad);
  return res;
}

}  // namespace pigan::nn
