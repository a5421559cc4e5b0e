#include "pigan/nn/generator.hpp"

#include <stdexcept>

namespace pigan::nn {

Jet2 GeneratorPass::jet(std::size_t sample, int k) const {
  const auto l = layout();
  const auto& out = outputs();
  const Eigen::Index c = static_cast<Eigen::Index>(sample) * l.channels();
  Jet2 j;
  j.value = out(k, c);
  for (int d = 0; d < l.directions; ++d) j.d1[d] = out(k, c + 1 + d);
  if (l.second && l.directions == 2)
    for (int h = 0; h < 3; ++h) j.d2[h] = out(k, c + 3 + h);
  return j;
}

namespace {

class MlpPass final : public GeneratorPass {
 public:
  MlpPass(const Mlp& net, Eigen::MatrixXd input, JetLayout layout)
      : tape_(net, std::move(input), layout) {}
  const Eigen::MatrixXd& outputs() const override { return tape_.output(); }
  JetLayout layout() const override { return tape_.layout(); }
  void backward(const Eigen::MatrixXd& adjoint, std::span<double> grad) const override {
    tape_.backward(adjoint, grad);
  }

 private:
  JetTape tape_;
};

class AnalyticPass final : public GeneratorPass {
 public:
  AnalyticPass(Eigen::MatrixXd out, JetLayout layout) : out_(std::move(out)), layout_(layout) {}
  const Eigen::MatrixXd& outputs() const override { return out_; }
  JetLayout layout() const override { return layout_; }
  void backward(const Eigen::MatrixXd& adjoint, std::span<double> grad) const override {
    if (adjoint.rows() != out_.rows() || adjoint.cols() != out_.cols())
      throw std::logic_error("adjoint shape does not match generator pass");
    if (!grad.empty()) throw std::logic_error("analytic generators have no parameters");
  }

 private:
  Eigen::MatrixXd out_;
  JetLayout layout_;
};

void check_noise(const Generator& g, std::span<const Coord2> x, const Eigen::MatrixXd& noise) {
  if (noise.rows() != g.noise_dim())
    throw ValidationError("noise dimension " + std::to_string(noise.rows()) +
                          " does not match generator noise dimension " +
                          std::to_string(g.noise_dim()));
  if (noise.cols() != static_cast<Eigen::Index>(x.size()))
    throw std::logic_error("noise batch does not match coordinate batch");
}

}  // namespace

MlpGenerator::MlpGenerator(const Mlp& net) : net_(&net) {
  if (net.input_dim() < 2) throw ValidationError("generator input must include two spatial slots");
}

std::unique_ptr<GeneratorPass> MlpGenerator::evaluate(std::span<const Coord2> x,
                                                      const Eigen::MatrixXd& noise,
                                                      JetLayout layout) const {
  check_noise(*this, x, noise);
  return std::make_unique<MlpPass>(*net_, JetTape::spatial_input(x, noise, layout), layout);
}

AnalyticGenerator::AnalyticGenerator(int output_dim, int noise_dim, Function f)
    : output_dim_(output_dim), noise_dim_(noise_dim), f_(std::move(f)) {}

std::unique_ptr<GeneratorPass> AnalyticGenerator::evaluate(std::span<const Coord2> x,
                                                           const Eigen::MatrixXd& noise,
                                                           JetLayout layout) const {
  check_noise(*this, x, noise);
  if (layout.directions != 0 && layout.directions != 2)
    throw std::logic_error("analytic generators provide spatial jets only");
  const int nc = layout.channels();
  Eigen::MatrixXd out(output_dim_, static_cast<Eigen::Index>(x.size()) * nc);
  std::vector<Jet2> jets(output_dim_);
  for (std::size_t b = 0; b < x.size(); ++b) {
    const Eigen::VectorXd xi = noise.col(static_cast<Eigen::Index>(b));
    f_(x[b], std::span<const double>(xi.data(), xi.size()), jets);
    const Eigen::Index c = static_cast<Eigen::Index>(b) * nc;
    for (int k = 0; k < output_dim_; ++k) {
      out(k, c) = jets[k].value;
      for (int d = 0; d < layout.directions; ++d) out(k, c + 1 + d) = jets[k].d1[d];
      if (layout.second)
        for (int h = 0; h < 3; ++h) out(k, c + 3 + h) = jets[k].d2[h];
    }
  }
  return std::make_unique<AnalyticPass>(std::move(out), layout);
}

}  // namespace pigan::nn
