#include "pigan/nn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace pigan::nn {

namespace {

typedef double Vec4 __attribute__((vector_size(32), aligned(8)));
constexpr int kRowBlock = 8;

inline Vec4 load4(const double* p) { return *reinterpret_cast<const Vec4*>(p); }

// NC columns of z = W a over one block of kRowBlock rows of the packed W.
template <int NC>
inline void product_block(const double* wp, Eigen::Index mp, Eigen::Index k_dim, const double* a,
                          double* z, Eigen::Index ldz, Eigen::Index rows) {
  Vec4 acc[NC][2] = {};
  for (Eigen::Index k = 0; k < k_dim; ++k) {
    const Vec4 w0 = load4(wp + k * mp), w1 = load4(wp + k * mp + 4);
    for (int c = 0; c < NC; ++c) {
      const double x = a[c * k_dim + k];
      acc[c][0] += w0 * x;
      acc[c][1] += w1 * x;
    }
  }
  for (int c = 0; c < NC; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) z[c * ldz + r] = acc[c][r / 4][r % 4];
}

/// z = W a with every entry accumulated in input order by the same
/// arithmetic, so a column's result never depends on how many columns are
/// computed together (a BLAS-style product does not guarantee this).
void column_product(const Eigen::Map<const Eigen::MatrixXd>& w, const Eigen::MatrixXd& a,
                    Eigen::MatrixXd& z) {
  const Eigen::Index m = w.rows(), k_dim = w.cols(), n = a.cols();
  const Eigen::Index mp = (m + kRowBlock - 1) / kRowBlock * kRowBlock;
  thread_local std::vector<double> packed;
  packed.assign(static_cast<std::size_t>(mp * k_dim), 0.0);
  for (Eigen::Index k = 0; k < k_dim; ++k)
    for (Eigen::Index i = 0; i < m; ++i) packed[static_cast<std::size_t>(k * mp + i)] = w(i, k);
  z.resize(m, n);
  for (Eigen::Index b = 0; b < m; b += kRowBlock) {
    const double* wp = packed.data() + b;
    const Eigen::Index rows = std::min<Eigen::Index>(kRowBlock, m - b);
    Eigen::Index j = 0;
    for (; j + 4 <= n; j += 4)
      product_block<4>(wp, mp, k_dim, a.data() + j * k_dim, z.data() + j * m + b, m, rows);
    for (; j < n; ++j) product_block<1>(wp, mp, k_dim, a.data() + j * k_dim, z.data() + j * m + b, m, rows);
  }
}

/// tanh through the vectorized exponential: (1 - e) / (1 + e), e = exp(-2|z|).
/// Evaluated in fixed packets so no element falls to a scalar tail.
void tanh_block(const double* z, double* a, Eigen::Index n) {
  using Packet = Eigen::Array<double, 8, 1>;
  for (Eigen::Index i = 0; i < n; i += 8) {
    const Eigen::Index len = std::min<Eigen::Index>(8, n - i);
    Packet zi = Packet::Zero();
    zi.head(len) = Eigen::Map<const Eigen::ArrayXd>(z + i, len);
    Packet e = (-2.0 * zi.abs()).exp();
    e = (1.0 - e) / (1.0 + e);
    e = (zi < 0.0).select(-e, e);
    Eigen::Map<Eigen::ArrayXd>(a + i, len) = e.head(len);
  }
}

// a = tanh(z) propagated through the jet channels of every sample.
//   a'   = s z'            with s  = 1 - t^2
//   a_ij = s z_ij + s' z_i z_j,  s' = -2 t s
void tanh_jet_forward(const Eigen::MatrixXd& z, Eigen::MatrixXd& a,
                      JetLayout layout, std::size_t batch) {
  const Eigen::Index n = z.rows();
  const int nc = layout.channels();
  const int nd = layout.directions;
  a.resize(z.rows(), z.cols());
  if (nc == 1) {
    tanh_block(z.data(), a.data(), z.size());
    return;
  }
  for (std::size_t b = 0; b < batch; ++b) {
    const double* zc = z.data() + static_cast<Eigen::Index>(b) * nc * n;
    double* ac = a.data() + static_cast<Eigen::Index>(b) * nc * n;
    tanh_block(zc, ac, n);
    for (int d = 1; d <= nd; ++d)
      for (Eigen::Index r = 0; r < n; ++r)
        ac[d * n + r] = (1.0 - ac[r] * ac[r]) * zc[d * n + r];
    if (!layout.second) continue;
    if (nd == 2) {
      for (Eigen::Index r = 0; r < n; ++r) {
        const double t = ac[r];
        const double s = 1.0 - t * t;
        const double sp = -2.0 * t * s;
        const double z1 = zc[n + r], z2 = zc[2 * n + r];
        ac[3 * n + r] = s * zc[3 * n + r] + sp * z1 * z1;
        ac[4 * n + r] = s * zc[4 * n + r] + sp * z1 * z2;
        ac[5 * n + r] = s * zc[5 * n + r] + sp * z2 * z2;
      }
    } else if (nd == 1) {
      for (Eigen::Index r = 0; r < n; ++r) {
        const double t = ac[r];
        const double s = 1.0 - t * t;
        const double z1 = zc[n + r];
        ac[2 * n + r] = s * zc[2 * n + r] - 2.0 * t * s * z1 * z1;
      }
    }
  }
}

// Adjoint of tanh_jet_forward: given g = dL/da, returns dL/dz in place of g.
void tanh_jet_backward(const Eigen::MatrixXd& z, const Eigen::MatrixXd& a,
                       Eigen::MatrixXd& g, JetLayout layout, std::size_t batch) {
  const Eigen::Index n = z.rows();
  const int nc = layout.channels();
  const int nd = layout.directions;
  for (std::size_t b = 0; b < batch; ++b) {
    const Eigen::Index off = static_cast<Eigen::Index>(b) * nc * n;
    const double* zc = z.data() + off;
    const double* ac = a.data() + off;
    double* gc = g.data() + off;
    if (layout.second && nd == 2) {
      for (Eigen::Index r = 0; r < n; ++r) {
        const double t = ac[r];
        const double s = 1.0 - t * t;
        const double sp = -2.0 * t * s;
        const double z1 = zc[n + r], z2 = zc[2 * n + r];
        const double g1 = gc[n + r], g2 = gc[2 * n + r];
        const double h11 = gc[3 * n + r], h12 = gc[4 * n + r], h22 = gc[5 * n + r];
        const double gs = g1 * z1 + g2 * z2 + h11 * zc[3 * n + r] +
                          h12 * zc[4 * n + r] + h22 * zc[5 * n + r];
        const double gsp = h11 * z1 * z1 + h12 * z1 * z2 + h22 * z2 * z2;
        const double gt = gc[r] - 2.0 * t * gs + (6.0 * t * t - 2.0) * gsp;
        gc[r] = gt * s;
        gc[n + r] = s * g1 + sp * (2.0 * z1 * h11 + z2 * h12);
        gc[2 * n + r] = s * g2 + sp * (z1 * h12 + 2.0 * z2 * h22);
        gc[3 * n + r] = s * h11;
        gc[4 * n + r] = s * h12;
        gc[5 * n + r] = s * h22;
      }
    } else if (layout.second && nd == 1) {
      for (Eigen::Index r = 0; r < n; ++r) {
        const double t = ac[r];
        const double s = 1.0 - t * t;
        const double sp = -2.0 * t * s;
        const double z1 = zc[n + r];
        const double g1 = gc[n + r], h11 = gc[2 * n + r];
        const double gs = g1 * z1 + h11 * zc[2 * n + r];
        const double gsp = h11 * z1 * z1;
        const double gt = gc[r] - 2.0 * t * gs + (6.0 * t * t - 2.0) * gsp;
        gc[r] = gt * s;
        gc[n + r] = s * g1 + sp * 2.0 * z1 * h11;
        gc[2 * n + r] = s * h11;
      }
    } else {
      for (Eigen::Index r = 0; r < n; ++r) {
        const double t = ac[r];
        const double s = 1.0 - t * t;
        double gs = 0.0;
        for (int d = 1; d <= nd; ++d) {
          gs += gc[d * n + r] * zc[d * n + r];
          gc[d * n + r] *= s;
        }
        gc[r] = (gc[r] - 2.0 * t * gs) * s;
      }
    }
  }
}

}  // namespace

JetTape::JetTape(const Mlp& net, Eigen::MatrixXd input, JetLayout layout)
    : net_(&net), layout_(layout) {
  if (layout.directions < 0 || layout.directions > 2)
    throw std::logic_error("jet layouts support at most two tangent directions");
  const int nc = layout.channels();
  if (input.rows() != net.input_dim())
    throw ValidationError("input width " + std::to_string(input.rows()) +
                          " does not match network input " + std::to_string(net.input_dim()));
  if (input.cols() % nc != 0) throw std::logic_error("input columns are not a whole number of jets");
  batch_ = static_cast<std::size_t>(input.cols() / nc);

  const int n_layers = net.layer_count();
  acts_.resize(n_layers);
  pre_.resize(n_layers);
  acts_[0] = std::move(input);
  for (int l = 0; l < n_layers; ++l) {
    Eigen::MatrixXd& z = pre_[l];
    column_product(net.weight(l), acts_[l], z);
    const auto bias = net.bias(l);
    for (std::size_t b = 0; b < batch_; ++b) z.col(static_cast<Eigen::Index>(b) * nc) += bias;
    if (l + 1 < n_layers) tanh_jet_forward(z, acts_[l + 1], layout_, batch_);
  }
}

Eigen::MatrixXd JetTape::spatial_input(std::span<const Coord2> x,
                                       const Eigen::MatrixXd& noise,
                                       JetLayout layout) {
  if (noise.cols() != static_cast<Eigen::Index>(x.size()))
    throw std::logic_error("noise batch does not match coordinate batch");
  const int nc = layout.channels();
  const Eigen::Index m = noise.rows();
  Eigen::MatrixXd in = Eigen::MatrixXd::Zero(2 + m, static_cast<Eigen::Index>(x.size()) * nc);
  for (std::size_t b = 0; b < x.size(); ++b) {
    const Eigen::Index c = static_cast<Eigen::Index>(b) * nc;
    in(0, c) = x[b].x1;
    in(1, c) = x[b].x2;
    if (m > 0) in.col(c).tail(m) = noise.col(static_cast<Eigen::Index>(b));
    if (layout.directions >= 1) in(0, c + 1) = 1.0;
    if (layout.directions >= 2) in(1, c + 2) = 1.0;
  }
  return in;
}

Eigen::MatrixXd JetTape::directional_input(const Eigen::MatrixXd& values,
                                           const Eigen::MatrixXd& tangents) {
  if (values.rows() != tangents.rows() || values.cols() != tangents.cols())
    throw std::logic_error("tangent shape does not match values");
  Eigen::MatrixXd in(values.rows(), 2 * values.cols());
  for (Eigen::Index b = 0; b < values.cols(); ++b) {
    in.col(2 * b) = values.col(b);
    in.col(2 * b + 1) = tangents.col(b);
  }
  return in;
}

Jet2 JetTape::jet(std::size_t sample, int k) const {
  const int nc = layout_.channels();
  const auto& out = output();
  const Eigen::Index c = static_cast<Eigen::Index>(sample) * nc;
  Jet2 j;
  j.value = out(k, c);
  for (int d = 0; d < layout_.directions; ++d) j.d1[d] = out(k, c + 1 + d);
  if (layout_.second && layout_.directions == 2)
    for (int h = 0; h < 3; ++h) j.d2[h] = out(k, c + 3 + h);
  else if (layout_.second && layout_.directions == 1)
    j.d2[0] = out(k, c + 2);
  return j;
}

void JetTape::backward(const Eigen::MatrixXd& output_adjoint,
                       std::span<double> param_grad,
                       Eigen::MatrixXd* input_adjoint) const {
  const Mlp& net = *net_;
  if (output_adjoint.rows() != output().rows() || output_adjoint.cols() != output().cols())
    throw std::logic_error("adjoint does not belong to this tape (shape mismatch)");
  const bool want_params = !param_grad.empty();
  if (want_params && param_grad.size() != net.parameter_count())
    throw std::logic_error("gradient buffer size does not match the network");
  const int nc = layout_.channels();

  Eigen::MatrixXd g = output_adjoint;
  Eigen::MatrixXd ga;
  for (int l = net.layer_count() - 1; l >= 0; --l) {
    if (want_params) {
      Eigen::Map<Eigen::MatrixXd> gw(param_grad.data() + net.weight_offset(l),
                                     net.widths()[l + 1], net.widths()[l]);
      gw.noalias() += g * acts_[l].transpose();
      Eigen::Map<Eigen::VectorXd> gb(param_grad.data() + net.bias_offset(l), net.widths()[l + 1]);
      for (std::size_t b = 0; b < batch_; ++b) gb += g.col(static_cast<Eigen::Index>(b) * nc);
    }
    if (l == 0 && !input_adjoint) break;
    ga.noalias() = net.weight(l).transpose() * g;
    if (l == 0) {
      *input_adjoint = std::move(ga);
      break;
    }
    tanh_jet_backward(pre_[l - 1], acts_[l], ga, layout_, batch_);
    std::swap(g, ga);
  }
}

}  // namespace pigan::nn
