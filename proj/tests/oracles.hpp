#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the batched kernels being tested.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include "pigan/common.hpp"
#include "pigan/nn/generator.hpp"
#include "pigan/nn/jet.hpp"

namespace oracle {

using pigan::Coord2;
using pigan::nn::Jet2;

/// Central-difference gradient of f over `params`, restoring every entry.
inline std::vector<double> fd_gradient(const std::function<double()>& f, std::span<double> params,
                                       double h = 1e-6) {
  std::vector<double> g(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double keep = params[k];
    params[k] = keep + h;
    const double fp = f();
    params[k] = keep - h;
    const double fm = f();
    params[k] = keep;
    g[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// max_k |a_k - b_k| / max(max_k |b_k|, floor): a scale-aware relative error.
inline double rel_error(std::span<const double> a, std::span<const double> b, double floor = 1e-8) {
  double num = 0.0, den = floor;
  for (std::size_t k = 0; k < a.size(); ++k) {
    num = std::max(num, std::abs(a[k] - b[k]));
    den = std::max(den, std::abs(b[k]));
  }
  return num / den;
}

inline double rel_error(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max(std::abs(b), floor);
}

/// Eigenvalues of the two-point Nystrom operator with unit weights 1/2 and
/// kernel exp(-d^2 / (2 l^2)): (1 +- exp(-d^2 / (2 l^2))) / 2.
inline std::pair<double, double> two_point_kl(double d, double l) {
  const double k = std::exp(-d * d / (2.0 * l * l));
  return {(1.0 + k) / 2.0, (1.0 - k) / 2.0};
}

/// Eigenvalues of a symmetric n x n row-major matrix by cyclic Jacobi
/// rotations, sorted descending.
inline std::vector<double> jacobi_eigenvalues(std::vector<double> a, int n) {
  auto at = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i) * n + j]; };
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
    if (off < 1e-30) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (at(p, q) == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * at(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = at(i, i);
  std::sort(ev.rbegin(), ev.rend());
  return ev;
}

/// Captured-variance ratio of the leading `terms` KL modes of the
/// squared-exponential kernel on an n x n node grid of the unit square. The
/// kernel factorizes over the axes, so the 2-D spectrum is every product of
/// two 1-D eigenvalues.
inline double separable_kl_ratio(int n, double l, int terms) {
  std::vector<double> k1(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double d = static_cast<double>(i - j) / (n - 1);
      k1[static_cast<std::size_t>(i) * n + j] = std::exp(-d * d / (2.0 * l * l)) / n;
    }
  const auto ev = jacobi_eigenvalues(k1, n);
  std::vector<double> prod;
  double trace = 0.0;
  for (double a : ev) {
    trace += a;
    for (double b : ev) prod.push_back(a * b);
  }
  std::sort(prod.rbegin(), prod.rend());
  double top = 0.0;
  for (int k = 0; k < terms; ++k) top += prod[static_cast<std::size_t>(k)];
  return top / (trace * trace);
}

/// E = alpha + beta exp(Z), Z ~ N(0, s2).
inline double lognormal_mean(double alpha, double beta, double s2) {
  return alpha + beta * std::exp(s2 / 2.0);
}
inline double lognormal_std(double beta, double s2) {
  return beta * std::sqrt((std::exp(s2) - 1.0) * std::exp(s2));
}
inline double lognormal_density(double e, double alpha, double beta, double s2) {
  if (e <= alpha) return 0.0;
  const double z = std::log((e - alpha) / beta);
  return std::exp(-z * z / (2.0 * s2)) / ((e - alpha) * std::sqrt(2.0 * std::numbers::pi * s2));
}
/// Corr[exp(g(x)), exp(g(x'))] for unit-variance g with covariance k.
inline double unit_lognormal_correlation(double k) {
  return (std::exp(k) - 1.0) / (std::exp(1.0) - 1.0);
}

/// Homogeneous plane-stress solution under a uniaxial right-edge traction t.
struct UniformSolution {
  double E = 1.1;
  double nu = 0.3;
  double t = 1.5;
  double u1(Coord2 p) const { return t / E * p.x1; }
  double u2(Coord2 p) const { return -nu * t / E * p.x2; }
};

/// Generators hard-wired to the homogeneous solution (u) and a constant
/// modulus (E).
inline pigan::nn::AnalyticGenerator uniform_u(const UniformSolution& s, int noise_dim = 1) {
  return pigan::nn::AnalyticGenerator(2, noise_dim, [s](Coord2 p, std::span<const double>, std::span<Jet2> out) {
    out[0] = Jet2{s.u1(p), {s.t / s.E, 0.0}, {0.0, 0.0, 0.0}};
    out[1] = Jet2{s.u2(p), {0.0, -s.nu * s.t / s.E}, {0.0, 0.0, 0.0}};
  });
}
inline pigan::nn::AnalyticGenerator constant_E(double e, int noise_dim = 1) {
  return pigan::nn::AnalyticGenerator(1, noise_dim, [e](Coord2, std::span<const double>, std::span<Jet2> out) {
    out[0] = Jet2{e, {0.0, 0.0}, {0.0, 0.0, 0.0}};
  });
}

/// Manufactured fields E = 1 + x1, u1 = x1^2, u2 = 0 and their residual
/// r1 = 4 x1 + 2, r2 = 0 (derived by hand from the plane-stress operator).
inline pigan::nn::AnalyticGenerator manufactured_u(int noise_dim = 1) {
  return pigan::nn::AnalyticGenerator(2, noise_dim, [](Coord2 p, std::span<const double>, std::span<Jet2> out) {
    out[0] = Jet2{p.x1 * p.x1, {2.0 * p.x1, 0.0}, {2.0, 0.0, 0.0}};
    out[1] = Jet2{};
  });
}
inline pigan::nn::AnalyticGenerator manufactured_E(int noise_dim = 1) {
  return pigan::nn::AnalyticGenerator(1, noise_dim, [](Coord2 p, std::span<const double>, std::span<Jet2> out) {
    out[0] = Jet2{1.0 + p.x1, {1.0, 0.0}, {0.0, 0.0, 0.0}};
  });
}
inline double manufactured_r1(double x1) { return 4.0 * x1 + 2.0; }

/// Scalar tanh MLP evaluated with plain loops: W (out x in, column-major)
/// then b per layer, as stored by pigan::nn::Mlp.
inline std::vector<double> mlp_forward(const std::vector<int>& widths, std::span<const double> params,
                                       std::vector<double> x) {
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int in = widths[l], out = widths[l + 1];
    std::vector<double> y(static_cast<std::size_t>(out), 0.0);
    for (int o = 0; o < out; ++o) {
      double s = params[off + static_cast<std::size_t>(in) * out + o];
      for (int i = 0; i < in; ++i) s += params[off + static_cast<std::size_t>(i) * out + o] * x[i];
      y[o] = (l + 2 < widths.size()) ? std::tanh(s) : s;
    }
    off += static_cast<std::size_t>(in) * out + out;
    x = std::move(y);
  }
  return x;
}

}  // namespace oracle
