#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "pigan/common.hpp"

namespace pigan::field {

/// Squared-exponential covariance k(x, x') = variance * exp(-|x-x'|^2 / (2 l^2)).
struct KernelSpec {
  double correlation_length = 1.0;
  double variance = 1.0;

  void validate() const;
};

double kernel_eval(Coord2 x, Coord2 x_prime, const KernelSpec& spec);

/// Boundary-inclusive uniform grid on [x_lo, x_hi] x [y_lo, y_hi].
/// Point (i, j) has flat index j * nx + i. An axis with a single node sits
/// at its lower bound.
struct UniformGrid {
  int nx = 25;
  int ny = 25;
  double x_lo = 0.0, x_hi = 1.0;
  double y_lo = 0.0, y_hi = 1.0;

  void validate() const;
  std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * nx + i;
  }
  double x_at(int i) const;
  double y_at(int j) const;
  Coord2 point(int i, int j) const { return {x_at(i), y_at(j)}; }
  std::vector<Coord2> points() const;

  /// Bilinear interpolation weights for an arbitrary point (clamped to the
  /// grid's bounding box): four (flat index, weight) pairs.
  struct Stencil {
    std::size_t index[4];
    double weight[4];
  };
  Stencil stencil(Coord2 p) const;

  /// Exact-node lookup; returns false if `p` is not a grid node.
  bool find_node(Coord2 p, std::size_t& flat, double tol = 1e-9) const;

  friend bool operator==(const UniformGrid&, const UniformGrid&) = default;
};

/// Truncated Karhunen-Loeve model of g ~ GP(0, k) together with the lognormal
/// transform E = alpha + beta * exp(g).
class RandomFieldModel {
 public:
  RandomFieldModel() = default;
  RandomFieldModel(UniformGrid grid, KernelSpec kernel, double alpha,
                   double beta, Eigen::VectorXd eigenvalues,
                   Eigen::MatrixXd eigenfunctions, double trace);

  const UniformGrid& grid() const { return grid_; }
  const KernelSpec& kernel() const { return kernel_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  int n_terms() const { return static_cast<int>(eigenvalues_.size()); }

  /// Descending, non-negative.
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  /// n_points x n_terms; column k holds phi_k at the grid nodes.
  const Eigen::MatrixXd& eigenfunctions() const { return eigenfunctions_; }
  /// Quadrature weight of each grid node (uniform).
  double quadrature_weight() const { return 1.0 / static_cast<double>(grid_.size()); }
  /// Trace of the weighted covariance operator (all eigenvalues).
  double trace() const { return trace_; }
  /// (sum of retained eigenvalues) / trace.
  double captured_variance_ratio() const;

  /// phi_k(x) for every retained term, bilinearly interpolated off-grid.
  Eigen::VectorXd eigenfunctions_at(Coord2 x) const;
  /// sum_k lambda_k phi_k(x) phi_k(x').
  double latent_covariance(Coord2 x, Coord2 x_prime) const;
  double latent_variance(Coord2 x) const { return latent_covariance(x, x); }

  /// Analytic lognormal moments of E(x) under the truncated model.
  double modulus_mean(Coord2 x) const;
  double modulus_std(Coord2 x) const;

  void save(std::ostream& os) const;
  static RandomFieldModel load(std::istream& is);

 private:
  UniformGrid grid_;
  KernelSpec kernel_;
  double alpha_ = 1.0;
  double beta_ = 0.1;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenfunctions_;
  double trace_ = 0.0;
};

/// Nystrom discretization of the covariance operator on `grid` with uniform
/// quadrature weights; keeps the `n_terms` dominant eigenpairs.
RandomFieldModel build_kl_model(const UniformGrid& grid, const KernelSpec& spec,
                                int n_terms, double alpha, double beta);

/// One realization E(x, omega). Holds the latent field on the KL grid, so it
/// is a self-contained value that can be evaluated concurrently.
class FieldSample {
 public:
  FieldSample(const RandomFieldModel& model, std::vector<double> coefficients);

  const std::vector<double>& kl_coefficients() const { return coefficients_; }
  /// g(x).
  double latent(Coord2 x) const;
  /// E(x) = alpha + beta * exp(g(x)).
  double operator()(Coord2 x) const;

 private:
  UniformGrid grid_;
  double alpha_;
  double beta_;
  std::vector<double> coefficients_;
  std::vector<double> latent_nodes_;
};

/// Draws n_terms i.i.d. standard normals from `rng`.
FieldSample sample_field(const RandomFieldModel& model, Rng& rng);

}  // namespace pigan::field
