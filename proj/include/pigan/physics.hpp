#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pigan/common.hpp"
#include "pigan/fem.hpp"
#include "pigan/nn/generator.hpp"
#include "pigan/nn/jet.hpp"

namespace pigan::physics {

using nn::Jet2;
using Vec2 = std::array<double, 2>;

struct ElasticityConstants {
  double nu = 0.3;
  void validate() const;
};

/// Plane-stress equilibrium residual, scaled by (1 - nu^2):
///   r1 = (1-nu)/2 [E,2 (u1,2 + u2,1) + E (u1,22 + u2,12)] + E,1 (u1,1 + nu u2,2) + E (u1,11 + nu u2,12)
///   r2 = (1-nu)/2 [E,1 (u1,2 + u2,1) + E (u1,12 + u2,11)] + E,2 (nu u1,1 + u2,2) + E (nu u1,12 + u2,22)
Vec2 pde_residual(const Jet2& u1, const Jet2& u2, const Jet2& E,
                  const ElasticityConstants& c);

/// Adjoints of a scalar loss w.r.t. the input jets.
struct JetAdjoint {
  Jet2 u1, u2, E;
};

/// d(g . r)/d(jets) for r = pde_residual(u1, u2, E).
JetAdjoint pde_residual_adjoint(const Jet2& u1, const Jet2& u2, const Jet2& E,
                                const ElasticityConstants& c, Vec2 g);

/// Boundary pieces of the unit-square problem.
enum class Boundary {
  left,    ///< x1 = 0, u1 = 0
  corner,  ///< (0, 0), u2 = 0
  right,   ///< x1 = 1, traction (normal [1, 0])
  top,     ///< x2 = 1, traction (normal [0, 1])
  bottom,  ///< x2 = 0, traction (normal [0, -1])
};

std::string_view boundary_name(Boundary b);
Boundary parse_boundary(std::string_view name);
bool on_boundary(Coord2 p, Boundary b, double tol = 1e-12);
int discrepancy_count(Boundary b);

/// Boundary discrepancies b~ = B[u; E] - b:
///   left: (u1); corner: (u2); right: (s11 - t1, s12 - t2);
///   top: (s22 - t2, s12 - t1); bottom: (s22 + t2, s12 + t1)
/// with s11 = E/(1-nu^2)(u1,1 + nu u2,2), s22 = E/(1-nu^2)(nu u1,1 + u2,2),
/// s12 = E/(2(1+nu))(u1,2 + u2,1).
std::vector<double> bc_discrepancies(const Jet2& u1, const Jet2& u2, const Jet2& E,
                                     Coord2 point, Boundary which,
                                     const ElasticityConstants& c,
                                     const fem::BoundaryLoad& load);

JetAdjoint bc_discrepancy_adjoint(const Jet2& u1, const Jet2& u2, const Jet2& E,
                                  Boundary which, const ElasticityConstants& c,
                                  std::span<const double> g);

struct BoundarySet {
  Boundary which = Boundary::left;
  std::vector<Coord2> points;
};

struct CollocationSet {
  std::vector<Coord2> interior;
  std::vector<BoundarySet> boundaries;
  /// Right-hand side f(x) of the PDE; empty means f = 0.
  std::function<Vec2(Coord2)> forcing;

  void validate() const;
};

/// Equidistant, boundary-inclusive collocation grid "grid:AxB".
struct GridSpec {
  int nx = 10;
  int ny = 10;
  std::string to_string() const;
};
GridSpec parse_grid_spec(std::string_view text);
std::vector<Coord2> grid_points(const GridSpec& g);

/// Interior grid plus `per_boundary` equidistant points on each of the left,
/// right, top and bottom edges and the single corner pin.
CollocationSet make_collocation(const GridSpec& interior, int per_boundary);

/// Loss value and gradients w.r.t. the u- and E-generator parameters.
struct PhysicsLoss {
  double value = 0.0;
  std::vector<double> grad_u;
  std::vector<double> grad_E;
};

/// Mean squared PDE residual over interior points x noise samples; noise
/// column j drives both generators at every point.
PhysicsLoss loss_pde(const nn::Generator& gen_u, const nn::Generator& gen_E,
                     const CollocationSet& colloc, const Eigen::MatrixXd& noise,
                     const ElasticityConstants& c, bool with_gradient = true);

/// Sum over boundary sets of the mean squared discrepancy.
PhysicsLoss loss_bc(const nn::Generator& gen_u, const nn::Generator& gen_E,
                    const CollocationSet& colloc, const Eigen::MatrixXd& noise,
                    const ElasticityConstants& c, const fem::BoundaryLoad& load,
                    bool with_gradient = true);

/// Raw residuals, for inspection. interior: 2 x (N_r * N_x) with column
/// j * N_x + i; boundary[k]: discrepancy_count x (N_b * N_k).
struct ResidualBatch {
  Eigen::MatrixXd interior;
  std::vector<Eigen::MatrixXd> boundary;
};

ResidualBatch evaluate_residuals(const nn::Generator& gen_u, const nn::Generator& gen_E,
                                 const CollocationSet& colloc,
                                 const Eigen::MatrixXd& noise_r,
                                 const Eigen::MatrixXd& noise_b,
                                 const ElasticityConstants& c,
                                 const fem::BoundaryLoad& load);

}  // namespace pigan::physics
