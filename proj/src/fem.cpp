#include "pigan/fem.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <string>

namespace pigan::fem {

void MeshSpec::validate() const {
  if (nx < 2 || ny < 2) throw ValidationError("mesh needs at least 2 elements per side");
  if (!(length > 0.0) || !(width > 0.0)) throw ValidationError("mesh extents must be positive");
}

void BoundaryLoad::validate() const {
  for (const auto* t : {&traction_right, &traction_top, &traction_bottom})
    for (double v : *t)
      if (!std::isfinite(v)) throw ValidationError("traction values must be finite");
}

std::array<double, 2> DisplacementField::at(Coord2 p) const {
  const double hx = mesh.length / mesh.nx;
  const double hy = mesh.width / mesh.ny;
  const double tx = std::clamp(p.x1 / hx, 0.0, static_cast<double>(mesh.nx));
  const double ty = std::clamp(p.x2 / hy, 0.0, static_cast<double>(mesh.ny));
  const int i = std::min(static_cast<int>(tx), mesh.nx - 1);
  const int j = std::min(static_cast<int>(ty), mesh.ny - 1);
  const double fx = tx - i;
  const double fy = ty - j;
  std::array<double, 2> out{};
  for (int c = 0; c < 2; ++c) {
    out[c] = (1 - fx) * (1 - fy) * u[2 * mesh.node(i, j) + c] +
             fx * (1 - fy) * u[2 * mesh.node(i + 1, j) + c] +
             (1 - fx) * fy * u[2 * mesh.node(i, j + 1) + c] +
             fx * fy * u[2 * mesh.node(i + 1, j + 1) + c];
  }
  return out;
}

namespace {

using Mat8 = Eigen::Matrix<double, 8, 8>;
using Mat38 = Eigen::Matrix<double, 3, 8>;

// Local node order: (0,0), (1,0), (1,1), (0,1) in reference coordinates.
constexpr double kXi[4] = {-1, 1, 1, -1};
constexpr double kEta[4] = {-1, -1, 1, 1};

Mat38 strain_matrix(double xi, double eta, double hx, double hy) {
  Mat38 b = Mat38::Zero();
  for (int a = 0; a < 4; ++a) {
    const double dndx = 0.25 * kXi[a] * (1 + kEta[a] * eta) * 2.0 / hx;
    const double dndy = 0.25 * kEta[a] * (1 + kXi[a] * xi) * 2.0 / hy;
    b(0, 2 * a) = dndx;
    b(1, 2 * a + 1) = dndy;
    b(2, 2 * a) = dndy;
    b(2, 2 * a + 1) = dndx;
  }
  return b;
}

Eigen::Matrix3d unit_modulus_law(double nu) {
  Eigen::Matrix3d d;
  d << 1, nu, 0, nu, 1, 0, 0, 0, (1 - nu) / 2;
  return d / (1 - nu * nu);
}

struct ElementKernel {
  // Stiffness contribution per Gauss point for E = 1; K_e = sum_g E_g M_g.
  std::array<Mat8, 4> gauss_stiffness;
  std::array<Coord2, 4> gauss_offset;
};

ElementKernel make_kernel(double hx, double hy, double nu) {
  ElementKernel k;
  const double g = 1.0 / std::sqrt(3.0);
  const Eigen::Matrix3d d = unit_modulus_law(nu);
  const double det_j = hx * hy / 4.0;
  for (int q = 0; q < 4; ++q) {
    const double xi = kXi[q] * g;
    const double eta = kEta[q] * g;
    const Mat38 b = strain_matrix(xi, eta, hx, hy);
    k.gauss_stiffness[q] = b.transpose() * d * b * det_j;
    k.gauss_offset[q] = {(1 + xi) * hx / 2, (1 + eta) * hy / 2};
  }
  return k;
}

std::array<std::size_t, 4> element_nodes(const MeshSpec& m, int ex, int ey) {
  return {m.node(ex, ey), m.node(ex + 1, ey), m.node(ex + 1, ey + 1),
          m.node(ex, ey + 1)};
}

}  // namespace

DisplacementField solve_plane_stress(const ModulusField& modulus,
                                     const MeshSpec& mesh,
                                     const BoundaryLoad& load, double nu,
                                     SolveDiagnostics* diagnostics) {
  mesh.validate();
  load.validate();
  if (!(nu > 0.0 && nu < 0.5)) throw ValidationError("Poisson ratio must lie in (0, 0.5)");

  const double hx = mesh.length / mesh.nx;
  const double hy = mesh.width / mesh.ny;
  const auto n_dof = 2 * mesh.node_count();
  const ElementKernel kernel = make_kernel(hx, hy, nu);

  // Consistent nodal loads for piecewise-constant edge tractions.
  Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_dof));
  for (int j = 0; j < mesh.ny; ++j)
    for (int c = 0; c < 2; ++c) {
      f(2 * mesh.node(mesh.nx, j) + c) += 0.5 * hy * load.traction_right[c];
      f(2 * mesh.node(mesh.nx, j + 1) + c) += 0.5 * hy * load.traction_right[c];
    }
  for (int i = 0; i < mesh.nx; ++i)
    for (int c = 0; c < 2; ++c) {
      f(2 * mesh.node(i, mesh.ny) + c) += 0.5 * hx * load.traction_top[c];
      f(2 * mesh.node(i + 1, mesh.ny) + c) += 0.5 * hx * load.traction_top[c];
      f(2 * mesh.node(i, 0) + c) += 0.5 * hx * load.traction_bottom[c];
      f(2 * mesh.node(i + 1, 0) + c) += 0.5 * hx * load.traction_bottom[c];
    }

  std::vector<char> fixed(n_dof, 0);
  for (int j = 0; j <= mesh.ny; ++j) fixed[2 * mesh.node(0, j)] = 1;
  if (load.pin_corner) fixed[2 * mesh.node(0, 0) + 1] = 1;

  std::vector<Eigen::Index> reduced(n_dof, -1);
  Eigen::Index n_free = 0;
  for (std::size_t d = 0; d < n_dof; ++d)
    if (!fixed[d]) reduced[d] = n_free++;

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.nx) * mesh.ny * 64);
  std::vector<Mat8> element_k(static_cast<std::size_t>(mesh.nx) * mesh.ny);
  for (int ey = 0; ey < mesh.ny; ++ey) {
    for (int ex = 0; ex < mesh.nx; ++ex) {
      const Coord2 origin = mesh.node_coord(ex, ey);
      Mat8 ke = Mat8::Zero();
      for (int q = 0; q < 4; ++q) {
        const double e = modulus({origin.x1 + kernel.gauss_offset[q].x1,
                                  origin.x2 + kernel.gauss_offset[q].x2});
        if (!(e > 0.0) || !std::isfinite(e))
          throw NumericalError("elastic modulus must be positive and finite");
        ke += e * kernel.gauss_stiffness[q];
      }
      const auto nodes = element_nodes(mesh, ex, ey);
      for (int a = 0; a < 8; ++a) {
        const auto ra = reduced[2 * nodes[a / 2] + a % 2];
        if (ra < 0) continue;
        for (int b = 0; b < 8; ++b) {
          const auto rb = reduced[2 * nodes[b / 2] + b % 2];
          if (rb >= 0) triplets.emplace_back(ra, rb, ke(a, b));
        }
      }
      element_k[static_cast<std::size_t>(ey) * mesh.nx + ex] = ke;
    }
  }

  Eigen::SparseMatrix<double> k(n_free, n_free);
  k.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::VectorXd rhs(n_free);
  for (std::size_t d = 0; d < n_dof; ++d)
    if (reduced[d] >= 0) rhs(reduced[d]) = f(static_cast<Eigen::Index>(d));

  DisplacementField out{mesh, std::vector<double>(n_dof, 0.0)};
  double rel_residual = 0.0;
  if (rhs.norm() > 0.0) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(k);
    if (ldlt.info() != Eigen::Success)
      throw NumericalError("stiffness factorization failed");
    const Eigen::VectorXd dvals = ldlt.vectorD().cwiseAbs();
    if (dvals.minCoeff() <= 1e-12 * dvals.maxCoeff())
      throw NumericalError(
          "stiffness matrix is singular: boundary constraints do not remove "
          "rigid-body motion");
    const Eigen::VectorXd sol = ldlt.solve(rhs);
    rel_residual = (k * sol - rhs).norm() / rhs.norm();
    if (!(rel_residual <= 1e-10))
      throw NumericalError("linear solve residual " + std::to_string(rel_residual) +
                           " exceeds 1e-10");
    for (std::size_t d = 0; d < n_dof; ++d)
      if (reduced[d] >= 0) out.u[d] = sol(reduced[d]);
  }

  if (diagnostics) {
    // Internal force at constrained left-edge dofs = reaction (no applied load there).
    double reaction = 0.0;
    for (int ey = 0; ey < mesh.ny; ++ey) {
      const auto nodes = element_nodes(mesh, 0, ey);
      Eigen::Matrix<double, 8, 1> ue;
      for (int a = 0; a < 8; ++a) ue(a) = out.u[2 * nodes[a / 2] + a % 2];
      const Eigen::Matrix<double, 8, 1> fe =
          element_k[static_cast<std::size_t>(ey) * mesh.nx] * ue;
      // local nodes 0 and 3 lie on x1 = 0
      reaction += fe(0) + fe(6);
    }
    for (int j = 0; j <= mesh.ny; ++j) reaction -= f(2 * mesh.node(0, j));
    diagnostics->relative_residual = rel_residual;
    diagnostics->reaction_x1 = -reaction;
    double applied = 0.0;
    for (int j = 0; j <= mesh.ny; ++j)
      for (int i = 1; i <= mesh.nx; ++i) applied += f(2 * mesh.node(i, j));
    diagnostics->applied_x1 = applied;
  }
  return out;
}

std::array<double, 3> element_center_stress(const DisplacementField& field,
                                            const ModulusField& modulus,
                                            int ex, int ey, double nu) {
  const auto& mesh = field.mesh;
  const double hx = mesh.length / mesh.nx;
  const double hy = mesh.width / mesh.ny;
  const Mat38 b = strain_matrix(0.0, 0.0, hx, hy);
  const auto nodes = element_nodes(mesh, ex, ey);
  Eigen::Matrix<double, 8, 1> ue;
  for (int a = 0; a < 8; ++a) ue(a) = field.u[2 * nodes[a / 2] + a % 2];
  const Coord2 c{mesh.node_coord(ex, ey).x1 + hx / 2, mesh.node_coord(ex, ey).x2 + hy / 2};
  const Eigen::Vector3d s = modulus(c) * unit_modulus_law(nu) * (b * ue);
  return {s(0), s(1), s(2)};
}

std::vector<Coord2> make_sensor_grid(int n_per_side) {
  if (n_per_side < 2) throw ValidationError("sensor grid needs at least 2 points per side");
  std::vector<Coord2> pts;
  pts.reserve(static_cast<std::size_t>(n_per_side) * (n_per_side - 1));
  const double h = 1.0 / (n_per_side - 1);
  for (int j = 0; j < n_per_side; ++j)
    for (int i = 1; i < n_per_side; ++i)
      pts.push_back({i == n_per_side - 1 ? 1.0 : i * h, j == n_per_side - 1 ? 1.0 : j * h});
  return pts;
}

}  // namespace pigan::fem
