#pragma once

#include <array>
#include <functional>
#include <vector>

#include "pigan/common.hpp"

namespace pigan::fem {

/// Structured mesh of bilinear quadrilaterals on [0, length] x [0, width].
struct MeshSpec {
  int nx = 64;
  int ny = 64;
  double length = 1.0;
  double width = 1.0;

  void validate() const;
  int nodes_x() const { return nx + 1; }
  int nodes_y() const { return ny + 1; }
  std::size_t node_count() const {
    return static_cast<std::size_t>(nodes_x()) * nodes_y();
  }
  std::size_t node(int i, int j) const {
    return static_cast<std::size_t>(j) * nodes_x() + i;
  }
  Coord2 node_coord(int i, int j) const {
    return {length * i / nx, width * j / ny};
  }
};

/// Tractions on the right (x1 = L), top (x2 = w) and bottom (x2 = 0) edges.
/// The left edge carries u1 = 0; the corner (0, 0) additionally carries
/// u2 = 0 unless `pin_corner` is cleared.
struct BoundaryLoad {
  std::array<double, 2> traction_right{1.5, 0.0};
  std::array<double, 2> traction_top{0.0, 0.0};
  std::array<double, 2> traction_bottom{0.0, 0.0};
  bool pin_corner = true;

  void validate() const;
};

using ModulusField = std::function<double(Coord2)>;

/// Nodal displacements, interleaved (u1, u2) per node.
struct DisplacementField {
  MeshSpec mesh;
  std::vector<double> u;

  double u1(int i, int j) const { return u[2 * mesh.node(i, j)]; }
  double u2(int i, int j) const { return u[2 * mesh.node(i, j) + 1]; }
  /// Bilinear interpolation inside the element containing `p`.
  std::array<double, 2> at(Coord2 p) const;
};

struct SolveDiagnostics {
  double relative_residual = 0.0;
  /// Sum of x1 reaction forces on the left edge and the applied x1 load.
  double reaction_x1 = 0.0;
  double applied_x1 = 0.0;
};

/// Plane-stress FEM solve of div(sigma) = 0 with
/// sigma = E/(1-nu^2) [[1, nu, 0], [nu, 1, 0], [0, 0, (1-nu)/2]] eps.
/// E is sampled at the 2x2 Gauss points of every element.
DisplacementField solve_plane_stress(const ModulusField& modulus,
                                     const MeshSpec& mesh,
                                     const BoundaryLoad& load, double nu,
                                     SolveDiagnostics* diagnostics = nullptr);

/// Stress (s11, s22, s12) at the centre of element (ex, ey).
std::array<double, 3> element_center_stress(const DisplacementField& field,
                                            const ModulusField& modulus,
                                            int ex, int ey, double nu);

/// n x n boundary-inclusive grid over the unit square with the x1 = 0 column
/// removed; ordered row by row (x2 outer, x1 inner).
std::vector<Coord2> make_sensor_grid(int n_per_side = 10);

}  // namespace pigan::fem
