#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "pigan/dataset.hpp"
#include "pigan/fem.hpp"

using namespace pigan;
using namespace pigan::fem;

namespace {
double max_nodal_error(const DisplacementField& f, const oracle::UniformSolution& s) {
  double err = 0.0;
  for (int j = 0; j <= f.mesh.ny; ++j)
    for (int i = 0; i <= f.mesh.nx; ++i) {
      const Coord2 p = f.mesh.node_coord(i, j);
      err = std::max({err, std::abs(f.u1(i, j) - s.u1(p)), std::abs(f.u2(i, j) - s.u2(p))});
    }
  return err;
}
}  // namespace

TEST_SUITE("forward-solver") {

TEST_CASE("homogeneous modulus reproduces the uniaxial solution") {
  const oracle::UniformSolution s;
  const MeshSpec mesh{32, 32};
  SolveDiagnostics diag;
  const auto f = solve_plane_stress([](Coord2) { return 1.1; }, mesh, BoundaryLoad{}, 0.3, &diag);
  CHECK(max_nodal_error(f, s) < 1e-8);
  CHECK(diag.relative_residual <= 1e-10);

  for (int ey = 0; ey < mesh.ny; ey += 5)
    for (int ex = 0; ex < mesh.nx; ex += 3) {
      const auto st = element_center_stress(f, [](Coord2) { return 1.1; }, ex, ey, 0.3);
      CHECK(std::abs(st[0] - 1.5) < 1e-8);
      CHECK(std::abs(st[1]) < 1e-8);
      CHECK(std::abs(st[2]) < 1e-8);
    }
}

TEST_CASE("rectangular meshes and non-square elements") {
  const oracle::UniformSolution s{2.0, 0.25, 0.8};
  BoundaryLoad load;
  load.traction_right = {0.8, 0.0};
  const auto f = solve_plane_stress([](Coord2) { return 2.0; }, MeshSpec{12, 5}, load, 0.25);
  CHECK(max_nodal_error(f, s) < 1e-10);
}

TEST_CASE("zero traction gives zero displacement") {
  BoundaryLoad load;
  load.traction_right = {0.0, 0.0};
  const auto f = solve_plane_stress([](Coord2 p) { return 1.0 + p.x1; }, MeshSpec{8, 8}, load, 0.3);
  for (double v : f.u) CHECK(v == 0.0);
}

TEST_CASE("global equilibrium with a heterogeneous modulus") {
  SolveDiagnostics diag;
  solve_plane_stress([](Coord2 p) { return 1.0 + 0.5 * std::sin(3 * p.x1) * p.x2; }, MeshSpec{24, 24},
                     BoundaryLoad{}, 0.3, &diag);
  CHECK(diag.applied_x1 == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(std::abs(diag.reaction_x1 - diag.applied_x1) / diag.applied_x1 < 1e-8);
}

TEST_CASE("second-order self-convergence under refinement") {
  const auto e = [](Coord2 p) { return 1.0 + 0.1 * std::exp(std::sin(2.0 * p.x1) + p.x2 * p.x2); };
  const auto sensors = make_sensor_grid(10);
  std::vector<std::vector<double>> sol;
  for (int n : {16, 32, 64}) {
    const auto f = solve_plane_stress(e, MeshSpec{n, n}, BoundaryLoad{}, 0.3);
    std::vector<double> v;
    for (const auto& p : sensors) {
      const auto u = f.at(p);
      v.push_back(u[0]);
      v.push_back(u[1]);
    }
    sol.push_back(v);
  }
  double d1 = 0.0, d2 = 0.0;
  for (std::size_t k = 0; k < sol[0].size(); ++k) {
    d1 = std::max(d1, std::abs(sol[1][k] - sol[0][k]));
    d2 = std::max(d2, std::abs(sol[2][k] - sol[1][k]));
  }
  const double rate = std::log2(d1 / d2);
  CHECK(rate > 1.7);
  CHECK(rate < 2.3);
}

TEST_CASE("insufficient constraints are reported") {
  BoundaryLoad load;
  load.pin_corner = false;
  CHECK_THROWS_AS(solve_plane_stress([](Coord2) { return 1.0; }, MeshSpec{4, 4}, load, 0.3),
                  NumericalError);
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(MeshSpec({1, 4}).validate(), ValidationError);
  CHECK_THROWS_AS(solve_plane_stress([](Coord2) { return 1.0; }, MeshSpec{4, 4}, BoundaryLoad{}, 0.5),
                  ValidationError);
  CHECK_THROWS_AS(solve_plane_stress([](Coord2) { return -1.0; }, MeshSpec{4, 4}, BoundaryLoad{}, 0.3),
                  NumericalError);
}

TEST_CASE("sensor grid") {
  const auto s = make_sensor_grid(10);
  REQUIRE(s.size() == 90);
  for (const auto& p : s) {
    CHECK(p.x1 > 0.0);
    const double k = p.x1 * 9.0;
    CHECK(std::abs(k - std::round(k)) < 1e-12);
    CHECK(std::round(k) >= 1);
  }
  CHECK(s.back() == Coord2{1.0, 1.0});
  const auto two = make_sensor_grid(2);
  REQUIRE(two.size() == 2);
  CHECK(two[0] == Coord2{1.0, 0.0});
  CHECK(two[1] == Coord2{1.0, 1.0});
  CHECK_THROWS_AS(make_sensor_grid(1), ValidationError);
}

TEST_CASE("dataset generation") {
  const auto model = field::build_kl_model(field::UniformGrid{}, field::KernelSpec{}, 5, 1.0, 0.1);
  data::GenerationSpec spec;
  spec.mesh = {16, 16};
  spec.sensors = make_sensor_grid(10);
  spec.n_snapshots = 6;
  spec.seed = 11;
  spec.fingerprint = "k=v\n";
  const auto a = data::generate_dataset(model, spec);
  const auto b = data::generate_dataset(model, spec);
  REQUIRE(a.snapshot_count() == 6);
  REQUIRE(a.sensor_count() == 90);
  const Eigen::MatrixXd m = a.as_matrix();
  CHECK(m.rows() == 180);
  CHECK(m.cols() == 6);
  CHECK(m == b.as_matrix());
  for (const auto& s : a.snapshots) CHECK(s.kl_coefficients.size() == 5);

  // Snapshot j does not depend on how many snapshots are requested.
  spec.n_snapshots = 3;
  const auto c = data::generate_dataset(model, spec);
  CHECK(c.as_matrix() == m.leftCols(3));

  const auto path = std::filesystem::temp_directory_path() / "pigan_test_dataset.bin";
  data::write_dataset(path, a);
  const auto back = data::read_dataset(path);
  CHECK(back.as_matrix() == m);
  CHECK(back.fingerprint == "k=v\n");
  CHECK(back.sensors == a.sensors);
  CHECK(back.snapshots[4].kl_coefficients == a.snapshots[4].kl_coefficients);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(data::read_dataset(path), IoError);
}

TEST_CASE("zero KL coefficients reproduce the homogeneous solution at the sensors") {
  const auto model = field::build_kl_model(field::UniformGrid{}, field::KernelSpec{}, 5, 1.0, 0.1);
  const field::FieldSample zero(model, std::vector<double>(5, 0.0));
  const auto f = solve_plane_stress([&](Coord2 p) { return zero(p); }, MeshSpec{16, 16}, BoundaryLoad{}, 0.3);
  const oracle::UniformSolution s;
  for (const auto& p : make_sensor_grid(10)) {
    const auto u = f.at(p);
    CHECK(std::abs(u[0] - s.u1(p)) < 1e-8);
    CHECK(std::abs(u[1] - s.u2(p)) < 1e-8);
  }
}

}
