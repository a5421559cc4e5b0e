#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "pigan/nn/mlp.hpp"
#include "pigan/physics.hpp"

using namespace pigan;
using namespace pigan::physics;

namespace {

Jet2 random_jet(Rng& rng) {
  std::normal_distribution<double> n;
  Jet2 j;
  j.value = n(rng);
  for (double& v : j.d1) v = n(rng);
  for (double& v : j.d2) v = n(rng);
  return j;
}

Jet2 scaled(const Jet2& a, double s) {
  Jet2 r = a;
  r.value *= s;
  for (double& v : r.d1) v *= s;
  for (double& v : r.d2) v *= s;
  return r;
}

Jet2 sum(const Jet2& a, const Jet2& b) {
  Jet2 r = a;
  r.value += b.value;
  for (int k = 0; k < 2; ++k) r.d1[k] += b.d1[k];
  for (int k = 0; k < 3; ++k) r.d2[k] += b.d2[k];
  return r;
}

Eigen::MatrixXd some_noise(int rows, int cols, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::normal_distribution<double> n;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m(k) = n(rng);
  return m;
}

}  // namespace

TEST_SUITE("physics-residual") {

TEST_CASE("uniform strain is in equilibrium") {
  const ElasticityConstants c;
  for (double a : {0.5, 1.0, 1.5 / 1.1}) {
    const Jet2 u1{0.3 * a, {a, 0.0}, {}};
    const Jet2 u2{-0.1, {0.0, -c.nu * a}, {}};
    const Jet2 e{2.7, {}, {}};
    const auto r = pde_residual(u1, u2, e, c);
    CHECK(r[0] == 0.0);
    CHECK(r[1] == 0.0);
  }
}

TEST_CASE("manufactured fields give the symbolic residual") {
  const ElasticityConstants c;
  const auto gu = oracle::manufactured_u();
  const auto ge = oracle::manufactured_E();
  Rng rng = make_rng(3);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<Coord2> xs;
  for (int k = 0; k < 25; ++k) xs.push_back({u01(rng), u01(rng)});
  const Eigen::MatrixXd noise = Eigen::MatrixXd::Zero(1, 25);
  const auto pu = gu.evaluate(xs, noise, nn::JetLayout::second_order());
  const auto pe = ge.evaluate(xs, noise, nn::JetLayout::second_order());
  for (std::size_t b = 0; b < xs.size(); ++b) {
    const auto r = pde_residual(pu->jet(b, 0), pu->jet(b, 1), pe->jet(b, 0), c);
    CHECK(std::abs(r[0] - oracle::manufactured_r1(xs[b].x1)) < 1e-10);
    CHECK(std::abs(r[1]) < 1e-10);
  }
}

TEST_CASE("residual is bilinear in the displacement and modulus jets") {
  const ElasticityConstants c;
  Rng rng = make_rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const Jet2 a1 = random_jet(rng), a2 = random_jet(rng), b1 = random_jet(rng), b2 = random_jet(rng);
    const Jet2 e = random_jet(rng), f = random_jet(rng);
    const double s = std::normal_distribution<double>()(rng);

    const auto rsum = pde_residual(sum(a1, b1), sum(a2, b2), e, c);
    const auto ra = pde_residual(a1, a2, e, c);
    const auto rb = pde_residual(b1, b2, e, c);
    const auto rE = pde_residual(a1, a2, sum(e, f), c);
    const auto rf = pde_residual(a1, a2, f, c);
    const auto rsu = pde_residual(scaled(a1, s), scaled(a2, s), e, c);
    const auto rse = pde_residual(a1, a2, scaled(e, s), c);
    for (int k = 0; k < 2; ++k) {
      const double tol = 1e-12 * (1.0 + std::abs(ra[k]) + std::abs(rb[k]) + std::abs(rf[k]));
      CHECK(std::abs(rsum[k] - ra[k] - rb[k]) < tol);
      CHECK(std::abs(rE[k] - ra[k] - rf[k]) < tol);
      CHECK(std::abs(rsu[k] - s * ra[k]) < tol * (1.0 + std::abs(s)));
      CHECK(std::abs(rse[k] - s * ra[k]) < tol * (1.0 + std::abs(s)));
    }
  }
}

TEST_CASE("residual adjoint agrees with directional differences") {
  const ElasticityConstants c;
  Rng rng = make_rng(10);
  const Jet2 u1 = random_jet(rng), u2 = random_jet(rng), e = random_jet(rng);
  const Vec2 g{0.7, -1.3};
  const auto adj = pde_residual_adjoint(u1, u2, e, c, g);
  const auto f = [&](const Jet2& a, const Jet2& b, const Jet2& m) {
    const auto r = pde_residual(a, b, m, c);
    return g[0] * r[0] + g[1] * r[1];
  };
  const double h = 1e-6;
  const auto check_slot = [&](int which, auto&& member, double expect) {
    Jet2 jp[3] = {u1, u2, e}, jm[3] = {u1, u2, e};
    member(jp[which]) += h;
    member(jm[which]) -= h;
    const double fd = (f(jp[0], jp[1], jp[2]) - f(jm[0], jm[1], jm[2])) / (2 * h);
    CHECK(std::abs(fd - expect) < 1e-7 * (1.0 + std::abs(expect)));
  };
  const Jet2* a[3] = {&adj.u1, &adj.u2, &adj.E};
  for (int w = 0; w < 3; ++w) {
    check_slot(w, [](Jet2& j) -> double& { return j.value; }, a[w]->value);
    for (int d = 0; d < 2; ++d) check_slot(w, [d](Jet2& j) -> double& { return j.d1[d]; }, a[w]->d1[d]);
    for (int d = 0; d < 3; ++d) check_slot(w, [d](Jet2& j) -> double& { return j.d2[d]; }, a[w]->d2[d]);
  }
}

TEST_CASE("boundary discrepancies") {
  const ElasticityConstants c;
  const fem::BoundaryLoad load;
  const Jet2 zero{};
  const Jet2 e{1.1, {}, {}};
  const auto right = bc_discrepancies(zero, zero, e, {1.0, 0.4}, Boundary::right, c, load);
  REQUIRE(right.size() == 2);
  CHECK(right[0] == -1.5);
  CHECK(right[1] == 0.0);
  CHECK(bc_discrepancies(zero, zero, e, {0.0, 0.4}, Boundary::left, c, load) == std::vector<double>{0.0});

  const oracle::UniformSolution s;
  for (double x2 : {0.0, 0.3, 1.0}) {
    const Coord2 p{1.0, x2};
    const Jet2 u1{s.u1(p), {s.t / s.E, 0.0}, {}};
    const Jet2 u2{s.u2(p), {0.0, -s.nu * s.t / s.E}, {}};
    for (double v : bc_discrepancies(u1, u2, e, p, Boundary::right, c, load)) CHECK(std::abs(v) < 1e-12);
    for (Boundary b : {Boundary::top, Boundary::bottom}) {
      const Coord2 q{0.5, b == Boundary::top ? 1.0 : 0.0};
      for (double v : bc_discrepancies(u1, u2, e, q, b, c, load)) CHECK(std::abs(v) < 1e-12);
    }
  }
  CHECK_THROWS_AS(bc_discrepancies(zero, zero, e, {0.5, 0.5}, Boundary::right, c, load), ValidationError);
  CHECK(discrepancy_count(Boundary::corner) == 1);
  CHECK(discrepancy_count(Boundary::top) == 2);
  CHECK(parse_boundary(boundary_name(Boundary::bottom)) == Boundary::bottom);
  CHECK_THROWS_AS(parse_boundary("gamma7"), ValidationError);
}

TEST_CASE("boundary adjoints agree with finite differences") {
  const ElasticityConstants c;
  const fem::BoundaryLoad load;
  Rng rng = make_rng(12);
  const Jet2 u1 = random_jet(rng), u2 = random_jet(rng), e = random_jet(rng);
  const std::pair<Boundary, Coord2> cases[] = {{Boundary::left, {0, 0.5}},  {Boundary::corner, {0, 0}},
                                               {Boundary::right, {1, 0.5}}, {Boundary::top, {0.5, 1}},
                                               {Boundary::bottom, {0.5, 0}}};
  for (const auto& [b, p] : cases) {
    std::vector<double> g(static_cast<std::size_t>(discrepancy_count(b)));
    for (double& v : g) v = std::normal_distribution<double>()(rng);
    const auto adj = bc_discrepancy_adjoint(u1, u2, e, b, c, g);
    const auto f = [&](const Jet2& a, const Jet2& bb, const Jet2& m) {
      const auto d = bc_discrepancies(a, bb, m, p, b, c, load);
      double s = 0.0;
      for (std::size_t k = 0; k < d.size(); ++k) s += g[k] * d[k];
      return s;
    };
    const double h = 1e-6;
    Jet2 jets[3] = {u1, u2, e};
    const Jet2* a[3] = {&adj.u1, &adj.u2, &adj.E};
    for (int w = 0; w < 3; ++w)
      for (int slot = 0; slot < 3; ++slot) {
        auto ref = [&](Jet2& j) -> double& { return slot == 0 ? j.value : j.d1[slot - 1]; };
        const double keep = ref(jets[w]);
        ref(jets[w]) = keep + h;
        const double fp = f(jets[0], jets[1], jets[2]);
        ref(jets[w]) = keep - h;
        const double fm = f(jets[0], jets[1], jets[2]);
        ref(jets[w]) = keep;
        const double expect = slot == 0 ? a[w]->value : a[w]->d1[slot - 1];
        CHECK(std::abs((fp - fm) / (2 * h) - expect) < 1e-7 * (1.0 + std::abs(expect)));
      }
  }
}

TEST_CASE("losses on hand-evaluable fields") {
  const ElasticityConstants c;
  const fem::BoundaryLoad load;
  CollocationSet one;
  one.interior = {{0.5, 0.3}};
  const Eigen::MatrixXd noise = Eigen::MatrixXd::Zero(1, 1);
  CHECK(loss_pde(oracle::manufactured_u(), oracle::manufactured_E(), one, noise, c).value ==
        doctest::Approx(16.0).epsilon(1e-12));

  const auto colloc = make_collocation(GridSpec{7, 7}, 10);
  const Eigen::MatrixXd n3 = some_noise(1, 3, 2);
  const oracle::UniformSolution zero_u{1.1, 0.3, 0.0};
  CHECK(loss_bc(oracle::uniform_u(zero_u), oracle::constant_E(1.1), colloc, n3, c, load).value ==
        doctest::Approx(2.25).epsilon(1e-14));
  CHECK(loss_pde(oracle::uniform_u(zero_u), oracle::constant_E(0.0), colloc, n3, c).value == 0.0);

  const oracle::UniformSolution exact;
  const double pde = loss_pde(oracle::uniform_u(exact), oracle::constant_E(1.1), colloc, n3, c).value;
  const double bc = loss_bc(oracle::uniform_u(exact), oracle::constant_E(1.1), colloc, n3, c, load).value;
  CHECK(pde < 1e-20);
  CHECK(bc < 1e-20);
}

TEST_CASE("loss gradients on tiny networks agree with finite differences") {
  const ElasticityConstants c;
  const fem::BoundaryLoad load;
  nn::Mlp nu = nn::init_network({7, 6, 2}, 1);
  nn::Mlp ne = nn::init_network({7, 6, 1}, 2);
  ne.bias(1)(0) = 1.2;
  const nn::MlpGenerator gu(nu), ge(ne);
  const auto colloc = make_collocation(GridSpec{3, 3}, 3);
  const Eigen::MatrixXd noise = some_noise(5, 2, 4);
  const auto total = [&] {
    return loss_pde(gu, ge, colloc, noise, c, false).value + loss_bc(gu, ge, colloc, noise, c, load, false).value;
  };
  const auto pde = loss_pde(gu, ge, colloc, noise, c);
  const auto bc = loss_bc(gu, ge, colloc, noise, c, load);
  std::vector<double> gu_sum(pde.grad_u), ge_sum(pde.grad_E);
  for (std::size_t k = 0; k < gu_sum.size(); ++k) gu_sum[k] += bc.grad_u[k];
  for (std::size_t k = 0; k < ge_sum.size(); ++k) ge_sum[k] += bc.grad_E[k];
  CHECK(oracle::rel_error(gu_sum, oracle::fd_gradient(total, nu.parameters())) < 1e-4);
  CHECK(oracle::rel_error(ge_sum, oracle::fd_gradient(total, ne.parameters())) < 1e-4);
  CHECK(pde.value >= 0.0);
  CHECK(bc.value >= 0.0);
}

TEST_CASE("residual batch matches pointwise evaluation") {
  const ElasticityConstants c;
  const fem::BoundaryLoad load;
  const nn::Mlp nu = nn::init_network({7, 6, 2}, 5);
  const nn::Mlp ne = nn::init_network({7, 6, 1}, 6);
  const nn::MlpGenerator gu(nu), ge(ne);
  const auto colloc = make_collocation(GridSpec{4, 3}, 4);
  const Eigen::MatrixXd nr = some_noise(5, 3, 1), nb = some_noise(5, 2, 2);
  const auto batch = evaluate_residuals(gu, ge, colloc, nr, nb, c, load);
  const std::size_t nx = colloc.interior.size();
  REQUIRE(batch.interior.rows() == 2);
  REQUIRE(batch.interior.cols() == static_cast<Eigen::Index>(3 * nx));
  for (Eigen::Index j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < nx; ++i) {
      const Coord2 p = colloc.interior[i];
      Eigen::MatrixXd xi = nr.col(j);
      const std::vector<Coord2> xs{p};
      const auto pu = gu.evaluate(xs, xi, nn::JetLayout::second_order());
      const auto pe = ge.evaluate(xs, xi, nn::JetLayout::second_order());
      const auto r = pde_residual(pu->jet(0, 0), pu->jet(0, 1), pe->jet(0, 0), c);
      const Eigen::Index col = j * static_cast<Eigen::Index>(nx) + static_cast<Eigen::Index>(i);
      CHECK(batch.interior(0, col) == doctest::Approx(r[0]).epsilon(1e-12));
      CHECK(batch.interior(1, col) == doctest::Approx(r[1]).epsilon(1e-12));
    }
  REQUIRE(batch.boundary.size() == colloc.boundaries.size());
  for (std::size_t k = 0; k < colloc.boundaries.size(); ++k)
    CHECK(batch.boundary[k].cols() == static_cast<Eigen::Index>(2 * colloc.boundaries[k].points.size()));
}

TEST_CASE("collocation layout") {
  const auto c = make_collocation(GridSpec{7, 7}, 10);
  CHECK(c.interior.size() == 49);
  CHECK(c.interior.front() == Coord2{0.0, 0.0});
  CHECK(c.interior.back() == Coord2{1.0, 1.0});
  REQUIRE(c.boundaries.size() == 5);
  for (const auto& b : c.boundaries) {
    CHECK(b.points.size() == (b.which == Boundary::corner ? 1u : 10u));
    for (const auto& p : b.points) CHECK(on_boundary(p, b.which));
  }
  CHECK_NOTHROW(c.validate());
  CHECK(parse_grid_spec("grid:4x6").nx == 4);
  CHECK(parse_grid_spec("grid:4x6").to_string() == "grid:4x6");
  CHECK_THROWS_AS(parse_grid_spec("grid:4"), ValidationError);
  CHECK_THROWS_AS(parse_grid_spec("4x4"), ValidationError);
  CHECK_THROWS_AS(parse_grid_spec("grid:0x3"), ValidationError);
  CHECK_THROWS_AS(ElasticityConstants{0.5}.validate(), ValidationError);
}

}
