#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "pigan/random_field.hpp"

using namespace pigan;
using namespace pigan::field;

TEST_SUITE("random-field") {

TEST_CASE("kernel values") {
  const KernelSpec unit{1.0, 1.0};
  CHECK(kernel_eval({0.3, 0.7}, {0.3, 0.7}, unit) == 1.0);
  CHECK(kernel_eval({0, 0}, {1, 1}, unit) == doctest::Approx(0.367879441171).epsilon(1e-11));
  CHECK(kernel_eval({0, 0}, {0.5, 0}, KernelSpec{0.5, 1.0}) ==
        doctest::Approx(0.606530659713).epsilon(1e-11));
  CHECK(kernel_eval({0.1, 0.2}, {0.8, 0.4}, unit) == kernel_eval({0.8, 0.4}, {0.1, 0.2}, unit));
}

TEST_CASE("kernel spec validation") {
  CHECK_THROWS_AS(KernelSpec({0.0, 1.0}).validate(), ValidationError);
  CHECK_THROWS_AS(KernelSpec({1.0, -1.0}).validate(), ValidationError);
  CHECK_NOTHROW(KernelSpec({0.2, 2.0}).validate());
}

TEST_CASE("two-point grid matches the closed-form eigenpairs") {
  const UniformGrid grid{2, 1};
  const auto model = build_kl_model(grid, KernelSpec{}, 2, 1.0, 0.1);
  const auto [hi, lo] = oracle::two_point_kl(1.0, 1.0);
  CHECK(model.eigenvalues()(0) == doctest::Approx(hi).epsilon(1e-12));
  CHECK(model.eigenvalues()(1) == doctest::Approx(lo).epsilon(1e-12));
  CHECK(model.captured_variance_ratio() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("default grid eigen-structure") {
  const auto model = build_kl_model(UniformGrid{}, KernelSpec{}, 5, 1.0, 0.1);
  const auto& lam = model.eigenvalues();
  for (int k = 0; k < lam.size(); ++k) {
    CHECK(lam(k) >= 0.0);
    if (k > 0) CHECK(lam(k) <= lam(k - 1));
  }
  CHECK(model.captured_variance_ratio() == doctest::Approx(oracle::separable_kl_ratio(25, 1.0, 5)).epsilon(1e-10));
  CHECK(build_kl_model(UniformGrid{}, KernelSpec{}, 6, 1.0, 0.1).captured_variance_ratio() ==
        doctest::Approx(oracle::separable_kl_ratio(25, 1.0, 6)).epsilon(1e-10));

  const Eigen::MatrixXd& phi = model.eigenfunctions();
  const Eigen::MatrixXd gram = phi.transpose() * phi * model.quadrature_weight();
  CHECK((gram - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("full-rank reconstruction captures all variance") {
  const UniformGrid grid{4, 3};
  const auto model = build_kl_model(grid, KernelSpec{0.7, 1.0}, 12, 1.0, 0.1);
  CHECK(std::abs(model.captured_variance_ratio() - 1.0) < 1e-10);
  const auto pts = grid.points();
  for (const auto& a : pts)
    for (const auto& b : pts)
      CHECK(model.latent_covariance(a, b) == doctest::Approx(kernel_eval(a, b, KernelSpec{0.7, 1.0})).epsilon(1e-9));
}

TEST_CASE("truncated covariance error is bounded by the discarded variance") {
  const UniformGrid grid{9, 9};
  const KernelSpec spec{0.4, 1.0};
  const auto model = build_kl_model(grid, spec, 6, 1.0, 0.1);
  const auto pts = grid.points();
  double diff = 0.0, ref = 0.0;
  for (const auto& a : pts)
    for (const auto& b : pts) {
      const double k = kernel_eval(a, b, spec);
      diff += std::pow(model.latent_covariance(a, b) - k, 2);
      ref += k * k;
    }
  CHECK(std::sqrt(diff / ref) <= 1.0 - model.captured_variance_ratio());
}

TEST_CASE("n_terms out of range") {
  CHECK_THROWS_AS(build_kl_model(UniformGrid{2, 2}, KernelSpec{}, 5, 1.0, 0.1), ValidationError);
  CHECK_THROWS_AS(build_kl_model(UniformGrid{2, 2}, KernelSpec{}, 0, 1.0, 0.1), ValidationError);
}

TEST_CASE("zero coefficients give alpha + beta everywhere") {
  const auto model = build_kl_model(UniformGrid{}, KernelSpec{}, 5, 1.0, 0.1);
  const FieldSample s(model, std::vector<double>(5, 0.0));
  for (Coord2 p : {Coord2{0, 0}, Coord2{0.37, 0.91}, Coord2{1, 1}})
    CHECK(s(p) == doctest::Approx(1.1).epsilon(1e-15));
}

TEST_CASE("samples exceed alpha and are deterministic per seed") {
  const auto model = build_kl_model(UniformGrid{}, KernelSpec{}, 5, 1.0, 0.1);
  Rng r1 = make_rng(42, 3, 9), r2 = make_rng(42, 3, 9);
  const auto a = sample_field(model, r1);
  const auto b = sample_field(model, r2);
  CHECK(a.kl_coefficients() == b.kl_coefficients());
  for (int i = 0; i <= 40; ++i)
    for (int j = 0; j <= 40; ++j) {
      const Coord2 p{i / 40.0, j / 40.0};
      CHECK(a(p) > 1.0);
      CHECK(a(p) == b(p));
    }
}

TEST_CASE("off-grid evaluation interpolates between nodes") {
  const UniformGrid grid{3, 3};
  const auto model = build_kl_model(grid, KernelSpec{}, 3, 1.0, 0.1);
  const FieldSample s(model, {0.5, -1.0, 2.0});
  const double mid = s.latent({0.25, 0.0});
  CHECK(mid == doctest::Approx(0.5 * (s.latent({0.0, 0.0}) + s.latent({0.5, 0.0}))).epsilon(1e-14));
}

TEST_CASE("Monte-Carlo moments approach the lognormal oracle") {
  const auto model = build_kl_model(UniformGrid{}, KernelSpec{}, 5, 1.0, 0.1);
  const Coord2 p{0.3, 0.6};
  const double s2 = model.latent_variance(p);
  const double mean_ref = oracle::lognormal_mean(1.0, 0.1, s2);
  const double std_ref = oracle::lognormal_std(0.1, s2);
  CHECK(model.modulus_mean(p) == doctest::Approx(mean_ref).epsilon(1e-13));
  CHECK(model.modulus_std(p) == doctest::Approx(std_ref).epsilon(1e-13));

  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int s = 0; s < n; ++s) {
    Rng rng = make_rng(5, 0, static_cast<std::uint64_t>(s));
    const double e = sample_field(model, rng)(p);
    sum += e;
    sum2 += e * e;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sum2 / n - mean * mean);
  // Five standard errors.
  CHECK(std::abs(mean - mean_ref) < 5.0 * std_ref / std::sqrt(n));
  CHECK(std::abs(sd - std_ref) / std_ref < 0.02);
}

TEST_CASE("model round-trips through its container") {
  const auto model = build_kl_model(UniformGrid{7, 5}, KernelSpec{0.8, 1.3}, 4, 0.9, 0.2);
  std::stringstream ss;
  model.save(ss);
  const auto back = RandomFieldModel::load(ss);
  CHECK(back.grid() == model.grid());
  CHECK(back.kernel().correlation_length == 0.8);
  CHECK(back.alpha() == 0.9);
  CHECK(back.beta() == 0.2);
  CHECK(back.eigenvalues() == model.eigenvalues());
  CHECK(back.eigenfunctions() == model.eigenfunctions());
  CHECK(back.trace() == model.trace());

  std::stringstream bad("not a model");
  CHECK_THROWS_AS(RandomFieldModel::load(bad), IoError);
}

}
