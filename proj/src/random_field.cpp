#include "pigan/random_field.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "pigan/binary_io.hpp"

namespace pigan::field {

void KernelSpec::validate() const {
  if (!(correlation_length > 0.0) || !std::isfinite(correlation_length))
    throw ValidationError("correlation length must be positive");
  if (!(variance > 0.0) || !std::isfinite(variance))
    throw ValidationError("kernel variance must be positive");
}

double kernel_eval(Coord2 x, Coord2 x_prime, const KernelSpec& spec) {
  const double d1 = x.x1 - x_prime.x1;
  const double d2 = x.x2 - x_prime.x2;
  const double l = spec.correlation_length;
  return spec.variance * std::exp(-(d1 * d1 + d2 * d2) / (2.0 * l * l));
}

void UniformGrid::validate() const {
  if (nx < 1 || ny < 1) throw ValidationError("grid needs at least one node per axis");
  if (!(x_hi >= x_lo) || !(y_hi >= y_lo)) throw ValidationError("grid bounds inverted");
}

double UniformGrid::x_at(int i) const {
  return nx == 1 ? x_lo : x_lo + (x_hi - x_lo) * i / (nx - 1);
}

double UniformGrid::y_at(int j) const {
  return ny == 1 ? y_lo : y_lo + (y_hi - y_lo) * j / (ny - 1);
}

std::vector<Coord2> UniformGrid::points() const {
  std::vector<Coord2> pts;
  pts.reserve(size());
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) pts.push_back(point(i, j));
  return pts;
}

namespace {

// Cell index and fractional offset along one axis.
void locate(double v, double lo, double hi, int n, int& cell, double& frac) {
  if (n == 1 || hi == lo) {
    cell = 0;
    frac = 0.0;
    return;
  }
  double t = (v - lo) / (hi - lo) * (n - 1);
  t = std::clamp(t, 0.0, static_cast<double>(n - 1));
  cell = std::min(static_cast<int>(std::floor(t)), n - 2);
  frac = t - cell;
}

}  // namespace

UniformGrid::Stencil UniformGrid::stencil(Coord2 p) const {
  int ci, cj;
  double fx, fy;
  locate(p.x1, x_lo, x_hi, nx, ci, fx);
  locate(p.x2, y_lo, y_hi, ny, cj, fy);
  const int ci1 = nx == 1 ? ci : ci + 1;
  const int cj1 = ny == 1 ? cj : cj + 1;
  Stencil s{};
  s.index[0] = index(ci, cj);
  s.index[1] = index(ci1, cj);
  s.index[2] = index(ci, cj1);
  s.index[3] = index(ci1, cj1);
  s.weight[0] = (1 - fx) * (1 - fy);
  s.weight[1] = fx * (1 - fy);
  s.weight[2] = (1 - fx) * fy;
  s.weight[3] = fx * fy;
  return s;
}

bool UniformGrid::find_node(Coord2 p, std::size_t& flat, double tol) const {
  auto axis = [tol](double v, double lo, double hi, int n, int& k) {
    if (n == 1) {
      k = 0;
      return std::abs(v - lo) <= tol;
    }
    const double t = (v - lo) / (hi - lo) * (n - 1);
    k = static_cast<int>(std::lround(t));
    return k >= 0 && k < n && std::abs(t - k) <= tol * (n - 1);
  };
  int i, j;
  if (!axis(p.x1, x_lo, x_hi, nx, i) || !axis(p.x2, y_lo, y_hi, ny, j)) return false;
  flat = index(i, j);
  return true;
}

RandomFieldModel::RandomFieldModel(UniformGrid grid, KernelSpec kernel,
                                   double alpha, double beta,
                                   Eigen::VectorXd eigenvalues,
                                   Eigen::MatrixXd eigenfunctions, double trace)
    : grid_(grid),
      kernel_(kernel),
      alpha_(alpha),
      beta_(beta),
      eigenvalues_(std::move(eigenvalues)),
      eigenfunctions_(std::move(eigenfunctions)),
      trace_(trace) {}

double RandomFieldModel::captured_variance_ratio() const {
  return trace_ > 0.0 ? eigenvalues_.sum() / trace_ : 0.0;
}

Eigen::VectorXd RandomFieldModel::eigenfunctions_at(Coord2 x) const {
  const auto s = grid_.stencil(x);
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(n_terms());
  for (int c = 0; c < 4; ++c)
    if (s.weight[c] != 0.0) phi += s.weight[c] * eigenfunctions_.row(s.index[c]).transpose();
  return phi;
}

double RandomFieldModel::latent_covariance(Coord2 x, Coord2 x_prime) const {
  const Eigen::VectorXd a = eigenfunctions_at(x);
  const Eigen::VectorXd b = eigenfunctions_at(x_prime);
  return (a.array() * b.array() * eigenvalues_.array()).sum();
}

double RandomFieldModel::modulus_mean(Coord2 x) const {
  return alpha_ + beta_ * std::exp(0.5 * latent_variance(x));
}

double RandomFieldModel::modulus_std(Coord2 x) const {
  const double s2 = latent_variance(x);
  return beta_ * std::sqrt(std::expm1(s2) * std::exp(s2));
}

namespace {
constexpr char kKlMagic[9] = "PIGANKL1";
}

// Layout: magic, u32 version, i32 nx, ny, f64 x_lo x_hi y_lo y_hi,
// f64 correlation_length variance alpha beta trace, i32 n_terms,
// f64 eigenvalues[n_terms], f64 eigenfunctions[n_points * n_terms]
// (column-major: all nodes of term 0 first).
void RandomFieldModel::save(std::ostream& os) const {
  io::write_magic(os, kKlMagic);
  io::write_pod<std::uint32_t>(os, 1);
  io::write_pod<std::int32_t>(os, grid_.nx);
  io::write_pod<std::int32_t>(os, grid_.ny);
  for (double v : {grid_.x_lo, grid_.x_hi, grid_.y_lo, grid_.y_hi}) io::write_pod(os, v);
  for (double v : {kernel_.correlation_length, kernel_.variance, alpha_, beta_, trace_})
    io::write_pod(os, v);
  io::write_pod<std::int32_t>(os, n_terms());
  io::write_doubles(os, eigenvalues_.data(), eigenvalues_.size());
  io::write_doubles(os, eigenfunctions_.data(), eigenfunctions_.size());
  if (!os) throw IoError("failed writing KL model");
}

RandomFieldModel RandomFieldModel::load(std::istream& is) {
  io::expect_magic(is, kKlMagic, "KL model");
  if (io::read_pod<std::uint32_t>(is) != 1) throw IoError("unsupported KL model version");
  UniformGrid grid;
  grid.nx = io::read_pod<std::int32_t>(is);
  grid.ny = io::read_pod<std::int32_t>(is);
  grid.x_lo = io::read_pod<double>(is);
  grid.x_hi = io::read_pod<double>(is);
  grid.y_lo = io::read_pod<double>(is);
  grid.y_hi = io::read_pod<double>(is);
  grid.validate();
  KernelSpec kernel;
  kernel.correlation_length = io::read_pod<double>(is);
  kernel.variance = io::read_pod<double>(is);
  const double alpha = io::read_pod<double>(is);
  const double beta = io::read_pod<double>(is);
  const double trace = io::read_pod<double>(is);
  const int n = io::read_pod<std::int32_t>(is);
  if (n < 1 || static_cast<std::size_t>(n) > grid.size()) throw IoError("corrupt KL term count");
  Eigen::VectorXd ev(n);
  Eigen::MatrixXd ef(grid.size(), n);
  io::read_doubles(is, ev.data(), ev.size());
  io::read_doubles(is, ef.data(), ef.size());
  return RandomFieldModel(grid, kernel, alpha, beta, std::move(ev), std::move(ef), trace);
}

RandomFieldModel build_kl_model(const UniformGrid& grid, const KernelSpec& spec,
                                int n_terms, double alpha, double beta) {
  grid.validate();
  spec.validate();
  const auto n = static_cast<Eigen::Index>(grid.size());
  if (n_terms < 1 || n_terms > n)
    throw ValidationError("n_terms must lie in [1, number of grid points]");
  if (!(beta > 0.0)) throw ValidationError("beta must be positive");

  const auto pts = grid.points();
  const double w = 1.0 / static_cast<double>(n);
  // With uniform weights the symmetric form W^1/2 K W^1/2 is just w * K.
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j)
      a(i, j) = a(j, i) = w * kernel_eval(pts[i], pts[j], spec);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  if (solver.info() != Eigen::Success)
    throw NumericalError("KL eigensolver failed to converge");

  // Eigen returns ascending order.
  Eigen::VectorXd values(n_terms);
  Eigen::MatrixXd functions(n, n_terms);
  const double inv_sqrt_w = 1.0 / std::sqrt(w);
  for (int k = 0; k < n_terms; ++k) {
    const Eigen::Index src = n - 1 - k;
    values(k) = std::max(0.0, solver.eigenvalues()(src));
    Eigen::VectorXd phi = solver.eigenvectors().col(src) * inv_sqrt_w;
    Eigen::Index imax;
    phi.cwiseAbs().maxCoeff(&imax);
    if (phi(imax) < 0.0) phi = -phi;
    functions.col(k) = phi;
  }
  const double trace = solver.eigenvalues().cwiseMax(0.0).sum();
  return RandomFieldModel(grid, spec, alpha, beta, std::move(values),
                          std::move(functions), trace);
}

FieldSample::FieldSample(const RandomFieldModel& model,
                         std::vector<double> coefficients)
    : grid_(model.grid()),
      alpha_(model.alpha()),
      beta_(model.beta()),
      coefficients_(std::move(coefficients)) {
  if (coefficients_.size() != static_cast<std::size_t>(model.n_terms()))
    throw ValidationError("KL coefficient count does not match the model");
  Eigen::VectorXd scaled(model.n_terms());
  for (int k = 0; k < model.n_terms(); ++k)
    scaled(k) = std::sqrt(model.eigenvalues()(k)) * coefficients_[k];
  const Eigen::VectorXd g = model.eigenfunctions() * scaled;
  latent_nodes_.assign(g.data(), g.data() + g.size());
}

double FieldSample::latent(Coord2 x) const {
  const auto s = grid_.stencil(x);
  double g = 0.0;
  for (int c = 0; c < 4; ++c) g += s.weight[c] * latent_nodes_[s.index[c]];
  return g;
}

double FieldSample::operator()(Coord2 x) const {
  return alpha_ + beta_ * std::exp(latent(x));
}

FieldSample sample_field(const RandomFieldModel& model, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> xi(model.n_terms());
  for (auto& v : xi) v = normal(rng);
  return FieldSample(model, std::move(xi));
}

}  // namespace pigan::field
