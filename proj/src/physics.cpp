#include "pigan/physics.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

#include "pigan/parallel.hpp"

namespace pigan::physics {

namespace {
constexpr std::size_t kPairChunk = 64;
}

void ElasticityConstants::validate() const {
  if (!(nu > 0.0 && nu < 0.5)) throw ValidationError("Poisson ratio must lie in (0, 0.5)");
}

Vec2 pde_residual(const Jet2& u1, const Jet2& u2, const Jet2& E,
                  const ElasticityConstants& c) {
  const double nu = c.nu;
  const double h = 0.5 * (1.0 - nu);
  const double shear = u1.d1[1] + u2.d1[0];
  const double r1 = h * (E.d1[1] * shear + E.value * (u1.d22() + u2.d12())) +
                    E.d1[0] * (u1.d1[0] + nu * u2.d1[1]) +
                    E.value * (u1.d11() + nu * u2.d12());
  const double r2 = h * (E.d1[0] * shear + E.value * (u1.d12() + u2.d11())) +
                    E.d1[1] * (nu * u1.d1[0] + u2.d1[1]) +
                    E.value * (nu * u1.d12() + u2.d22());
  return {r1, r2};
}

JetAdjoint pde_residual_adjoint(const Jet2& u1, const Jet2& u2, const Jet2& E,
                                const ElasticityConstants& c, Vec2 g) {
  const double nu = c.nu;
  const double h = 0.5 * (1.0 - nu);
  const double shear = u1.d1[1] + u2.d1[0];
  JetAdjoint a;
  a.E.value = g[0] * (h * (u1.d22() + u2.d12()) + u1.d11() + nu * u2.d12()) +
              g[1] * (h * (u1.d12() + u2.d11()) + nu * u1.d12() + u2.d22());
  a.E.d1[0] = g[0] * (u1.d1[0] + nu * u2.d1[1]) + g[1] * h * shear;
  a.E.d1[1] = g[0] * h * shear + g[1] * (nu * u1.d1[0] + u2.d1[1]);

  const double g_shear = h * (g[0] * E.d1[1] + g[1] * E.d1[0]);
  a.u1.d1[0] = g[0] * E.d1[0] + g[1] * nu * E.d1[1];
  a.u1.d1[1] = g_shear;
  a.u2.d1[0] = g_shear;
  a.u2.d1[1] = g[0] * nu * E.d1[0] + g[1] * E.d1[1];

  a.u1.d2[0] = g[0] * E.value;
  a.u1.d2[1] = g[1] * (h + nu) * E.value;
  a.u1.d2[2] = g[0] * h * E.value;
  a.u2.d2[0] = g[1] * h * E.value;
  a.u2.d2[1] = g[0] * (h + nu) * E.value;
  a.u2.d2[2] = g[1] * E.value;
  return a;
}

std::string_view boundary_name(Boundary b) {
  switch (b) {
    case Boundary::left: return "left";
    case Boundary::corner: return "corner";
    case Boundary::right: return "right";
    case Boundary::top: return "top";
    case Boundary::bottom: return "bottom";
  }
  throw ValidationError("unknown boundary tag");
}

Boundary parse_boundary(std::string_view name) {
  for (Boundary b : {Boundary::left, Boundary::corner, Boundary::right, Boundary::top, Boundary::bottom})
    if (boundary_name(b) == name) return b;
  throw ValidationError("unknown boundary tag '" + std::string(name) + "'");
}

bool on_boundary(Coord2 p, Boundary b, double tol) {
  const bool in_x = p.x1 >= -tol && p.x1 <= 1 + tol;
  const bool in_y = p.x2 >= -tol && p.x2 <= 1 + tol;
  switch (b) {
    case Boundary::left: return std::abs(p.x1) <= tol && in_y;
    case Boundary::corner: return std::abs(p.x1) <= tol && std::abs(p.x2) <= tol;
    case Boundary::right: return std::abs(p.x1 - 1) <= tol && in_y;
    case Boundary::top: return std::abs(p.x2 - 1) <= tol && in_x;
    case Boundary::bottom: return std::abs(p.x2) <= tol && in_x;
  }
  throw ValidationError("unknown boundary tag");
}

int discrepancy_count(Boundary b) {
  switch (b) {
    case Boundary::left:
    case Boundary::corner: return 1;
    case Boundary::right:
    case Boundary::top:
    case Boundary::bottom: return 2;
  }
  throw ValidationError("unknown boundary tag");
}

namespace {

struct Stress {
  double s11, s22, s12;
};

Stress stress(const Jet2& u1, const Jet2& u2, const Jet2& E, double nu) {
  const double k1 = E.value / (1.0 - nu * nu);
  const double k2 = E.value / (2.0 * (1.0 + nu));
  return {k1 * (u1.d1[0] + nu * u2.d1[1]), k1 * (nu * u1.d1[0] + u2.d1[1]),
          k2 * (u1.d1[1] + u2.d1[0])};
}

}  // namespace

std::vector<double> bc_discrepancies(const Jet2& u1, const Jet2& u2, const Jet2& E,
                                     Coord2 point, Boundary which,
                                     const ElasticityConstants& c,
                                     const fem::BoundaryLoad& load) {
  if (!on_boundary(point, which, 1e-9))
    throw ValidationError("point does not lie on the " + std::string(boundary_name(which)) +
                          " boundary");
  const Stress s = stress(u1, u2, E, c.nu);
  switch (which) {
    case Boundary::left: return {u1.value};
    case Boundary::corner: return {u2.value};
    case Boundary::right:
      return {s.s11 - load.traction_right[0], s.s12 - load.traction_right[1]};
    case Boundary::top:
      return {s.s22 - load.traction_top[1], s.s12 - load.traction_top[0]};
    case Boundary::bottom:
      return {s.s22 + load.traction_bottom[1], s.s12 + load.traction_bottom[0]};
  }
  throw ValidationError("unknown boundary tag");
}

JetAdjoint bc_discrepancy_adjoint(const Jet2& u1, const Jet2& u2, const Jet2& E,
                                  Boundary which, const ElasticityConstants& c,
                                  std::span<const double> g) {
  const double nu = c.nu;
  const double k1 = 1.0 / (1.0 - nu * nu);
  const double k2 = 1.0 / (2.0 * (1.0 + nu));
  JetAdjoint a;
  auto add_s11 = [&](double w) {
    a.E.value += w * k1 * (u1.d1[0] + nu * u2.d1[1]);
    a.u1.d1[0] += w * k1 * E.value;
    a.u2.d1[1] += w * k1 * nu * E.value;
  };
  auto add_s22 = [&](double w) {
    a.E.value += w * k1 * (nu * u1.d1[0] + u2.d1[1]);
    a.u1.d1[0] += w * k1 * nu * E.value;
    a.u2.d1[1] += w * k1 * E.value;
  };
  auto add_s12 = [&](double w) {
    a.E.value += w * k2 * (u1.d1[1] + u2.d1[0]);
    a.u1.d1[1] += w * k2 * E.value;
    a.u2.d1[0] += w * k2 * E.value;
  };
  switch (which) {
    case Boundary::left: a.u1.value = g[0]; break;
    case Boundary::corner: a.u2.value = g[0]; break;
    case Boundary::right: add_s11(g[0]); add_s12(g[1]); break;
    case Boundary::top:
    case Boundary::bottom: add_s22(g[0]); add_s12(g[1]); break;
    default: throw ValidationError("unknown boundary tag");
  }
  return a;
}

void CollocationSet::validate() const {
  for (const auto& p : interior)
    if (p.x1 < 0 || p.x1 > 1 || p.x2 < 0 || p.x2 > 1)
      throw ValidationError("interior collocation point outside the domain");
  for (const auto& set : boundaries)
    for (const auto& p : set.points)
      if (!on_boundary(p, set.which, 1e-9))
        throw ValidationError("collocation point off its declared " +
                              std::string(boundary_name(set.which)) + " boundary");
}

std::string GridSpec::to_string() const {
  return "grid:" + std::to_string(nx) + "x" + std::to_string(ny);
}

GridSpec parse_grid_spec(std::string_view text) {
  const std::string_view prefix = "grid:";
  auto fail = [&] {
    return ValidationError("bad grid spec '" + std::string(text) + "', expected grid:AxB");
  };
  if (text.substr(0, prefix.size()) != prefix) throw fail();
  text.remove_prefix(prefix.size());
  const auto x = text.find('x');
  if (x == std::string_view::npos) throw fail();
  GridSpec g;
  const auto a = text.substr(0, x);
  const auto b = text.substr(x + 1);
  if (std::from_chars(a.data(), a.data() + a.size(), g.nx).ptr != a.data() + a.size() ||
      std::from_chars(b.data(), b.data() + b.size(), g.ny).ptr != b.data() + b.size() ||
      a.empty() || b.empty())
    throw fail();
  if (g.nx < 1 || g.ny < 1) throw fail();
  return g;
}

std::vector<Coord2> grid_points(const GridSpec& g) {
  std::vector<Coord2> pts;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      pts.push_back({g.nx == 1 ? 0.5 : static_cast<double>(i) / (g.nx - 1),
                     g.ny == 1 ? 0.5 : static_cast<double>(j) / (g.ny - 1)});
  return pts;
}

CollocationSet make_collocation(const GridSpec& interior, int per_boundary) {
  if (per_boundary < 1) throw ValidationError("need at least one point per boundary");
  CollocationSet c;
  c.interior = grid_points(interior);
  auto line = [per_boundary](int k) {
    return per_boundary == 1 ? 0.5 : static_cast<double>(k) / (per_boundary - 1);
  };
  BoundarySet left{Boundary::left, {}}, right{Boundary::right, {}};
  BoundarySet top{Boundary::top, {}}, bottom{Boundary::bottom, {}};
  for (int k = 0; k < per_boundary; ++k) {
    left.points.push_back({0.0, line(k)});
    right.points.push_back({1.0, line(k)});
    top.points.push_back({line(k), 1.0});
    bottom.points.push_back({line(k), 0.0});
  }
  c.boundaries = {left, BoundarySet{Boundary::corner, {{0.0, 0.0}}}, right, top, bottom};
  return c;
}

namespace {

void write_jet(Eigen::MatrixXd& m, int row, Eigen::Index col, const Jet2& j, nn::JetLayout l) {
  m(row, col) = j.value;
  for (int d = 0; d < l.directions; ++d) m(row, col + 1 + d) = j.d1[d];
  if (l.second)
    for (int h = 0; h < 3; ++h) m(row, col + 3 + h) = j.d2[h];
}

struct ChunkResult {
  double value = 0.0;
  std::vector<double> grad_u, grad_E;
};

// Evaluates `points` x noise-columns in fixed chunks. `per_sample` receives
// the jets of one (point, noise) pair and returns its loss contribution after
// writing its jet adjoints.
template <class PerSample>
PhysicsLoss reduce_pairs(const nn::Generator& gen_u, const nn::Generator& gen_E,
                         std::span<const Coord2> points, const Eigen::MatrixXd& noise,
                         nn::JetLayout layout_u, nn::JetLayout layout_E,
                         bool with_gradient, PerSample&& per_sample) {
  const std::size_t nx = points.size();
  const std::size_t n_pairs = nx * static_cast<std::size_t>(noise.cols());
  const auto chunks = parallel::make_chunks(n_pairs, kPairChunk);
  std::vector<ChunkResult> partial(chunks.size());

  parallel::for_each_index(chunks.size(), [&](std::size_t ci) {
    const auto ch = chunks[ci];
    std::vector<Coord2> xs(ch.size());
    Eigen::MatrixXd nz(noise.rows(), static_cast<Eigen::Index>(ch.size()));
    std::vector<std::size_t> point_index(ch.size());
    for (std::size_t p = ch.begin; p < ch.end; ++p) {
      const std::size_t b = p - ch.begin;
      point_index[b] = p % nx;
      xs[b] = points[p % nx];
      nz.col(static_cast<Eigen::Index>(b)) = noise.col(static_cast<Eigen::Index>(p / nx));
    }
    const auto pu = gen_u.evaluate(xs, nz, layout_u);
    const auto pe = gen_E.evaluate(xs, nz, layout_E);
    Eigen::MatrixXd adj_u = Eigen::MatrixXd::Zero(pu->outputs().rows(), pu->outputs().cols());
    Eigen::MatrixXd adj_e = Eigen::MatrixXd::Zero(pe->outputs().rows(), pe->outputs().cols());
    ChunkResult& out = partial[ci];
    for (std::size_t b = 0; b < ch.size(); ++b) {
      JetAdjoint a;
      out.value += per_sample(point_index[b], pu->jet(b, 0), pu->jet(b, 1), pe->jet(b, 0), a);
      if (!with_gradient) continue;
      write_jet(adj_u, 0, static_cast<Eigen::Index>(b) * layout_u.channels(), a.u1, layout_u);
      write_jet(adj_u, 1, static_cast<Eigen::Index>(b) * layout_u.channels(), a.u2, layout_u);
      write_jet(adj_e, 0, static_cast<Eigen::Index>(b) * layout_E.channels(), a.E, layout_E);
    }
    if (with_gradient) {
      out.grad_u.assign(gen_u.parameter_count(), 0.0);
      out.grad_E.assign(gen_E.parameter_count(), 0.0);
      pu->backward(adj_u, out.grad_u);
      pe->backward(adj_e, out.grad_E);
    }
  });

  PhysicsLoss loss;
  if (with_gradient) {
    loss.grad_u.assign(gen_u.parameter_count(), 0.0);
    loss.grad_E.assign(gen_E.parameter_count(), 0.0);
  }
  for (const auto& p : partial) {
    loss.value += p.value;
    for (std::size_t k = 0; k < p.grad_u.size(); ++k) loss.grad_u[k] += p.grad_u[k];
    for (std::size_t k = 0; k < p.grad_E.size(); ++k) loss.grad_E[k] += p.grad_E[k];
  }
  return loss;
}

void check_generators(const nn::Generator& gen_u, const nn::Generator& gen_E,
                      const Eigen::MatrixXd& noise) {
  if (gen_u.output_dim() != 2) throw ValidationError("displacement generator must output 2 components");
  if (gen_E.output_dim() != 1) throw ValidationError("modulus generator must output 1 component");
  if (noise.cols() < 1) throw ValidationError("need at least one noise sample");
}

}  // namespace

PhysicsLoss loss_pde(const nn::Generator& gen_u, const nn::Generator& gen_E,
                     const CollocationSet& colloc, const Eigen::MatrixXd& noise,
                     const ElasticityConstants& c, bool with_gradient) {
  check_generators(gen_u, gen_E, noise);
  if (colloc.interior.empty()) throw ValidationError("no interior collocation points");
  const double scale =
      1.0 / (static_cast<double>(noise.cols()) * static_cast<double>(colloc.interior.size()));
  return reduce_pairs(
      gen_u, gen_E, colloc.interior, noise, nn::JetLayout::second_order(),
      nn::JetLayout::first(2), with_gradient,
      [&](std::size_t i, const Jet2& u1, const Jet2& u2, const Jet2& E, JetAdjoint& a) {
        Vec2 r = pde_residual(u1, u2, E, c);
        if (colloc.forcing) {
          const Vec2 f = colloc.forcing(colloc.interior[i]);
          r[0] -= f[0];
          r[1] -= f[1];
        }
        if (with_gradient) a = pde_residual_adjoint(u1, u2, E, c, {2 * scale * r[0], 2 * scale * r[1]});
        return scale * (r[0] * r[0] + r[1] * r[1]);
      });
}

PhysicsLoss loss_bc(const nn::Generator& gen_u, const nn::Generator& gen_E,
                    const CollocationSet& colloc, const Eigen::MatrixXd& noise,
                    const ElasticityConstants& c, const fem::BoundaryLoad& load,
                    bool with_gradient) {
  check_generators(gen_u, gen_E, noise);
  colloc.validate();
  PhysicsLoss total;
  if (with_gradient) {
    total.grad_u.assign(gen_u.parameter_count(), 0.0);
    total.grad_E.assign(gen_E.parameter_count(), 0.0);
  }
  for (const auto& set : colloc.boundaries) {
    if (set.points.empty()) continue;
    const double scale =
        1.0 / (static_cast<double>(noise.cols()) * static_cast<double>(set.points.size()));
    const auto part = reduce_pairs(
        gen_u, gen_E, set.points, noise, nn::JetLayout::first(2),
        nn::JetLayout::value_only(), with_gradient,
        [&](std::size_t i, const Jet2& u1, const Jet2& u2, const Jet2& E, JetAdjoint& a) {
          const auto d = bc_discrepancies(u1, u2, E, set.points[i], set.which, c, load);
          double sq = 0.0;
          std::array<double, 2> g{};
          for (std::size_t k = 0; k < d.size(); ++k) {
            sq += d[k] * d[k];
            g[k] = 2 * scale * d[k];
          }
          if (with_gradient)
            a = bc_discrepancy_adjoint(u1, u2, E, set.which, c, std::span<const double>(g.data(), d.size()));
          return scale * sq;
        });
    total.value += part.value;
    for (std::size_t k = 0; k < part.grad_u.size(); ++k) total.grad_u[k] += part.grad_u[k];
    for (std::size_t k = 0; k < part.grad_E.size(); ++k) total.grad_E[k] += part.grad_E[k];
  }
  return total;
}

ResidualBatch evaluate_residuals(const nn::Generator& gen_u, const nn::Generator& gen_E,
                                 const CollocationSet& colloc,
                                 const Eigen::MatrixXd& noise_r,
                                 const Eigen::MatrixXd& noise_b,
                                 const ElasticityConstants& c,
                                 const fem::BoundaryLoad& load) {
  ResidualBatch out;
  auto pairs = [](std::span<const Coord2> pts, const Eigen::MatrixXd& noise) {
    std::vector<Coord2> xs;
    Eigen::MatrixXd nz(noise.rows(), static_cast<Eigen::Index>(pts.size()) * noise.cols());
    for (Eigen::Index j = 0; j < noise.cols(); ++j)
      for (std::size_t i = 0; i < pts.size(); ++i) {
        nz.col(j * static_cast<Eigen::Index>(pts.size()) + static_cast<Eigen::Index>(i)) = noise.col(j);
        xs.push_back(pts[i]);
      }
    return std::make_pair(xs, nz);
  };
  {
    const auto [xs, nz] = pairs(colloc.interior, noise_r);
    const auto pu = gen_u.evaluate(xs, nz, nn::JetLayout::second_order());
    const auto pe = gen_E.evaluate(xs, nz, nn::JetLayout::first(2));
    out.interior.resize(2, static_cast<Eigen::Index>(xs.size()));
    for (std::size_t b = 0; b < xs.size(); ++b) {
      Vec2 r = pde_residual(pu->jet(b, 0), pu->jet(b, 1), pe->jet(b, 0), c);
      if (colloc.forcing) {
        const Vec2 f = colloc.forcing(xs[b]);
        r[0] -= f[0];
        r[1] -= f[1];
      }
      out.interior(0, static_cast<Eigen::Index>(b)) = r[0];
      out.interior(1, static_cast<Eigen::Index>(b)) = r[1];
    }
  }
  for (const auto& set : colloc.boundaries) {
    const auto [xs, nz] = pairs(set.points, noise_b);
    const auto pu = gen_u.evaluate(xs, nz, nn::JetLayout::first(2));
    const auto pe = gen_E.evaluate(xs, nz, nn::JetLayout::value_only());
    Eigen::MatrixXd m(discrepancy_count(set.which), static_cast<Eigen::Index>(xs.size()));
    for (std::size_t b = 0; b < xs.size(); ++b) {
      const auto d = bc_discrepancies(pu->jet(b, 0), pu->jet(b, 1), pe->jet(b, 0), xs[b],
                                      set.which, c, load);
      for (std::size_t k = 0; k < d.size(); ++k) m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(b)) = d[k];
    }
    out.boundary.push_back(std::move(m));
  }
  return out;
}

}  // namespace pigan::physics
