#include "pigan/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "pigan/parallel.hpp"

namespace pigan::stats {

void FieldEnsemble::validate() const {
  grid.validate();
  if (static_cast<std::size_t>(samples.cols()) != grid.size())
    throw ValidationError("ensemble width does not match its grid");
  if (!samples.allFinite()) throw NumericalError("ensemble contains non-finite values");
}

Eigen::VectorXd FieldEnsemble::values_at(Coord2 p) const {
  const auto st = grid.stencil(p);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(samples.rows());
  for (int k = 0; k < 4; ++k)
    if (st.weight[k] != 0.0) v += st.weight[k] * samples.col(static_cast<Eigen::Index>(st.index[k]));
  return v;
}

FieldEnsemble ensemble_from_generator(const nn::Generator& gen_E, const field::UniformGrid& grid,
                                      int n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw ValidationError("n_samples must be >= 1");
  if (gen_E.output_dim() != 1) throw ValidationError("modulus generator must have a scalar output");
  grid.validate();
  const auto pts = grid.points();
  const std::size_t np = pts.size();
  const int m = gen_E.noise_dim();

  FieldEnsemble ens{grid, Eigen::MatrixXd(n_samples, static_cast<Eigen::Index>(np))};
  const auto chunks = parallel::make_chunks(static_cast<std::size_t>(n_samples),
                                            std::max<std::size_t>(1, 4096 / np));
  parallel::for_each_index(chunks.size(), [&](std::size_t ci) {
    const auto ch = chunks[ci];
    std::vector<Coord2> xs;
    xs.reserve(ch.size() * np);
    Eigen::MatrixXd noise(m, static_cast<Eigen::Index>(ch.size() * np));
    for (std::size_t s = ch.begin; s < ch.end; ++s) {
      Rng rng = make_rng(seed, 0, s);
      std::normal_distribution<double> normal(0.0, 1.0);
      Eigen::VectorXd xi(m);
      for (auto& v : xi) v = normal(rng);
      for (std::size_t p = 0; p < np; ++p) {
        noise.col(static_cast<Eigen::Index>(xs.size())) = xi;
        xs.push_back(pts[p]);
      }
    }
    const auto pass = gen_E.evaluate(xs, noise, nn::JetLayout::value_only());
    const auto& out = pass->outputs();
    for (std::size_t s = ch.begin; s < ch.end; ++s)
      for (std::size_t p = 0; p < np; ++p)
        ens.samples(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(p)) =
            out(0, static_cast<Eigen::Index>((s - ch.begin) * np + p));
  });
  return ens;
}

FieldEnsemble ensemble_from_field_model(const field::RandomFieldModel& model,
                                        const field::UniformGrid& grid, int n_samples,
                                        std::uint64_t seed) {
  if (n_samples < 1) throw ValidationError("n_samples must be >= 1");
  grid.validate();
  const auto pts = grid.points();
  FieldEnsemble ens{grid, Eigen::MatrixXd(n_samples, static_cast<Eigen::Index>(pts.size()))};
  parallel::for_each_index(static_cast<std::size_t>(n_samples), [&](std::size_t s) {
    Rng rng = make_rng(seed, 0, s);
    const auto sample = field::sample_field(model, rng);
    for (std::size_t p = 0; p < pts.size(); ++p)
      ens.samples(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(p)) = sample(pts[p]);
  });
  return ens;
}

MomentFields moment_fields(const FieldEnsemble& ens) {
  const auto n = ens.samples.rows();
  if (n < 2) throw ValidationError("standard deviation needs at least two samples");
  MomentFields out;
  out.mean.resize(ens.samples.cols());
  out.std.resize(ens.samples.cols());
  // Shifted by the first sample so that identical samples give exactly zero spread.
  for (Eigen::Index p = 0; p < ens.samples.cols(); ++p) {
    const Eigen::ArrayXd d = ens.samples.col(p).array() - ens.samples(0, p);
    const double md = d.mean();
    out.mean(p) = ens.samples(0, p) + md;
    out.std(p) = std::sqrt((d - md).square().sum() / static_cast<double>(n - 1));
  }
  return out;
}

MomentFields analytic_moments(const field::RandomFieldModel& model,
                              const field::UniformGrid& grid) {
  const auto pts = grid.points();
  MomentFields out{Eigen::VectorXd(static_cast<Eigen::Index>(pts.size())),
                   Eigen::VectorXd(static_cast<Eigen::Index>(pts.size()))};
  for (std::size_t p = 0; p < pts.size(); ++p) {
    out.mean(static_cast<Eigen::Index>(p)) = model.modulus_mean(pts[p]);
    out.std(static_cast<Eigen::Index>(p)) = model.modulus_std(pts[p]);
  }
  return out;
}

double l2_norm(const Eigen::VectorXd& f, const field::UniformGrid& grid) {
  grid.validate();
  if (grid.nx < 2 || grid.ny < 2) throw ValidationError("L2 integration needs at least 2x2 nodes");
  if (static_cast<std::size_t>(f.size()) != grid.size())
    throw ValidationError("field size does not match the grid");
  const double hx = (grid.x_hi - grid.x_lo) / (grid.nx - 1);
  const double hy = (grid.y_hi - grid.y_lo) / (grid.ny - 1);
  double sum = 0.0;
  for (int j = 0; j < grid.ny; ++j) {
    const double wy = (j == 0 || j == grid.ny - 1) ? 0.5 * hy : hy;
    for (int i = 0; i < grid.nx; ++i) {
      const double wx = (i == 0 || i == grid.nx - 1) ? 0.5 * hx : hx;
      const double v = f(static_cast<Eigen::Index>(grid.index(i, j)));
      sum += wx * wy * v * v;
    }
  }
  return std::sqrt(sum);
}

double relative_l2_error(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference,
                         const field::UniformGrid& grid) {
  if (estimate.size() != reference.size())
    throw ValidationError("fields must live on the same grid");
  const double denom = l2_norm(reference, grid);
  if (!(denom > 0.0)) throw NumericalError("reference field has zero L2 norm");
  return l2_norm(estimate - reference, grid) / denom;
}

double silverman_bandwidth(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) throw ValidationError("bandwidth needs at least one sample");
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, n - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  };
  const double iqr = (quantile(0.75) - quantile(0.25)) / 1.34;

  double spread = std::min(sd, iqr);
  if (!(spread > 0.0)) spread = std::max(sd, iqr);
  const double factor = 0.9 * std::pow(static_cast<double>(n), -0.2);
  if (!(spread > 0.0)) return 1e-3 * (1.0 + std::abs(mean));
  return factor * spread;
}

DensityCurve kde(std::span<const double> values, std::span<const double> abscissa,
                 double bandwidth) {
  if (values.empty()) throw ValidationError("density estimate needs samples");
  DensityCurve out;
  out.n_samples = values.size();
  out.low_sample_warning = values.size() < kMinDensitySamples;
  out.bandwidth = bandwidth > 0.0 ? bandwidth : silverman_bandwidth(values);
  out.x.assign(abscissa.begin(), abscissa.end());
  out.density.resize(out.x.size());
  const double h = out.bandwidth;
  const double norm = 1.0 / (static_cast<double>(values.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t k = 0; k < out.x.size(); ++k) {
    double s = 0.0;
    for (double v : values) {
      const double z = (out.x[k] - v) / h;
      s += std::exp(-0.5 * z * z);
    }
    out.density[k] = s * norm;
  }
  return out;
}

DensityCurve histogram(std::span<const double> values, int bins, double lo, double hi) {
  if (values.empty()) throw ValidationError("histogram needs samples");
  if (bins < 1 || !(hi > lo)) throw ValidationError("histogram needs bins >= 1 and hi > lo");
  DensityCurve out;
  out.n_samples = values.size();
  out.low_sample_warning = values.size() < kMinDensitySamples;
  out.bandwidth = (hi - lo) / bins;
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  for (double v : values) {
    if (v < lo || v > hi) continue;
    const int b = std::min(bins - 1, static_cast<int>((v - lo) / out.bandwidth));
    counts[static_cast<std::size_t>(b)] += 1.0;
  }
  const double scale = 1.0 / (static_cast<double>(values.size()) * out.bandwidth);
  for (int b = 0; b < bins; ++b) {
    out.x.push_back(lo + (b + 0.5) * out.bandwidth);
    out.density.push_back(counts[static_cast<std::size_t>(b)] * scale);
  }
  return out;
}

std::vector<double> density_abscissa(std::span<const double> values, int n) {
  if (values.empty()) throw ValidationError("abscissa needs samples");
  if (n < 2) throw ValidationError("abscissa needs at least two points");
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const double h = silverman_bandwidth(values);
  const double lo = *mn - 4.0 * h;
  const double hi = *mx + 4.0 * h;
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) x[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (n - 1);
  return x;
}

DensityCurve pointwise_pdf(const FieldEnsemble& ens, Coord2 point, const PdfOptions& opt) {
  const Eigen::VectorXd v = ens.values_at(point);
  const std::span<const double> values(v.data(), static_cast<std::size_t>(v.size()));
  if (opt.method == DensityMethod::histogram) {
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    const double pad = *mx > *mn ? 1e-9 * (*mx - *mn) : 1e-3 * (1.0 + std::abs(*mn));
    return histogram(values, opt.points, *mn - pad, *mx + pad);
  }
  const double h = opt.bandwidth > 0.0 ? opt.bandwidth : silverman_bandwidth(values);
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  std::vector<double> x(static_cast<std::size_t>(std::max(opt.points, 2)));
  const double lo = *mn - 4.0 * h;
  const double hi = *mx + 4.0 * h;
  for (std::size_t k = 0; k < x.size(); ++k)
    x[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(x.size() - 1);
  return kde(values, x, h);
}

double shifted_lognormal_density(double e, double alpha, double beta, double sigma2) {
  if (!(beta > 0.0) || !(sigma2 > 0.0)) throw ValidationError("beta and variance must be positive");
  if (e <= alpha) return 0.0;
  const double y = (e - alpha) / beta;
  const double z = std::log(y);
  return std::exp(-0.5 * z * z / sigma2) / ((e - alpha) * std::sqrt(2.0 * std::numbers::pi * sigma2));
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2)
    throw ValidationError("correlation needs two equal-length samples of size >= 2");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ma += a[k] - a[0];
    mb += b[k] - b[0];
  }
  ma = a[0] + ma / n;
  mb = b[0] + mb / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double da = a[k] - ma;
    const double db = b[k] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) throw NumericalError("correlation undefined for zero variance");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

CorrelationCurve correlation_1d(const FieldEnsemble& ens, double x1_prime, double x2_bar) {
  std::size_t anchor = 0;
  if (!ens.grid.find_node({x1_prime, x2_bar}, anchor))
    throw ValidationError("correlation anchor must be a grid node");
  const int row = static_cast<int>(anchor / static_cast<std::size_t>(ens.grid.nx));
  CorrelationCurve out;
  out.anchor_x1 = x1_prime;
  out.x2_bar = x2_bar;
  const auto n = static_cast<std::size_t>(ens.samples.rows());
  const Eigen::VectorXd a = ens.samples.col(static_cast<Eigen::Index>(anchor));
  for (int i = 0; i < ens.grid.nx; ++i) {
    const std::size_t idx = ens.grid.index(i, row);
    out.x1.push_back(ens.grid.x_at(i));
    if (idx == anchor) {
      // Self-correlation is 1 by definition; the anchor still needs variance.
      pearson({a.data(), n}, {a.data(), n});
      out.correlation.push_back(1.0);
      continue;
    }
    const Eigen::VectorXd b = ens.samples.col(static_cast<Eigen::Index>(idx));
    out.correlation.push_back(pearson({a.data(), n}, {b.data(), n}));
  }
  return out;
}

double lognormal_correlation(double c, double s1, double s2) {
  if (!(s1 > 0.0) || !(s2 > 0.0)) throw ValidationError("variances must be positive");
  return std::expm1(c) / std::sqrt(std::expm1(s1) * std::expm1(s2));
}

std::vector<SweepCell> sweep_report(std::span<const SweepTrial> trials) {
  std::vector<SweepCell> cells;
  for (const auto& t : trials) {
    auto it = std::find_if(cells.begin(), cells.end(),
                           [&](const SweepCell& c) { return c.cell == t.cell; });
    if (it == cells.end()) {
      cells.push_back({t.cell, t.value, {}, {}, 0.0, 0.0});
      it = cells.end() - 1;
    }
    it->mean_errors.push_back(t.mean_error);
    it->std_errors.push_back(t.std_error);
  }
  for (auto& c : cells) {
    const double n = static_cast<double>(c.mean_errors.size());
    c.mean_error_avg = std::accumulate(c.mean_errors.begin(), c.mean_errors.end(), 0.0) / n;
    c.std_error_avg = std::accumulate(c.std_errors.begin(), c.std_errors.end(), 0.0) / n;
  }
  return cells;
}

std::vector<NamedPoint> default_query_points() {
  return {{"0.25_0.75", {0.25, 0.75}}, {"0.5_0.5", {0.5, 0.5}}, {"0.75_0.25", {0.75, 0.25}}};
}

std::vector<Section> default_sections() {
  return {{"A-A", 0.5, 0.75}, {"B-B", 0.5, 0.5}, {"C-C", 0.5, 0.25}};
}

}  // namespace pigan::stats
