#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pigan/common.hpp"
#include "pigan/nn/generator.hpp"
#include "pigan/random_field.hpp"

namespace pigan::stats {

/// Field realizations on a grid: samples(s, p) is sample s at grid point p.
struct FieldEnsemble {
  field::UniformGrid grid;
  Eigen::MatrixXd samples;

  std::size_t sample_count() const { return static_cast<std::size_t>(samples.rows()); }
  std::size_t point_count() const { return static_cast<std::size_t>(samples.cols()); }
  void validate() const;
  /// All sample values at an arbitrary point (bilinear between nodes).
  Eigen::VectorXd values_at(Coord2 p) const;
};

/// Sample s uses noise drawn from derive_seed(seed, 0, s).
FieldEnsemble ensemble_from_generator(const nn::Generator& gen_E, const field::UniformGrid& grid,
                                      int n_samples, std::uint64_t seed);
/// Sample s uses KL coefficients drawn from derive_seed(seed, 0, s).
FieldEnsemble ensemble_from_field_model(const field::RandomFieldModel& model,
                                        const field::UniformGrid& grid, int n_samples,
                                        std::uint64_t seed);

struct MomentFields {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;  ///< 1/(n-1) normalization
};
MomentFields moment_fields(const FieldEnsemble& ens);

/// Analytic mean and std of the modulus under the truncated KL model.
MomentFields analytic_moments(const field::RandomFieldModel& model, const field::UniformGrid& grid);

/// Trapezoid-rule L2 norm over the grid's rectangle.
double l2_norm(const Eigen::VectorXd& f, const field::UniformGrid& grid);
/// |est - ref|_L2 / |ref|_L2.
double relative_l2_error(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference,
                         const field::UniformGrid& grid);

struct DensityCurve {
  std::vector<double> x;
  std::vector<double> density;
  double bandwidth = 0.0;  ///< KDE bandwidth or histogram bin width
  std::size_t n_samples = 0;
  /// Set when fewer than kMinDensitySamples values were available.
  bool low_sample_warning = false;
};

inline constexpr std::size_t kMinDensitySamples = 100;

/// 0.9 min(sd, IQR/1.34) n^(-1/5); falls back to whichever spread is
/// non-zero, then to 1e-3 (1 + |mean|) for a degenerate sample.
double silverman_bandwidth(std::span<const double> values);

/// Gaussian KDE. bandwidth <= 0 selects silverman_bandwidth.
DensityCurve kde(std::span<const double> values, std::span<const double> abscissa,
                 double bandwidth = 0.0);
/// Normalized histogram on [lo, hi] (bin centres as abscissa).
DensityCurve histogram(std::span<const double> values, int bins, double lo, double hi);

/// `n` equidistant points covering the sample range padded by 4 bandwidths.
std::vector<double> density_abscissa(std::span<const double> values, int n = 201);

enum class DensityMethod { kde, histogram };

struct PdfOptions {
  DensityMethod method = DensityMethod::kde;
  double bandwidth = 0.0;
  int points = 201;  ///< abscissa points (KDE) or bins (histogram)
};
DensityCurve pointwise_pdf(const FieldEnsemble& ens, Coord2 point, const PdfOptions& opt = {});

/// Density of alpha + beta * exp(Z), Z ~ N(0, sigma2).
double shifted_lognormal_density(double e, double alpha, double beta, double sigma2);

struct CorrelationCurve {
  double anchor_x1 = 0.5;
  double x2_bar = 0.5;
  std::vector<double> x1;
  std::vector<double> correlation;
};

/// Pearson correlation; throws NumericalError if either sample has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

/// Correlation along the grid row x2 = x2_bar against the anchor (x1_prime,
/// x2_bar). Both must be grid nodes.
CorrelationCurve correlation_1d(const FieldEnsemble& ens, double x1_prime, double x2_bar);

/// Correlation of exp(g(x)) and exp(g(x')) for jointly Gaussian g with
/// variances s1, s2 and covariance c.
double lognormal_correlation(double c, double s1, double s2);

struct SweepTrial {
  std::string cell;  ///< e.g. "grid:4x4" or "n_u=100"
  double value = 0.0;
  int trial = 0;
  double mean_error = 0.0;
  double std_error = 0.0;
};

struct SweepCell {
  std::string cell;
  double value = 0.0;
  std::vector<double> mean_errors;
  std::vector<double> std_errors;
  double mean_error_avg = 0.0;
  double std_error_avg = 0.0;
};

/// Groups trials by cell in first-appearance order and averages them.
std::vector<SweepCell> sweep_report(std::span<const SweepTrial> trials);

/// The three points of interest and the three correlation sections.
struct NamedPoint {
  std::string name;
  Coord2 point;
};
std::vector<NamedPoint> default_query_points();
struct Section {
  std::string name;
  double x1_prime;
  double x2_bar;
};
std::vector<Section> default_sections();

}  // namespace pigan::stats
