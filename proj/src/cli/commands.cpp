#include "pigan/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>

#include "pigan/nn/generator.hpp"
#include "pigan/parallel.hpp"

namespace pigan::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Minimal CSV writer with round-trip number formatting.
class CsvFile {
 public:
  CsvFile(const fs::path& path, const std::string& header) : path_(path), os_(path, std::ios::trunc) {
    if (!os_) throw IoError("cannot open " + path.string() + " for writing");
    os_ << header << '\n';
  }
  void row(std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
      if (!first) os_ << ',';
      os_ << num(v);
      first = false;
    }
    os_ << '\n';
  }
  std::ostream& raw() { return os_; }
  void close() {
    os_.close();
    if (!os_) throw IoError("failed writing " + path_.string());
  }

 private:
  fs::path path_;
  std::ofstream os_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw IoError("failed writing " + path.string());
}

void check_compatible(const RunConfig& config, const data::SnapshotDataset& dataset) {
  const auto conflicts = fingerprint_conflicts(dataset.fingerprint, data_fingerprint(config));
  if (conflicts.empty()) return;
  std::string msg = "dataset was generated with a different configuration:";
  for (const auto& c : conflicts) msg += "\n  " + c;
  throw ValidationError(msg);
}

/// Keeps the header and the rows of steps before `step`.
void truncate_log(const fs::path& log, std::int64_t step) {
  std::vector<std::string> keep;
  {
    std::ifstream is(log);
    std::string line;
    bool header = true;
    while (std::getline(is, line)) {
      if (header) {
        keep.push_back(line);
        header = false;
        continue;
      }
      const auto comma = line.find(',');
      if (comma == std::string::npos) continue;
      if (std::stoll(line.substr(0, comma)) < step) keep.push_back(line);
    }
  }
  std::ofstream os(log, std::ios::trunc);
  if (!os) throw IoError("cannot rewrite " + log.string());
  if (keep.empty()) wgan::write_log_header(os);
  for (const auto& l : keep) os << l << '\n';
}

}  // namespace

data::SnapshotDataset cmd_generate_data(const RunConfig& config, const fs::path& out,
                                        bool with_csv) {
  config.validate();
  if (out.empty()) throw ValidationError("an output path is required");
  const auto model = config.build_field_model();
  data::GenerationSpec spec;
  spec.mesh = config.data.mesh;
  spec.load = config.physics.load;
  spec.nu = config.physics.nu;
  spec.sensors = fem::make_sensor_grid(config.data.sensors_per_side);
  spec.n_snapshots = config.data.n_snapshots;
  spec.seed = config.data.seed;
  spec.fingerprint = data_fingerprint(config);
  const auto ds = data::generate_dataset(model, spec);

  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  const fs::path tmp = out.string() + ".tmp";
  data::write_dataset(tmp, ds);
  fs::rename(tmp, out);
  if (with_csv) {
    auto csv = out;
    csv.replace_extension(".csv");
    data::write_dataset_csv(csv, ds);
  }
  return ds;
}

fs::path checkpoint_path(const fs::path& run_dir, std::int64_t step) {
  char name[40];
  std::snprintf(name, sizeof name, "step_%08lld.bin", static_cast<long long>(step));
  return run_dir / "checkpoints" / name;
}

std::optional<fs::path> latest_checkpoint(const fs::path& run_dir) {
  const auto dir = run_dir / "checkpoints";
  if (!fs::is_directory(dir)) return std::nullopt;
  std::optional<fs::path> best;
  long long best_step = -1;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name.size() != 17 || name.rfind("step_", 0) != 0 || e.path().extension() != ".bin")
      continue;
    const long long s = std::stoll(name.substr(5, 8));
    if (s > best_step) {
      best_step = s;
      best = e.path();
    }
  }
  return best;
}

wgan::TrainingState cmd_train(const RunConfig& config, const data::SnapshotDataset& dataset,
                              const fs::path& run_dir, const TrainOptions& options) {
  config.validate();
  check_compatible(config, dataset);
  const auto tc = config.effective_training();
  const auto fp = data_fingerprint(config);
  const auto log_path = run_dir / "log.csv";

  std::optional<wgan::Trainer> trainer;
  if (options.resume) {
    const auto latest = latest_checkpoint(run_dir);
    if (!latest) throw IoError("no checkpoint to resume from in " + run_dir.string());
    auto state = wgan::read_checkpoint(*latest);
    if (state.init_seed != tc.init_seed || state.train_seed != tc.train_seed)
      throw ValidationError("checkpoint seeds differ from the configuration");
    trainer.emplace(tc, dataset, std::move(state));
    if (fs::exists(log_path)) truncate_log(log_path, trainer->state().step);
  } else {
    if (latest_checkpoint(run_dir))
      throw ValidationError("run directory " + run_dir.string() +
                            " already holds checkpoints; use --resume or a new directory");
    trainer.emplace(tc, dataset);
    fs::create_directories(run_dir / "checkpoints");
    std::ofstream log(log_path, std::ios::trunc);
    if (!log) throw IoError("cannot create " + log_path.string());
    wgan::write_log_header(log);
  }
  fs::create_directories(run_dir / "checkpoints");
  write_text(run_dir / "config.json", dump_config(config));
  write_text(run_dir / "fingerprint.txt", fp);

  const auto& st0 = trainer->state();
  if (!fs::exists(checkpoint_path(run_dir, st0.step)))
    wgan::write_checkpoint(checkpoint_path(run_dir, st0.step), st0, fp);

  std::ofstream log(log_path, std::ios::app);
  if (!log) throw IoError("cannot append to " + log_path.string());
  auto on_step = [&](const wgan::TrainingState& s, const wgan::TrainingRecord& r) {
    wgan::write_log_row(log, r);
    if (s.step % tc.checkpoint_every == 0 || s.step == tc.total_steps) {
      log.flush();
      wgan::write_checkpoint(checkpoint_path(run_dir, s.step), s, fp);
      if (options.progress)
        *options.progress << "step " << s.step << "  L_G_w=" << num(r.gen_adversarial)
                          << "  L_PDE=" << num(r.pde) << "  L_BC=" << num(r.bc)
                          << "  L_D_w=" << num(r.critic_wasserstein) << '\n';
    }
  };
  auto on_abort = [&](const wgan::TrainingState& s) {
    log.flush();
    wgan::write_checkpoint(checkpoint_path(run_dir, s.step), s, fp);
  };
  trainer->run(on_step, on_abort);
  log.close();
  if (!log) throw IoError("failed writing " + log_path.string());
  return trainer->state();
}

EvalSummary evaluate_generator_errors(const RunConfig& config, const nn::Mlp& gen_E) {
  const auto model = config.build_field_model();
  const auto& grid = config.evaluation.grid;
  const auto analytic = stats::analytic_moments(model, grid);
  const nn::MlpGenerator gen(gen_E);
  const auto ens = stats::ensemble_from_generator(gen, grid, config.evaluation.n_generated,
                                                  config.evaluation.generated_seed);
  const auto m = stats::moment_fields(ens);
  EvalSummary s;
  s.mean_error_analytic = stats::relative_l2_error(m.mean, analytic.mean, grid);
  s.std_error_analytic = stats::relative_l2_error(m.std, analytic.std, grid);
  return s;
}

namespace {

std::optional<stats::CorrelationCurve> try_correlation(const stats::FieldEnsemble& ens,
                                                       const stats::Section& s) {
  try {
    return stats::correlation_1d(ens, s.x1_prime, s.x2_bar);
  } catch (const NumericalError&) {
    return std::nullopt;
  }
}

}  // namespace

EvalSummary cmd_evaluate(const RunConfig& config, const wgan::TrainingState* state,
                         const fs::path& report_dir, bool identity) {
  config.validate();
  if (!identity && !state) throw ValidationError("a checkpoint is required unless --identity is set");
  const auto& ec = config.evaluation;
  const auto& grid = ec.grid;
  const auto model = config.build_field_model();

  const auto ref = stats::ensemble_from_field_model(model, grid, ec.n_reference, ec.reference_seed);
  stats::FieldEnsemble gen;
  if (identity) {
    gen = ref;
  } else {
    const nn::MlpGenerator g(state->gen_E);
    gen = stats::ensemble_from_generator(g, grid, ec.n_generated, ec.generated_seed);
  }
  const auto gm = stats::moment_fields(gen);
  const auto rm = stats::moment_fields(ref);
  const auto am = stats::analytic_moments(model, grid);

  fs::create_directories(report_dir);
  const auto pts = grid.points();
  {
    CsvFile mean(report_dir / "mean_field.csv", "x1,x2,generated,reference_sampled,reference_analytic");
    CsvFile sd(report_dir / "std_field.csv", "x1,x2,generated,reference_sampled,reference_analytic");
    CsvFile err(report_dir / "error_fields.csv",
                "x1,x2,abs_mean_error,abs_std_error,abs_mean_error_sampled,abs_std_error_sampled");
    for (std::size_t p = 0; p < pts.size(); ++p) {
      const auto i = static_cast<Eigen::Index>(p);
      mean.row({pts[p].x1, pts[p].x2, gm.mean(i), rm.mean(i), am.mean(i)});
      sd.row({pts[p].x1, pts[p].x2, gm.std(i), rm.std(i), am.std(i)});
      err.row({pts[p].x1, pts[p].x2, std::abs(gm.mean(i) - am.mean(i)),
               std::abs(gm.std(i) - am.std(i)), std::abs(gm.mean(i) - rm.mean(i)),
               std::abs(gm.std(i) - rm.std(i))});
    }
    mean.close();
    sd.close();
    err.close();
  }

  bool low_samples = false;
  for (const auto& q : stats::default_query_points()) {
    const Eigen::VectorXd gv = gen.values_at(q.point);
    const Eigen::VectorXd rv = ref.values_at(q.point);
    const std::span<const double> gs(gv.data(), static_cast<std::size_t>(gv.size()));
    const std::span<const double> rs(rv.data(), static_cast<std::size_t>(rv.size()));
    const double lo = std::min(gv.minCoeff(), rv.minCoeff());
    const double hi = std::max(gv.maxCoeff(), rv.maxCoeff());
    stats::DensityCurve gd, rd;
    if (ec.pdf_method == "histogram") {
      const double pad = hi > lo ? 1e-9 * (hi - lo) : 1e-3 * (1.0 + std::abs(lo));
      gd = stats::histogram(gs, ec.pdf_points, lo - pad, hi + pad);
      rd = stats::histogram(rs, ec.pdf_points, lo - pad, hi + pad);
    } else {
      const double hg = ec.bandwidth > 0.0 ? ec.bandwidth : stats::silverman_bandwidth(gs);
      const double hr = ec.bandwidth > 0.0 ? ec.bandwidth : stats::silverman_bandwidth(rs);
      const double pad = 4.0 * std::max(hg, hr);
      std::vector<double> x(static_cast<std::size_t>(ec.pdf_points));
      for (std::size_t k = 0; k < x.size(); ++k)
        x[k] = lo - pad + (hi - lo + 2.0 * pad) * static_cast<double>(k) /
                              static_cast<double>(x.size() - 1);
      gd = stats::kde(gs, x, hg);
      rd = stats::kde(rs, x, hr);
    }
    low_samples = low_samples || gd.low_sample_warning || rd.low_sample_warning;
    const double s2 = model.latent_variance(q.point);
    CsvFile pdf(report_dir / ("pdf_" + q.name + ".csv"),
                "e,generated,reference_sampled,reference_analytic");
    for (std::size_t k = 0; k < gd.x.size(); ++k) {
      const double analytic =
          s2 > 0.0 ? stats::shifted_lognormal_density(gd.x[k], model.alpha(), model.beta(), s2)
                   : std::numeric_limits<double>::quiet_NaN();
      pdf.row({gd.x[k], gd.density[k], rd.density[k], analytic});
    }
    pdf.close();
  }

  for (const auto& sec : stats::default_sections()) {
    const auto gc = try_correlation(gen, sec);
    const auto rc = try_correlation(ref, sec);
    const Coord2 anchor{sec.x1_prime, sec.x2_bar};
    CsvFile csv(report_dir / ("correlation_" + sec.name + ".csv"),
                "x1,generated,reference_sampled,reference_analytic");
    for (int i = 0; i < grid.nx; ++i) {
      const Coord2 x{grid.x_at(i), sec.x2_bar};
      const double nan = std::numeric_limits<double>::quiet_NaN();
      const double analytic = stats::lognormal_correlation(
          model.latent_covariance(x, anchor), model.latent_variance(x), model.latent_variance(anchor));
      csv.row({x.x1, gc ? gc->correlation[static_cast<std::size_t>(i)] : nan,
               rc ? rc->correlation[static_cast<std::size_t>(i)] : nan, analytic});
    }
    csv.close();
  }

  EvalSummary s;
  s.mean_error_analytic = stats::relative_l2_error(gm.mean, am.mean, grid);
  s.std_error_analytic = stats::relative_l2_error(gm.std, am.std, grid);
  s.mean_error_sampled = stats::relative_l2_error(gm.mean, rm.mean, grid);
  s.std_error_sampled = stats::relative_l2_error(gm.std, rm.std, grid);
  s.checkpoint_step = identity ? -1 : state->step;

  const auto fp = data_fingerprint(config);
  CsvFile summary(report_dir / "summary.csv", "metric,value");
  auto& os = summary.raw();
  os << "rel_l2_mean_vs_analytic," << num(s.mean_error_analytic) << '\n'
     << "rel_l2_std_vs_analytic," << num(s.std_error_analytic) << '\n'
     << "rel_l2_mean_vs_reference_ensemble," << num(s.mean_error_sampled) << '\n'
     << "rel_l2_std_vs_reference_ensemble," << num(s.std_error_sampled) << '\n'
     << "rel_l2_reference_ensemble_mean_vs_analytic,"
     << num(stats::relative_l2_error(rm.mean, am.mean, grid)) << '\n'
     << "rel_l2_reference_ensemble_std_vs_analytic,"
     << num(stats::relative_l2_error(rm.std, am.std, grid)) << '\n'
     << "n_generated," << gen.sample_count() << '\n'
     << "n_reference," << ref.sample_count() << '\n'
     << "checkpoint_step," << s.checkpoint_step << '\n'
     << "reference_statistics,analytic truncated KL moments\n"
     << "pdf_low_sample_warning," << (low_samples ? 1 : 0) << '\n'
     << "fingerprint," << fingerprint_hash(fp) << '\n';
  summary.close();
  write_text(report_dir / "fingerprint.txt", fp);
  return s;
}

std::vector<stats::SweepCell> cmd_sweep(const RunConfig& config,
                                        const data::SnapshotDataset& dataset,
                                        const fs::path& out_dir, std::ostream* progress) {
  config.validate();
  check_compatible(config, dataset);
  const auto& sw = config.sweep;
  struct Cell {
    std::string label;
    double value;
    physics::GridSpec grid;
    int n_u;
  };
  std::vector<Cell> cells;
  if (sw.kind == "n_r") {
    for (const auto& g : sw.grids)
      cells.push_back({g.to_string(), static_cast<double>(g.nx) * g.ny, g, 0});
  } else {
    for (int n : sw.n_u) {
      if (n > static_cast<int>(dataset.snapshot_count()))
        throw ValidationError("sweep n_u=" + std::to_string(n) + " exceeds the dataset size");
      cells.push_back({"n_u=" + std::to_string(n), static_cast<double>(n),
                       config.training.interior_grid, n});
    }
  }

  fs::create_directories(out_dir);
  CsvFile trials_csv(out_dir / "sweep_trials.csv", "cell,value,trial,rel_l2_mean,rel_l2_std");
  std::vector<stats::SweepTrial> trials;
  for (const auto& cell : cells) {
    data::SnapshotDataset subset;
    const data::SnapshotDataset* ds = &dataset;
    if (cell.n_u > 0) {
      subset = dataset;
      subset.snapshots.resize(static_cast<std::size_t>(cell.n_u));
      ds = &subset;
    }
    for (int t = 0; t < sw.trials; ++t) {
      auto tc = config.effective_training();
      tc.interior_grid = cell.grid;
      tc.total_steps = sw.steps;
      tc.init_seed = derive_seed(sw.seed, 1, static_cast<std::uint64_t>(t));
      tc.train_seed = derive_seed(sw.seed, 2, static_cast<std::uint64_t>(t));
      if (tc.batch_size > static_cast<int>(ds->snapshot_count())) tc.batch_size = 0;
      wgan::Trainer trainer(tc, *ds);
      trainer.run();
      const auto e = evaluate_generator_errors(config, trainer.state().gen_E);
      trials.push_back({cell.label, cell.value, t, e.mean_error_analytic, e.std_error_analytic});
      trials_csv.raw() << cell.label << ',' << num(cell.value) << ',' << t << ','
                       << num(e.mean_error_analytic) << ',' << num(e.std_error_analytic) << '\n';
      if (progress)
        *progress << cell.label << " trial " << t << ": mean " << num(e.mean_error_analytic)
                  << ", std " << num(e.std_error_analytic) << '\n';
    }
  }
  trials_csv.close();

  const auto report = stats::sweep_report(trials);
  CsvFile summary(out_dir / "sweep_summary.csv", "cell,value,trials,rel_l2_mean_avg,rel_l2_std_avg");
  for (const auto& c : report)
    summary.raw() << c.cell << ',' << num(c.value) << ',' << c.mean_errors.size() << ','
                  << num(c.mean_error_avg) << ',' << num(c.std_error_avg) << '\n';
  summary.close();
  write_text(out_dir / "fingerprint.txt", data_fingerprint(config));
  return report;
}

}  // namespace pigan::cli
