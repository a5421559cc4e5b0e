#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <filesystem>

#include "pigan/cli/commands.hpp"
#include "pigan/parallel.hpp"

namespace pigan::cli {

namespace {

/// "64" or "64x48".
std::array<int, 2> parse_extent(const std::string& text, const char* what) {
  auto to_int = [&](std::string_view s) {
    int v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ptr != s.data() + s.size())
      throw ValidationError(std::string("bad ") + what + " '" + text + "', expected N or NxM");
    return v;
  };
  const auto x = text.find('x');
  if (x == std::string::npos) {
    const int n = to_int(text);
    return {n, n};
  }
  return {to_int(std::string_view(text).substr(0, x)), to_int(std::string_view(text).substr(x + 1))};
}

RunConfig config_or_default(const std::string& path) {
  return path.empty() ? RunConfig{} : load_config(path);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Physics-informed WGAN for stochastic elastic-modulus identification", "pigan"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP threads (0 = runtime default); results do not depend on it")
      ->check(CLI::NonNegativeNumber);

  // generate-data
  auto* gen = app.add_subcommand("generate-data", "Sample modulus fields and solve the FEM problems");
  std::string gen_config, gen_out, gen_mesh, gen_kl_grid;
  std::optional<int> gen_n, gen_terms;
  std::optional<std::uint64_t> gen_seed;
  std::optional<double> gen_corr, gen_alpha, gen_beta;
  bool gen_csv = false;
  gen->add_option("--config", gen_config, "JSON run configuration");
  gen->add_option("--n-snapshots", gen_n, "Number of snapshots");
  gen->add_option("--mesh", gen_mesh, "FEM mesh, N or NxM elements");
  gen->add_option("--seed", gen_seed, "Field sampling seed");
  gen->add_option("--out", gen_out, "Dataset file to write")->required();
  gen->add_option("--correlation-length", gen_corr, "Kernel correlation length");
  gen->add_option("--kl-terms", gen_terms, "Retained KL terms");
  gen->add_option("--kl-grid", gen_kl_grid, "KL quadrature grid, N or NxM nodes");
  gen->add_option("--alpha", gen_alpha, "Modulus offset");
  gen->add_option("--beta", gen_beta, "Modulus scale");
  gen->add_flag("--csv", gen_csv, "Also write the sensor table to <out> with a .csv extension");

  // train
  auto* train = app.add_subcommand("train", "Train the generators and critic");
  std::string train_config, train_data, train_out;
  std::optional<std::int64_t> train_steps;
  bool train_resume = false, train_quiet = false;
  train->add_option("--config", train_config, "JSON run configuration (default: run-dir config on resume)");
  train->add_option("--data", train_data, "Dataset file")->required();
  train->add_option("--out", train_out, "Run directory")->required();
  train->add_option("--steps", train_steps, "Override training.total_steps");
  train->add_flag("--resume", train_resume, "Continue from the latest checkpoint in the run directory");
  train->add_flag("--quiet", train_quiet, "No progress lines");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Write the statistics report of a trained run");
  std::string eval_run, eval_config, eval_out, eval_ckpt;
  bool eval_identity = false;
  eval->add_option("--run", eval_run, "Run directory");
  eval->add_option("--config", eval_config, "Evaluation configuration (default: run-dir config.json)");
  eval->add_option("--out", eval_out, "Report directory (default: <run>/report)");
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint file (default: latest in the run)");
  eval->add_flag("--identity", eval_identity, "Compare the reference ensemble with itself");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Repeat training over collocation grids or measurement counts");
  std::string sw_config, sw_data, sw_out, sw_kind;
  std::optional<int> sw_trials;
  std::optional<std::int64_t> sw_steps;
  sweep->add_option("--config", sw_config, "JSON run configuration");
  sweep->add_option("--data", sw_data, "Dataset file")->required();
  sweep->add_option("--out", sw_out, "Output directory")->required();
  sweep->add_option("--kind", sw_kind, "n_r (collocation grids) or n_u (measurement counts)");
  sweep->add_option("--trials", sw_trials, "Trials per cell");
  sweep->add_option("--steps", sw_steps, "Training steps per trial");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    parallel::set_threads(threads);
    if (*gen) {
      auto c = config_or_default(gen_config);
      if (gen_n) c.data.n_snapshots = *gen_n;
      if (gen_seed) c.data.seed = *gen_seed;
      if (!gen_mesh.empty()) {
        const auto m = parse_extent(gen_mesh, "mesh");
        c.data.mesh.nx = m[0];
        c.data.mesh.ny = m[1];
      }
      if (!gen_kl_grid.empty()) {
        const auto g = parse_extent(gen_kl_grid, "KL grid");
        c.field.kl_grid.nx = g[0];
        c.field.kl_grid.ny = g[1];
      }
      if (gen_corr) c.field.kernel.correlation_length = *gen_corr;
      if (gen_terms) c.field.kl_terms = *gen_terms;
      if (gen_alpha) c.field.alpha = *gen_alpha;
      if (gen_beta) c.field.beta = *gen_beta;
      const auto ds = cmd_generate_data(c, gen_out, gen_csv);
      out << "wrote " << ds.snapshot_count() << " snapshots x " << ds.sensor_count()
          << " sensors to " << gen_out << " (fingerprint " << fingerprint_hash(ds.fingerprint)
          << ")\n";
    } else if (*train) {
      const std::filesystem::path run_dir(train_out);
      RunConfig c;
      if (!train_config.empty())
        c = load_config(train_config);
      else if (train_resume && std::filesystem::exists(run_dir / "config.json"))
        c = load_config(run_dir / "config.json");
      if (train_steps) c.training.total_steps = *train_steps;
      const auto ds = data::read_dataset(train_data);
      TrainOptions opt;
      opt.resume = train_resume;
      opt.progress = train_quiet ? nullptr : &out;
      const auto st = cmd_train(c, ds, run_dir, opt);
      out << "training finished at step " << st.step << "; checkpoints in "
          << (run_dir / "checkpoints").string() << '\n';
    } else if (*eval) {
      if (eval_run.empty() && !eval_identity)
        throw ValidationError("--run is required unless --identity is given");
      const std::filesystem::path run_dir(eval_run);
      RunConfig c;
      if (!eval_config.empty())
        c = load_config(eval_config);
      else if (!eval_run.empty() && std::filesystem::exists(run_dir / "config.json"))
        c = load_config(run_dir / "config.json");
      std::optional<wgan::TrainingState> state;
      if (!eval_identity) {
        std::filesystem::path ckpt = eval_ckpt;
        if (ckpt.empty()) {
          const auto latest = latest_checkpoint(run_dir);
          if (!latest) throw IoError("no checkpoint found in " + run_dir.string());
          ckpt = *latest;
        }
        state = wgan::read_checkpoint(ckpt);
      }
      std::filesystem::path report = eval_out;
      if (report.empty()) {
        if (eval_run.empty()) throw ValidationError("--out is required without --run");
        report = run_dir / "report";
      }
      const auto s = cmd_evaluate(c, state ? &*state : nullptr, report, eval_identity);
      out << "relative L2 error of mean(E): " << s.mean_error_analytic
          << " (vs analytic), " << s.mean_error_sampled << " (vs reference ensemble)\n"
          << "relative L2 error of std(E):  " << s.std_error_analytic << " (vs analytic), "
          << s.std_error_sampled << " (vs reference ensemble)\n"
          << "report written to " << report.string() << '\n';
    } else if (*sweep) {
      auto c = config_or_default(sw_config);
      if (!sw_kind.empty()) c.sweep.kind = sw_kind;
      if (sw_trials) c.sweep.trials = *sw_trials;
      if (sw_steps) c.sweep.steps = *sw_steps;
      const auto ds = data::read_dataset(sw_data);
      const auto cells = cmd_sweep(c, ds, sw_out, &out);
      out << "sweep finished: " << cells.size() << " cells written to " << sw_out << '\n';
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace pigan::cli
