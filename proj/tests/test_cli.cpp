#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pigan/cli/commands.hpp"
#include "pigan/cli/config.hpp"

using namespace pigan;
using namespace pigan::cli;
namespace fs = std::filesystem;

namespace {

const char* kTinyConfig = R"({
  "field": {"kl_grid": [9, 9], "kl_terms": 3},
  "data": {"mesh": [8, 8], "sensors_per_side": 3, "n_snapshots": 4},
  "training": {"hidden_u": [5], "hidden_E": [5], "hidden_critic": [5], "noise_dim": 2,
               "n_r": 2, "n_b": 2, "interior_grid": "grid:3x3", "boundary_points": 3,
               "total_steps": 4, "checkpoint_every": 2},
  "evaluation": {"grid": [5, 5], "n_generated": 120, "n_reference": 150},
  "sweep": {"grids": ["grid:3x3"], "trials": 2, "steps": 2}
})";

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("pigan_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& leaf) const { return (path / leaf).string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

int run(std::vector<std::string> args, std::string* out = nullptr, std::string* err = nullptr) {
  std::ostringstream o, e;
  const int rc = run_cli(args, o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return rc;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config parsing") {
  const RunConfig def = parse_config("{}");
  CHECK(def.training.lambda == 0.1);
  CHECK(def.training.adam.lr == 1e-4);
  CHECK(def.training.adam.beta1 == 0.0);
  CHECK(def.training.adam.beta2 == 0.9);
  CHECK(def.training.hidden_u == std::vector<int>{128, 128, 128, 128});
  CHECK(def.training.noise_dim == 5);
  CHECK(def.training.gen_steps_per_critic == 5);
  CHECK(def.data.n_snapshots == 1000);
  CHECK(def.training.boundary_points == 10);

  const RunConfig tiny = parse_config(kTinyConfig);
  CHECK(tiny.data.mesh.nx == 8);
  CHECK(tiny.training.interior_grid.nx == 3);
  CHECK(parse_config(dump_config(tiny)).training.hidden_critic == tiny.training.hidden_critic);
  CHECK(dump_config(parse_config(dump_config(tiny))) == dump_config(tiny));

  CHECK_THROWS_AS(parse_config(R"({"training": {"lamda": 0.1}})"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"bogus": {}})"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"training": {"n_r": "many"}})"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"data": {"mesh": [1, 8]}})"), ValidationError);
  CHECK_THROWS_AS(parse_config("{not json"), ValidationError);
}

TEST_CASE("fingerprints") {
  RunConfig a = parse_config(kTinyConfig);
  RunConfig b = a;
  b.data.n_snapshots = 77;
  b.data.seed = 3;
  CHECK(fingerprint_conflicts(data_fingerprint(a), data_fingerprint(b)).empty());
  b.physics.nu = 0.25;
  b.field.kernel.correlation_length = 0.5;
  const auto diff = fingerprint_conflicts(data_fingerprint(a), data_fingerprint(b));
  REQUIRE(diff.size() == 2);
  CHECK(diff[0].find("field.correlation_length") == 0);
  CHECK(diff[1].find("physics.nu") == 0);
  CHECK(fingerprint_hash(data_fingerprint(a)).size() == 16);
  CHECK(fingerprint_hash(data_fingerprint(a)) != fingerprint_hash(data_fingerprint(b)));
}

TEST_CASE("generate-data is reproducible and validates before writing") {
  TempDir d("gen");
  write_text(d / "c.json", kTinyConfig);
  CHECK(run({"generate-data", "--config", d / "c.json", "--n-snapshots", "1", "--seed", "7", "--out", d / "a.bin"}) == 0);
  CHECK(run({"generate-data", "--config", d / "c.json", "--n-snapshots", "1", "--seed", "7", "--out", d / "b.bin", "--csv"}) == 0);
  CHECK(slurp(d / "a.bin") == slurp(d / "b.bin"));
  CHECK(fs::exists(d / "b.csv"));
  CHECK(slurp(d / "b.csv").rfind("snapshot_id,x1,x2,u1,u2\n", 0) == 0);
  const auto ds = data::read_dataset(d / "a.bin");
  CHECK(ds.snapshot_count() == 1);
  CHECK(ds.sensor_count() == 6);

  std::string err;
  CHECK(run({"generate-data", "--config", d / "c.json", "--mesh", "1", "--out", d / "bad.bin"}, nullptr, &err) == 2);
  CHECK_FALSE(fs::exists(d / "bad.bin"));
  CHECK(err.find("mesh") != std::string::npos);

  write_text(d / "typo.json", R"({"data": {"n_snapshot": 3}})");
  CHECK(run({"generate-data", "--config", d / "typo.json", "--out", d / "t.bin"}) == 2);
  CHECK(run({"generate-data", "--config", d / "missing.json", "--out", d / "t.bin"}) == 4);
}

TEST_CASE("train, resume and evaluate") {
  TempDir d("train");
  write_text(d / "c.json", kTinyConfig);
  REQUIRE(run({"generate-data", "--config", d / "c.json", "--out", d / "ds.bin"}) == 0);

  CHECK(run({"train", "--config", d / "c.json", "--data", d / "ds.bin", "--out", d / "zero", "--steps", "0", "--quiet"}) == 0);
  std::vector<fs::path> cks;
  for (const auto& e : fs::directory_iterator(d.path / "zero" / "checkpoints")) cks.push_back(e.path());
  REQUIRE(cks.size() == 1);
  CHECK(cks[0].filename() == "step_00000000.bin");

  CHECK(run({"train", "--config", d / "c.json", "--data", d / "ds.bin", "--out", d / "full", "--quiet"}) == 0);
  CHECK(latest_checkpoint(d.path / "full") == checkpoint_path(d.path / "full", 4));
  const std::string log = slurp(d.path / "full" / "log.csv");
  CHECK(log.rfind("step,L_G_w,L_PDE,L_BC,L_D_w,gp,seconds\n", 0) == 0);
  CHECK(std::count(log.begin(), log.end(), '\n') == 5);
  CHECK(run({"train", "--config", d / "c.json", "--data", d / "ds.bin", "--out", d / "full", "--quiet"}) == 2);

  CHECK(run({"train", "--config", d / "c.json", "--data", d / "ds.bin", "--out", d / "part", "--steps", "2", "--quiet"}) == 0);
  CHECK(run({"train", "--config", d / "c.json", "--data", d / "ds.bin", "--out", d / "part", "--resume", "--quiet"}) == 0);
  const auto full = wgan::read_checkpoint(checkpoint_path(d.path / "full", 4));
  const auto resumed = wgan::read_checkpoint(checkpoint_path(d.path / "part", 4));
  CHECK(full.gen_u == resumed.gen_u);
  CHECK(full.gen_E == resumed.gen_E);
  CHECK(full.critic == resumed.critic);

  // A dataset produced under a different physical setup is refused.
  std::string cfg = kTinyConfig;
  cfg.replace(cfg.find("\"kl_terms\": 3"), 13, "\"kl_terms\": 2");
  write_text(d / "other.json", cfg);
  std::string err;
  CHECK(run({"train", "--config", d / "other.json", "--data", d / "ds.bin", "--out", d / "x", "--quiet"}, nullptr, &err) == 2);
  CHECK(err.find("field.kl_terms") != std::string::npos);
  CHECK_FALSE(fs::exists(d.path / "x" / "checkpoints"));

  std::string out;
  CHECK(run({"evaluate", "--run", d / "zero"}, &out) == 0);
  const fs::path rep = d.path / "zero" / "report";
  for (const char* f : {"mean_field.csv", "std_field.csv", "error_fields.csv", "summary.csv", "fingerprint.txt",
                        "pdf_0.25_0.75.csv", "pdf_0.5_0.5.csv", "pdf_0.75_0.25.csv", "correlation_A-A.csv",
                        "correlation_B-B.csv", "correlation_C-C.csv"})
    CHECK_MESSAGE(fs::exists(rep / f), f);
  CHECK(slurp(rep / "mean_field.csv").rfind("x1,x2,generated,reference_sampled,reference_analytic\n", 0) == 0);
  CHECK(slurp(rep / "pdf_0.5_0.5.csv").rfind("e,generated,reference_sampled,reference_analytic\n", 0) == 0);
  CHECK(out.find("relative L2 error of mean(E)") != std::string::npos);

  const RunConfig tiny = parse_config(kTinyConfig);
  const auto ident = cmd_evaluate(tiny, nullptr, d.path / "ident", true);
  CHECK(ident.mean_error_sampled == 0.0);
  CHECK(ident.std_error_sampled == 0.0);
  CHECK(run({"evaluate", "--run", d / "zero", "--identity", "--out", d / "ident2"}) == 0);
  CHECK(slurp(d.path / "ident2" / "summary.csv").find("rel_l2_mean_vs_reference_ensemble,0\n") != std::string::npos);

  CHECK(run({"evaluate", "--run", d / "nowhere"}) != 0);
}

TEST_CASE("sweep") {
  TempDir d("sweep");
  write_text(d / "c.json", kTinyConfig);
  REQUIRE(run({"generate-data", "--config", d / "c.json", "--out", d / "ds.bin"}) == 0);
  CHECK(run({"sweep", "--config", d / "c.json", "--data", d / "ds.bin", "--out", d / "sw"}) == 0);
  const std::string trials = slurp(d.path / "sw" / "sweep_trials.csv");
  CHECK(std::count(trials.begin(), trials.end(), '\n') == 3);
  CHECK(fs::exists(d.path / "sw" / "sweep_summary.csv"));
  CHECK(run({"sweep", "--config", d / "c.json", "--data", d / "ds.bin", "--out", d / "sw2", "--kind", "n_x"}) == 2);
}

TEST_CASE("help documents every subcommand and flag") {
  std::string out;
  CHECK(run({"--help"}, &out) == 0);
  for (const char* s : {"generate-data", "train", "evaluate", "sweep", "--threads"})
    CHECK_MESSAGE(out.find(s) != std::string::npos, s);
  CHECK(run({"train", "--help"}, &out) == 0);
  for (const char* s : {"--config", "--data", "--out", "--steps", "--resume", "--quiet"})
    CHECK_MESSAGE(out.find(s) != std::string::npos, s);
  CHECK(run({"generate-data", "--help"}, &out) == 0);
  for (const char* s : {"--n-snapshots", "--mesh", "--seed", "--csv", "--kl-terms"})
    CHECK_MESSAGE(out.find(s) != std::string::npos, s);
  CHECK(run({"frobnicate"}) == 2);
}

}
