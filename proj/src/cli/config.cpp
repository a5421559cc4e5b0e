#include "pigan/cli/config.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace pigan::cli {

using nlohmann::json;

namespace {

/// Reads the keys of one JSON object into typed fields, rejecting anything
/// the section does not declare.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(path_ + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.push_back(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ValidationError(path_ + "." + key + ": wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.push_back(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string path(const char* key) const { return path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end())
        throw ValidationError("unknown config key '" + path_ + "." + it.key() + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string> seen_;
};

std::array<int, 2> pair_of_ints(Section& s, const char* key, std::array<int, 2> def) {
  std::vector<int> v{def[0], def[1]};
  s.get(key, v);
  if (v.size() != 2) throw ValidationError(s.path(key) + ": expected [nx, ny]");
  return {v[0], v[1]};
}

std::array<double, 2> pair_of_doubles(Section& s, const char* key, std::array<double, 2> def) {
  std::vector<double> v{def[0], def[1]};
  s.get(key, v);
  if (v.size() != 2) throw ValidationError(s.path(key) + ": expected two numbers");
  return {v[0], v[1]};
}

physics::GridSpec grid_spec(const json& j, const std::string& where) {
  if (!j.is_string()) throw ValidationError(where + ": expected a \"grid:AxB\" string");
  return physics::parse_grid_spec(j.get<std::string>());
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void RunConfig::validate() const {
  field.kl_grid.validate();
  field.kernel.validate();
  if (field.kl_terms < 1 || static_cast<std::size_t>(field.kl_terms) > field.kl_grid.size())
    throw ValidationError("field.kl_terms must lie in [1, number of KL grid points]");
  if (!(field.beta > 0.0)) throw ValidationError("field.beta must be positive");
  physics::ElasticityConstants{physics.nu}.validate();
  physics.load.validate();
  data.mesh.validate();
  if (data.sensors_per_side < 2) throw ValidationError("data.sensors_per_side must be >= 2");
  if (data.n_snapshots < 1) throw ValidationError("data.n_snapshots must be >= 1");
  effective_training().validate();
  evaluation.grid.validate();
  if (evaluation.grid.nx < 2 || evaluation.grid.ny < 2)
    throw ValidationError("evaluation.grid needs at least 2x2 points");
  if (evaluation.n_generated < 2 || evaluation.n_reference < 2)
    throw ValidationError("evaluation sample counts must be >= 2");
  if (evaluation.pdf_method != "kde" && evaluation.pdf_method != "histogram")
    throw ValidationError("evaluation.pdf_method must be \"kde\" or \"histogram\"");
  if (evaluation.pdf_points < 2) throw ValidationError("evaluation.pdf_points must be >= 2");
  if (evaluation.bandwidth < 0.0) throw ValidationError("evaluation.bandwidth must be >= 0");
  if (sweep.kind != "n_r" && sweep.kind != "n_u")
    throw ValidationError("sweep.kind must be \"n_r\" or \"n_u\"");
  if (sweep.trials < 1) throw ValidationError("sweep.trials must be >= 1");
  if (sweep.steps < 0) throw ValidationError("sweep.steps must be >= 0");
  for (const auto& g : sweep.grids)
    if (g.nx < 1 || g.ny < 1) throw ValidationError("sweep.grids entries must be positive");
  for (int n : sweep.n_u)
    if (n < 1) throw ValidationError("sweep.n_u entries must be positive");
}

wgan::TrainingConfig RunConfig::effective_training() const {
  auto t = training;
  t.nu = physics.nu;
  t.load = physics.load;
  return t;
}

field::RandomFieldModel RunConfig::build_field_model() const {
  return field::build_kl_model(field.kl_grid, field.kernel, field.kl_terms, field.alpha,
                               field.beta);
}

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  Section top(root, "config");

  if (const auto* j = top.child("field")) {
    Section s(*j, "field");
    const auto g = pair_of_ints(s, "kl_grid", {c.field.kl_grid.nx, c.field.kl_grid.ny});
    c.field.kl_grid.nx = g[0];
    c.field.kl_grid.ny = g[1];
    s.get("correlation_length", c.field.kernel.correlation_length);
    s.get("variance", c.field.kernel.variance);
    s.get("kl_terms", c.field.kl_terms);
    s.get("alpha", c.field.alpha);
    s.get("beta", c.field.beta);
    s.finish();
  }
  if (const auto* j = top.child("physics")) {
    Section s(*j, "physics");
    s.get("nu", c.physics.nu);
    c.physics.load.traction_right = pair_of_doubles(s, "traction_right", c.physics.load.traction_right);
    c.physics.load.traction_top = pair_of_doubles(s, "traction_top", c.physics.load.traction_top);
    c.physics.load.traction_bottom =
        pair_of_doubles(s, "traction_bottom", c.physics.load.traction_bottom);
    s.finish();
  }
  if (const auto* j = top.child("data")) {
    Section s(*j, "data");
    const auto m = pair_of_ints(s, "mesh", {c.data.mesh.nx, c.data.mesh.ny});
    c.data.mesh.nx = m[0];
    c.data.mesh.ny = m[1];
    s.get("sensors_per_side", c.data.sensors_per_side);
    s.get("n_snapshots", c.data.n_snapshots);
    s.get("seed", c.data.seed);
    s.finish();
  }
  if (const auto* j = top.child("training")) {
    Section s(*j, "training");
    auto& t = c.training;
    s.get("hidden_u", t.hidden_u);
    s.get("hidden_E", t.hidden_E);
    s.get("hidden_critic", t.hidden_critic);
    s.get("noise_dim", t.noise_dim);
    s.get("n_r", t.n_r);
    s.get("n_b", t.n_b);
    s.get("batch_size", t.batch_size);
    s.get("lambda", t.lambda);
    s.get("gen_steps_per_critic", t.gen_steps_per_critic);
    s.get("total_steps", t.total_steps);
    s.get("checkpoint_every", t.checkpoint_every);
    s.get("lr", t.adam.lr);
    s.get("beta1", t.adam.beta1);
    s.get("beta2", t.adam.beta2);
    s.get("adam_eps", t.adam.eps);
    if (const auto* w = s.child("weights")) {
      Section ws(*w, "training.weights");
      ws.get("adversarial", t.weights.adversarial);
      ws.get("pde", t.weights.pde);
      ws.get("bc", t.weights.bc);
      ws.finish();
    }
    if (const auto* g = s.child("interior_grid")) t.interior_grid = grid_spec(*g, "training.interior_grid");
    s.get("boundary_points", t.boundary_points);
    s.get("init_seed", t.init_seed);
    s.get("train_seed", t.train_seed);
    s.finish();
  }
  if (const auto* j = top.child("evaluation")) {
    Section s(*j, "evaluation");
    auto& e = c.evaluation;
    const auto g = pair_of_ints(s, "grid", {e.grid.nx, e.grid.ny});
    e.grid.nx = g[0];
    e.grid.ny = g[1];
    s.get("n_generated", e.n_generated);
    s.get("n_reference", e.n_reference);
    s.get("generated_seed", e.generated_seed);
    s.get("reference_seed", e.reference_seed);
    s.get("pdf_method", e.pdf_method);
    s.get("pdf_points", e.pdf_points);
    s.get("bandwidth", e.bandwidth);
    s.finish();
  }
  if (const auto* j = top.child("sweep")) {
    Section s(*j, "sweep");
    auto& w = c.sweep;
    s.get("kind", w.kind);
    if (const auto* g = s.child("grids")) {
      if (!g->is_array()) throw ValidationError("sweep.grids: expected a list");
      w.grids.clear();
      for (const auto& e : *g) w.grids.push_back(grid_spec(e, "sweep.grids"));
    }
    s.get("n_u", w.n_u);
    s.get("trials", w.trials);
    s.get("steps", w.steps);
    s.get("seed", w.seed);
    s.finish();
  }
  top.finish();
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const RunConfig& c) {
  const auto& t = c.training;
  json j;
  j["field"] = {{"kl_grid", {c.field.kl_grid.nx, c.field.kl_grid.ny}},
                {"correlation_length", c.field.kernel.correlation_length},
                {"variance", c.field.kernel.variance},
                {"kl_terms", c.field.kl_terms},
                {"alpha", c.field.alpha},
                {"beta", c.field.beta}};
  j["physics"] = {{"nu", c.physics.nu},
                  {"traction_right", c.physics.load.traction_right},
                  {"traction_top", c.physics.load.traction_top},
                  {"traction_bottom", c.physics.load.traction_bottom}};
  j["data"] = {{"mesh", {c.data.mesh.nx, c.data.mesh.ny}},
               {"sensors_per_side", c.data.sensors_per_side},
               {"n_snapshots", c.data.n_snapshots},
               {"seed", c.data.seed}};
  j["training"] = {{"hidden_u", t.hidden_u},
                   {"hidden_E", t.hidden_E},
                   {"hidden_critic", t.hidden_critic},
                   {"noise_dim", t.noise_dim},
                   {"n_r", t.n_r},
                   {"n_b", t.n_b},
                   {"batch_size", t.batch_size},
                   {"lambda", t.lambda},
                   {"gen_steps_per_critic", t.gen_steps_per_critic},
                   {"total_steps", t.total_steps},
                   {"checkpoint_every", t.checkpoint_every},
                   {"lr", t.adam.lr},
                   {"beta1", t.adam.beta1},
                   {"beta2", t.adam.beta2},
                   {"adam_eps", t.adam.eps},
                   {"weights",
                    {{"adversarial", t.weights.adversarial},
                     {"pde", t.weights.pde},
                     {"bc", t.weights.bc}}},
                   {"interior_grid", t.interior_grid.to_string()},
                   {"boundary_points", t.boundary_points},
                   {"init_seed", t.init_seed},
                   {"train_seed", t.train_seed}};
  const auto& e = c.evaluation;
  j["evaluation"] = {{"grid", {e.grid.nx, e.grid.ny}},
                     {"n_generated", e.n_generated},
                     {"n_reference", e.n_reference},
                     {"generated_seed", e.generated_seed},
                     {"reference_seed", e.reference_seed},
                     {"pdf_method", e.pdf_method},
                     {"pdf_points", e.pdf_points},
                     {"bandwidth", e.bandwidth}};
  std::vector<std::string> grids;
  for (const auto& g : c.sweep.grids) grids.push_back(g.to_string());
  j["sweep"] = {{"kind", c.sweep.kind},
                {"grids", grids},
                {"n_u", c.sweep.n_u},
                {"trials", c.sweep.trials},
                {"steps", c.sweep.steps},
                {"seed", c.sweep.seed}};
  return j.dump(2) + "\n";
}

std::string data_fingerprint(const RunConfig& c) {
  std::map<std::string, std::string> kv;
  kv["data.mesh"] = std::to_string(c.data.mesh.nx) + "x" + std::to_string(c.data.mesh.ny);
  kv["data.n_snapshots"] = std::to_string(c.data.n_snapshots);
  kv["data.seed"] = std::to_string(c.data.seed);
  kv["data.sensors_per_side"] = std::to_string(c.data.sensors_per_side);
  kv["field.alpha"] = num(c.field.alpha);
  kv["field.beta"] = num(c.field.beta);
  kv["field.correlation_length"] = num(c.field.kernel.correlation_length);
  kv["field.kl_grid"] = std::to_string(c.field.kl_grid.nx) + "x" + std::to_string(c.field.kl_grid.ny);
  kv["field.kl_terms"] = std::to_string(c.field.kl_terms);
  kv["field.variance"] = num(c.field.kernel.variance);
  kv["physics.nu"] = num(c.physics.nu);
  const auto& l = c.physics.load;
  kv["physics.traction_bottom"] = num(l.traction_bottom[0]) + "," + num(l.traction_bottom[1]);
  kv["physics.traction_right"] = num(l.traction_right[0]) + "," + num(l.traction_right[1]);
  kv["physics.traction_top"] = num(l.traction_top[0]) + "," + num(l.traction_top[1]);
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

namespace {
std::map<std::string, std::string> parse_fingerprint(const std::string& fp) {
  std::map<std::string, std::string> kv;
  std::istringstream is(fp);
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}
}  // namespace

std::vector<std::string> fingerprint_conflicts(const std::string& dataset_fp,
                                               const std::string& config_fp) {
  const auto a = parse_fingerprint(dataset_fp);
  const auto b = parse_fingerprint(config_fp);
  std::vector<std::string> out;
  auto keys = a;
  keys.insert(b.begin(), b.end());
  for (const auto& [k, unused] : keys) {
    if (k == "data.n_snapshots" || k == "data.seed") continue;
    const auto ia = a.find(k);
    const auto ib = b.find(k);
    const std::string va = ia == a.end() ? "<missing>" : ia->second;
    const std::string vb = ib == b.end() ? "<missing>" : ib->second;
    if (va != vb) out.push_back(k + ": dataset " + va + " != config " + vb);
  }
  return out;
}

std::string fingerprint_hash(const std::string& fp) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : fp) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace pigan::cli
