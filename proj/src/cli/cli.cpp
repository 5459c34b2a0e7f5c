#include "flexsc/cli/cli.hpp"

#include <openssl/evp.h>

#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "flexsc/common/error.hpp"
#include "flexsc/common/json_util.hpp"

namespace flexsc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

json parse_json(const std::string& text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(where + ": invalid JSON: " + e.what());
  }
}

std::string resolve(const std::string& base_dir, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base_dir) / p).lexically_normal().string();
}

Bounds read_bounds(const json& j, const char* key, const std::string& where) {
  Bounds b;
  if (!j.contains(key)) return b;
  const std::string w = where + "." + key;
  if (!j.at(key).is_object()) throw ValidationError(w + ": expected an object of [lo, hi] pairs");
  for (auto it = j.at(key).begin(); it != j.at(key).end(); ++it) {
    std::vector<double> r;
    try {
      r = it.value().get<std::vector<double>>();
    } catch (const json::exception&) {
      throw ValidationError(w + "." + it.key() + ": expected [lo, hi]");
    }
    if (r.size() != 2) throw ValidationError(w + "." + it.key() + ": expected [lo, hi]");
    b[it.key()] = {r[0], r[1]};
  }
  return b;
}

SweepSpec read_sweep(const json& j) {
  const std::string w = "sweep";
  jsonio::check_keys(j, {"parameter", "grid", "range", "points", "channel", "omega"}, w);
  SweepSpec s;
  if (!j.contains("parameter")) throw ValidationError("sweep.parameter: required");
  jsonio::read(j, "parameter", s.parameter, w);
  jsonio::read(j, "grid", s.grid, w);
  if (j.contains("range")) {
    if (j.contains("grid")) throw ValidationError("sweep: give either 'grid' or 'range', not both");
    std::vector<double> r;
    int n = 20;
    jsonio::read(j, "range", r, w);
    jsonio::read(j, "points", n, w);
    if (r.size() != 2) throw ValidationError("sweep.range: expected [lo, hi]");
    if (n < 1) throw ValidationError("sweep.points: must be >= 1");
    for (int k = 0; k < n; ++k) s.grid.push_back(n == 1 ? r[0] : r[0] + (r[1] - r[0]) * k / (n - 1.0));
  } else if (j.contains("points")) {
    throw ValidationError("sweep.points: only valid with 'range'");
  }
  if (s.grid.empty()) throw ValidationError("sweep: 'grid' or 'range' required");
  jsonio::read(j, "channel", s.options.channel, w);
  jsonio::read(j, "omega", s.options.omega, w);
  if (s.parameter != "theta_sa") (void)design_specs({s.parameter});
  return s;
}

void apply_seed(RunConfig& c, std::uint64_t seed) {
  c.seed = seed;
  c.tune.seed = seed;
  c.codesign.pso.seed = seed;
  c.codesign.tune.seed = seed;
  c.surrogate_fit.seed = seed;
}

void apply_workers(RunConfig& c, int workers) {
  if (workers < 1) throw ValidationError("workers: must be >= 1");
  c.workers = workers;
  c.tune.workers = workers;
  c.tune.final_indices.workers = workers;
  c.codesign.workers = workers;
  c.codesign.pso.workers = workers;
  c.worst_case.workers = workers;
}

std::vector<ModelSpec> models_for(const RunConfig& c) {
  const json& j = c.model_set;
  if (j.contains("models")) return model_set_from_json(j);
  jsonio::check_keys(j, {"scheme", "sigma_points"}, "model_set");
  std::string scheme = "default";
  int sp = 5;
  jsonio::read(j, "scheme", scheme, "model_set");
  jsonio::read(j, "sigma_points", sp, "model_set");
  if (scheme == "nominal") return {{"nominal", {}}};
  if (scheme != "default") throw ValidationError("model_set.scheme must be 'default' or 'nominal'");
  return default_model_set(sp, narrow_specs(structural_uncertainty_specs(), c.uncertainty_bounds, "uncertainty_bounds"));
}

CodesignOptions codesign_for(const RunConfig& c) {
  CodesignOptions o = c.codesign;
  o.base = c.design;
  o.design_bounds = c.design_bounds;
  o.uncertainty_bounds = c.uncertainty_bounds;
  return o;
}

/// Design and gains of a prior result, else of the config.
std::pair<DesignVector, std::optional<ControllerGains>> design_and_gains(const RunConfig& c) {
  DesignVector x = c.design;
  std::optional<ControllerGains> g = c.gains;
  if (!c.result_path.empty()) {
    const json r = parse_json(read_text(c.result_path), "result");
    try {
      if (r.contains("design")) x = DesignVector::from_assignment(r.at("design").get<Assignment>(), x);
      if (r.contains("gains")) g = gains_from_json(r.at("gains"));
    } catch (const json::exception& e) {
      throw ValidationError(std::string("result: ") + e.what());
    }
    validate(x);
  }
  return {x, g};
}

double value_of(const json& v) {
  if (v.is_string()) return v.get<std::string>() == "inf" ? INFINITY : NAN;
  return v.get<double>();
}

ControlIndices indices_from_json(const json& j) {
  ControlIndices c;
  try {
    for (int k = 0; k < kNumIndices; ++k) {
      const auto& e = j.at("Jc" + std::to_string(k + 1));
      c.jc[static_cast<std::size_t>(k)] = value_of(e.at("value"));
      c.worst_label[static_cast<std::size_t>(k)] = e.at("worst_model").get<std::string>();
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("indices: ") + e.what());
  }
  return c;
}

SweepResult sweep_from_json(const json& j) {
  SweepResult r;
  try {
    r.parameter = j.at("parameter").get<std::string>();
    r.channel = j.at("channel").get<std::string>();
    r.grid = j.at("grid").get<std::vector<double>>();
    r.omega = j.at("omega").get<std::vector<double>>();
    r.sigma = j.at("sigma").get<std::vector<std::vector<double>>>();
    r.poles = j.at("poles").get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("sweep result: ") + e.what());
  }
  return r;
}

std::vector<double> mode_frequencies(const StateSpace& g) {
  std::vector<double> f;
  const Eigen::VectorXcd ev = g.a().eigenvalues();
  for (Index k = 0; k < ev.size(); ++k)
    if (ev(k).imag() > 1e-6 && std::abs(ev(k)) > kMassOmega) f.push_back(std::abs(ev(k)));
  std::sort(f.begin(), f.end());
  return f;
}

class Writer {
 public:
  Writer(const std::string& out, const std::string& config_path, std::vector<std::string>& written)
      : out_(out), config_(config_path), written_(written) {
    std::error_code ec;
    fs::create_directories(out_, ec);
    if (ec) throw IoError("cannot create " + out_ + ": " + ec.message());
  }

  void text(const std::string& name, const std::string& content) {
    const fs::path p = fs::path(out_) / name;
    guard(p);
    std::ofstream os(p, std::ios::binary);
    if (!os) throw IoError("cannot write " + p.string());
    os << content;
    os.close();
    if (!os) throw IoError("error writing " + p.string());
    written_.push_back(p.string());
  }

  void json_file(const std::string& name, const json& j) { text(name, j.dump(2) + "\n"); }

  void guard(const fs::path& p) const {
    std::error_code ec;
    if (!config_.empty() && fs::exists(p) && fs::equivalent(p, config_, ec))
      throw IoError("refusing to overwrite the input config " + config_);
  }

  const std::string& out() const { return out_; }

 private:
  std::string out_, config_;
  std::vector<std::string>& written_;
};

std::string csv_sweep(const SweepResult& r) {
  std::ostringstream os;
  os.precision(17);
  os << "param_value,omega,sigma\n";
  for (std::size_t k = 0; k < r.grid.size(); ++k)
    for (std::size_t w = 0; w < r.omega.size(); ++w) os << r.grid[k] << ',' << r.omega[w] << ',' << r.sigma[k][w] << '\n';
  return os.str();
}

int cmd_build(const RunConfig& c, Writer& w) {
  const Plant plant = build_plant(c.bench, c.design, c.bench.theta_sa, {});
  const AppendageSet apps = generate_appendages(c.bench, c.design);
  json parts = {{"hub", c.bench.hub.mass},
                {"yoke", {{"count", 2}, {"mass", apps.yoke.mass()}}},
                {"panel", {{"count", 2}, {"mass", apps.panel.mass()}}},
                {"srs", {{"count", 2}, {"mass", apps.srs.mass()}}},
                {"sar", {{"count", 1}, {"mass", apps.sar.mass()}}}};
  const double sum =
      c.bench.hub.mass + 2 * apps.yoke.mass() + 2 * apps.panel.mass() + 2 * apps.srs.mass() + apps.sar.mass();
  const double m = total_mass(plant);
  const double ws = launch_frequency(c.design, c.bench.panel, c.bench.lambda);
  w.json_file("plant.json", json{{"design", c.design.to_assignment()},
                             {"theta_sa", c.bench.theta_sa},
                             {"total_mass", m},
                             {"constituent_mass_sum", sum},
                             {"mass_relative_error", std::abs(m - sum) / sum},
                             {"constituents", parts},
                             {"rigid_inertia", jsonio::mat(rigid_inertia(plant))},
                             {"states", plant.system.order()},
                             {"mode_frequencies", mode_frequencies(plant.system)},
                             {"omega_sto", ws},
                             {"omega_launch", kLaunchOmega},
                             {"launch_ok", launch_passes(ws)}});
  return kExitOk;
}

int cmd_tune(const RunConfig& c, Writer& w) {
  const auto models = models_for(c);
  const LoopFamily family = LoopFamily::build(c.bench, c.design, models, c.requirements, c.workers);
  const ControllerGains init =
      c.gains ? *c.gains : initial_gains(rigid_inertia(build_plant(c.bench, c.design, c.bench.theta_sa, {})), c.requirements);
  const SynthesisResult r = tune(family, init, c.tune);
  json j = to_json(r, family);
  j.erase("wall_seconds");
  j["design"] = c.design.to_assignment();
  j["initial_gains"] = to_json(init);
  w.json_file("tune.json", j);
  return r.feasible ? kExitOk : kExitInfeasible;
}

int cmd_codesign_dist(const RunConfig& c, Writer& w) {
  const CodesignResult r = distributed_codesign(c.bench, c.requirements, codesign_for(c));
  w.json_file("codesign_dist.json", to_json(r, false));
  w.text("pareto.csv", pareto_csv(r));
  return r.feasible ? kExitOk : kExitInfeasible;
}

AppendageSurrogate surrogate_for(const RunConfig& c, const CodesignOptions& o, Writer* w) {
  if (!c.surrogate_path.empty())
    return appendage_surrogate_from_json(parse_json(read_text(c.surrogate_path), "surrogate"));
  AppendageSurrogate s = fit_appendage_surrogate(c.bench, o.base, design_box(o), c.surrogate_fit);
  if (w) w->json_file("surrogate.json", to_json(s));
  return s;
}

int cmd_codesign_mono(const RunConfig& c, Writer& w) {
  const CodesignOptions o = codesign_for(c);
  const AppendageSurrogate s = surrogate_for(c, o, &w);
  const CodesignResult r = monolithic_codesign(c.bench, c.requirements, s, o);
  w.json_file("codesign_mono.json", to_json(r, false));
  return r.feasible ? kExitOk : kExitInfeasible;
}

int cmd_fit_surrogate(const RunConfig& c, Writer& w) {
  const CodesignOptions o = codesign_for(c);
  const AppendageSurrogate s = fit_appendage_surrogate(c.bench, o.base, design_box(o), c.surrogate_fit);
  w.json_file("surrogate.json", to_json(s));
  return kExitOk;
}

int cmd_validate(const RunConfig& c, Writer& w, std::vector<std::string>& written) {
  const auto [x, g] = design_and_gains(c);
  if (!g) throw ValidationError("gains: required for validate (set 'gains' or 'result')");
  const LoopFamily family = LoopFamily::build(c.bench, x, models_for(c), c.requirements, c.workers);
  IndexOptions io = c.tune.final_indices;
  io.workers = c.workers;
  ValidationInputs in;
  in.indices = control_indices(family, *g, io);
  const auto specs = narrow_specs(structural_uncertainty_specs(), c.uncertainty_bounds, "uncertainty_bounds");
  for (WcChannel ch : c.channels) {
    const auto f = bench_gain_function(c.bench, x, c.requirements, *g, ch);
    in.worst_cases.push_back(worst_case_gain(f, specs, to_string(ch), c.worst_case));
    w.json_file("worst_case_" + to_string(ch) + ".json", to_json(in.worst_cases.back()));
  }
  w.guard(fs::path(w.out()) / "summary.json");
  const auto paths = validation_report(in, w.out());
  written.insert(written.end(), paths.begin(), paths.end());
  return kExitOk;
}

int cmd_sweep(const RunConfig& c, Writer& w) {
  if (!c.sweep) throw ValidationError("sweep: required for the sweep command");
  const auto [x, g] = design_and_gains(c);
  SweepOptions o = c.sweep->options;
  o.req = c.requirements;
  o.gains = g;
  const SweepResult r = sigma_sweep(c.bench, x, c.sweep->parameter, c.sweep->grid, o);
  w.json_file("sweep_" + r.parameter + ".json", to_json(r));
  w.text("sweep_" + r.parameter + ".csv", csv_sweep(r));
  return kExitOk;
}

int cmd_report(const RunConfig& c, Writer& w, std::vector<std::string>& written) {
  if (c.report_inputs.empty()) throw ValidationError("report_inputs: at least one file required");
  ValidationInputs in;
  for (const auto& p : c.report_inputs) {
    const json j = parse_json(read_text(p), p);
    if (j.contains("worst_gain"))
      in.worst_cases.push_back(worst_case_from_json(j));
    else if (j.contains("sigma") && j.contains("parameter"))
      in.sweeps.push_back(sweep_from_json(j));
    else if (j.contains("indices"))
      in.indices = indices_from_json(j.at("indices"));
    else
      throw ValidationError("report_inputs: '" + p + "' is not a worst-case, sweep or result file");
  }
  w.guard(fs::path(w.out()) / "summary.json");
  const auto paths = validation_report(in, w.out());
  written.insert(written.end(), paths.begin(), paths.end());
  return kExitOk;
}

json versions() {
  return {{"flexsc", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"compiler", __VERSION__},
          {"cplusplus", __cplusplus}};
}

}  // namespace

// ---------------------------------------------------------------- config

RunConfig run_config_from_json(const json& j, const std::string& base_dir) {
  const std::string w = "config";
  jsonio::check_keys(j,
                     {"bench", "requirements", "uncertainty_bounds", "design_bounds", "design", "gains", "result",
                      "model_set", "tune", "codesign", "surrogate", "worst_case", "channels", "sweep", "report_inputs",
                      "seed", "workers", "out"},
                     w);
  RunConfig c;
  if (j.contains("bench")) {
    const json& b = j.at("bench");
    if (b.is_string()) {
      c.bench_path = resolve(base_dir, b.get<std::string>());
      c.bench = bench_config_from_json(parse_json(read_text(c.bench_path), "bench"),
                                       fs::path(c.bench_path).parent_path().string());
    } else {
      c.bench = bench_config_from_json(b, base_dir);
    }
  }
  if (j.contains("requirements")) c.requirements = requirements_from_json(j.at("requirements"));
  c.uncertainty_bounds = read_bounds(j, "uncertainty_bounds", w);
  c.design_bounds = read_bounds(j, "design_bounds", w);
  (void)narrow_specs(structural_uncertainty_specs(), c.uncertainty_bounds, "uncertainty_bounds");
  if (j.contains("design")) {
    Assignment a;
    jsonio::read(j, "design", a, w);
    for (const auto& [k, v] : a) {
      try {
        (void)c.design.get(k);
      } catch (const ValidationError&) {
        throw ValidationError("design: unknown variable '" + k + "'");
      }
    }
    c.design = DesignVector::from_assignment(a);
    validate(c.design);
  }
  if (j.contains("gains")) c.gains = gains_from_json(j.at("gains"));
  if (j.contains("result")) c.result_path = resolve(base_dir, j.at("result").get<std::string>());
  if (j.contains("model_set")) {
    c.model_set = j.at("model_set");
    (void)models_for(c);
  }
  if (j.contains("tune")) c.tune = tune_options_from_json(j.at("tune"));
  if (j.contains("codesign")) {
    const json& cj = j.at("codesign");
    for (const char* k : {"base", "design_bounds", "uncertainty_bounds"})
      if (cj.is_object() && cj.contains(k))
        throw ValidationError(std::string("codesign.") + k + ": set the top-level '" +
                              (std::string(k) == "base" ? "design" : k) + "' instead");
    c.codesign = codesign_options_from_json(cj);
  }
  if (j.contains("surrogate")) {
    const json& s = j.at("surrogate");
    jsonio::check_keys(s, {"path", "samples", "degree", "seed"}, "surrogate");
    std::string p;
    jsonio::read(s, "path", p, "surrogate");
    c.surrogate_path = resolve(base_dir, p);
    jsonio::read(s, "samples", c.surrogate_fit.samples, "surrogate");
    jsonio::read(s, "degree", c.surrogate_fit.degree, "surrogate");
    jsonio::read(s, "seed", c.surrogate_fit.seed, "surrogate");
    if (c.surrogate_fit.samples < 5) throw ValidationError("surrogate.samples: must be >= 5");
    if (c.surrogate_fit.degree < 0) throw ValidationError("surrogate.degree: must be >= 0");
  }
  if (j.contains("worst_case")) c.worst_case = worst_case_options_from_json(j.at("worst_case"));
  if (j.contains("channels")) {
    std::vector<std::string> names;
    jsonio::read(j, "channels", names, w);
    if (names.empty()) throw ValidationError("channels: must not be empty");
    c.channels.clear();
    for (const auto& n : names) c.channels.push_back(wc_channel_from_string(n));
  }
  if (j.contains("sweep")) c.sweep = read_sweep(j.at("sweep"));
  if (j.contains("report_inputs")) {
    std::vector<std::string> in;
    jsonio::read(j, "report_inputs", in, w);
    for (auto& p : in) c.report_inputs.push_back(resolve(base_dir, p));
  }
  if (j.contains("seed")) {
    std::uint64_t s = 0;
    jsonio::read(j, "seed", s, w);
    apply_seed(c, s);
  }
  if (j.contains("workers")) {
    int n = 1;
    jsonio::read(j, "workers", n, w);
    apply_workers(c, n);
  } else {
    apply_workers(c, 1);
  }
  if (j.contains("out")) c.out = resolve(base_dir, j.at("out").get<std::string>());
  (void)design_box(codesign_for(c));
  return c;
}

json to_json(const RunConfig& c) {
  std::vector<std::string> ch;
  for (auto x : c.channels) ch.push_back(to_string(x));
  json co = to_json(c.codesign);
  co.erase("base");
  co.erase("design_bounds");
  co.erase("uncertainty_bounds");
  json j = {{"bench", c.bench_path.empty() ? to_json(c.bench) : json(c.bench_path)},
            {"requirements", to_json(c.requirements)},
            {"uncertainty_bounds", c.uncertainty_bounds},
            {"design_bounds", c.design_bounds},
            {"design", c.design.to_assignment()},
            {"model_set", c.model_set},
            {"tune", to_json(c.tune)},
            {"codesign", co},
            {"surrogate",
             {{"samples", c.surrogate_fit.samples}, {"degree", c.surrogate_fit.degree}, {"seed", c.surrogate_fit.seed}}},
            {"worst_case", to_json(c.worst_case)},
            {"channels", ch},
            {"report_inputs", c.report_inputs},
            {"workers", c.workers},
            {"out", c.out}};
  if (!c.surrogate_path.empty()) j["surrogate"]["path"] = c.surrogate_path;
  if (c.gains) j["gains"] = to_json(*c.gains);
  if (!c.result_path.empty()) j["result"] = c.result_path;
  if (c.seed) j["seed"] = *c.seed;
  if (c.sweep)
    j["sweep"] = {{"parameter", c.sweep->parameter},
                  {"grid", c.sweep->grid},
                  {"channel", c.sweep->options.channel},
                  {"omega", c.sweep->options.omega}};
  return j;
}

void apply_overrides(RunConfig& c, const std::string& command, const CliOverrides& o) {
  if (o.seed) apply_seed(c, *o.seed);
  if (o.workers) apply_workers(c, *o.workers);
  if (o.out) c.out = *o.out;
  if (o.channel) {
    if (command == "validate") {
      c.channels = {wc_channel_from_string(*o.channel)};
    } else if (command == "sweep") {
      if (!c.sweep) throw ValidationError("--channel: the config has no 'sweep' section");
      c.sweep->options.channel = *o.channel;
    } else {
      throw ValidationError("--channel: only valid for validate and sweep");
    }
  }
  if (o.budget) {
    if (*o.budget < 1) throw ValidationError("--budget: must be >= 1");
    if (command == "tune")
      c.tune.budget = *o.budget;
    else if (command == "codesign-dist")
      c.codesign.tune.budget = *o.budget;
    else if (command == "codesign-mono")
      c.codesign.mono_budget = *o.budget;
    else if (command == "validate")
      c.worst_case.budget = *o.budget;
    else
      throw ValidationError("--budget: only valid for tune, codesign-dist, codesign-mono and validate");
  }
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256 failed");
  }
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

const std::vector<std::string>& cli_commands() {
  static const std::vector<std::string> c = {"build",         "tune",     "codesign-dist", "codesign-mono",
                                             "fit-surrogate", "validate", "sweep",         "report"};
  return c;
}

int run_command(const std::string& command, const RunConfig& c, const std::string& config_text,
                const std::string& config_path, std::vector<std::string>& written) {
  const auto t0 = std::chrono::steady_clock::now();
  Writer w(c.out, config_path, written);
  int code = kExitOk;
  if (command == "build")
    code = cmd_build(c, w);
  else if (command == "tune")
    code = cmd_tune(c, w);
  else if (command == "codesign-dist")
    code = cmd_codesign_dist(c, w);
  else if (command == "codesign-mono")
    code = cmd_codesign_mono(c, w);
  else if (command == "fit-surrogate")
    code = cmd_fit_surrogate(c, w);
  else if (command == "validate")
    code = cmd_validate(c, w, written);
  else if (command == "sweep")
    code = cmd_sweep(c, w);
  else if (command == "report")
    code = cmd_report(c, w, written);
  else
    throw ValidationError("unknown command '" + command + "'");
  std::vector<std::string> outputs;
  for (const auto& p : written) outputs.push_back(fs::path(p).filename().string());
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json m = {{"command", command},
            {"config_path", config_path},
            {"config_sha256", sha256_hex(config_text)},
            {"seed", c.seed ? json(*c.seed) : json(nullptr)},
            {"workers", c.workers},
            {"versions", versions()},
            {"effective_config", to_json(c)},
            {"outputs", outputs},
            {"exit_code", code},
            {"wall_seconds", wall}};
  w.json_file("manifest.json", m);
  return code;
}

int cli_main(int argc, char** argv) {
  CLI::App app{"Flexible spacecraft control/structure co-design"};
  std::string command, config_path;
  CliOverrides o;
  std::uint64_t seed = 0;
  int workers = 1, budget = 0;
  std::string out, channel;
  app.add_option("command", command, "build | tune | codesign-dist | codesign-mono | fit-surrogate | validate | sweep | report")
      ->required()
      ->check(CLI::IsMember(cli_commands()));
  app.add_option("--config", config_path, "run configuration (JSON)");
  auto* seed_opt = app.add_option("--seed", seed, "seed for every stochastic stage");
  auto* workers_opt = app.add_option("--workers", workers, "worker threads");
  auto* out_opt = app.add_option("--out", out, "output directory");
  auto* channel_opt = app.add_option("--channel", channel, "APE | RPE | Command | Sensitivity, or in->out for sweeps");
  auto* budget_opt = app.add_option("--budget", budget, "evaluation budget of the command's optimizer");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }
  if (*seed_opt) o.seed = seed;
  if (*workers_opt) o.workers = workers;
  if (*out_opt) o.out = out;
  if (*channel_opt) o.channel = channel;
  if (*budget_opt) o.budget = budget;
  try {
    std::string text = "{}";
    RunConfig c;
    if (!config_path.empty()) {
      text = read_text(config_path);
      c = run_config_from_json(parse_json(text, "config"), fs::path(config_path).parent_path().string());
    } else {
      c = run_config_from_json(json::object());
    }
    apply_overrides(c, command, o);
    std::vector<std::string> written;
    const int code = run_command(command, c, text, config_path, written);
    for (const auto& p : written) std::cout << p << '\n';
    if (code == kExitInfeasible) std::cerr << command << ": optimization did not reach feasibility\n";
    return code;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace flexsc
