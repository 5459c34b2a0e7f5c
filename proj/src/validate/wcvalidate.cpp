#include "flexsc/validate/wcvalidate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "flexsc/common/error.hpp"
#include "flexsc/common/json_util.hpp"
#include "flexsc/common/parallel.hpp"
#include "flexsc/lti/frequency.hpp"
#include "flexsc/lti/interconnect.hpp"

namespace flexsc {

using nlohmann::json;

// ---------------------------------------------------------------- channels

const std::vector<WcChannel>& all_wc_channels() {
  static const std::vector<WcChannel> c = {WcChannel::ape, WcChannel::rpe, WcChannel::command,
                                           WcChannel::sensitivity};
  return c;
}

std::string to_string(WcChannel c) {
  switch (c) {
    case WcChannel::ape: return "APE";
    case WcChannel::rpe: return "RPE";
    case WcChannel::command: return "Command";
    case WcChannel::sensitivity: return "Sensitivity";
  }
  return "";
}

WcChannel wc_channel_from_string(const std::string& s) {
  std::string l = s;
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  for (WcChannel c : all_wc_channels()) {
    std::string n = to_string(c);
    std::transform(n.begin(), n.end(), n.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (n == l) return c;
  }
  throw ValidationError("channel must be one of APE, RPE, Command, Sensitivity (got '" + s + "')");
}

int index_of(WcChannel c) {
  switch (c) {
    case WcChannel::ape: return 1;
    case WcChannel::rpe: return 2;
    case WcChannel::command: return 3;
    case WcChannel::sensitivity: return 4;
  }
  return 1;
}

GainFunction bench_gain_function(const BenchConfig& cfg, const DesignVector& x, const Requirements& req,
                                 const ControllerGains& g, WcChannel channel) {
  auto apps = std::make_shared<const AppendageSet>(generate_appendages(cfg, x));
  auto av = std::make_shared<const Avionics>(avionics());
  auto w = std::make_shared<const Weights>(weights(req));
  const int idx = index_of(channel);
  return [cfg, apps, av, w, g, idx](const Assignment& delta, double theta) {
    const Plant p = assemble_plant(cfg, *apps, theta, delta);
    return index_value(generalized_plant(p, *av, *w), g, idx, false);
  };
}

// ---------------------------------------------------------------- worst case

void validate(const WorstCaseOptions& o) {
  if (o.n_tau < 2) throw ValidationError("worst_case.n_tau must be >= 2");
  if (o.budget < 0) throw ValidationError("worst_case.budget must be >= 0");
  if (!(o.initial_step > 0.0) || !(o.min_step > 0.0)) throw ValidationError("worst_case steps must be positive");
  if (o.workers < 1) throw ValidationError("worst_case.workers must be >= 1");
}

json to_json(const WorstCaseOptions& o) {
  return {{"n_tau", o.n_tau},
          {"vertices", o.vertices},
          {"budget", o.budget},
          {"initial_step", o.initial_step},
          {"min_step", o.min_step}};
}

WorstCaseOptions worst_case_options_from_json(const json& j) {
  const std::string w = "worst_case";
  jsonio::check_keys(j, {"n_tau", "vertices", "budget", "initial_step", "min_step"}, w);
  WorstCaseOptions o;
  jsonio::read(j, "n_tau", o.n_tau, w);
  jsonio::read(j, "vertices", o.vertices, w);
  jsonio::read(j, "budget", o.budget, w);
  jsonio::read(j, "initial_step", o.initial_step, w);
  jsonio::read(j, "min_step", o.min_step, w);
  validate(o);
  return o;
}

namespace {

struct Search {
  double best = -1.0;
  Assignment arg;
  std::vector<double> trace;
  int evaluations = 0;
};

void consider(Search& s, const Assignment& a, double v) {
  ++s.evaluations;
  if (v > s.best) {
    s.best = v;
    s.arg = a;
  }
  s.trace.push_back(s.best);
}

Search search_at(const GainFunction& f, const std::vector<ParameterSpec>& specs, const std::vector<Assignment>& starts,
                 double theta, const WorstCaseOptions& opt) {
  Search s;
  for (const auto& a : starts) consider(s, a, f(a, theta));
  double frac = opt.initial_step;
  int used = 0;
  while (frac >= opt.min_step && used < opt.budget) {
    bool improved = false;
    for (const auto& p : specs) {
      for (double sgn : {1.0, -1.0}) {
        if (used >= opt.budget) break;
        Assignment c = s.arg;
        const double cur = c.at(p.name);
        c[p.name] = std::clamp(cur + sgn * frac * 0.5 * (p.hi - p.lo), p.lo, p.hi);
        if (c[p.name] == cur) continue;
        const double before = s.best;
        consider(s, c, f(c, theta));
        ++used;
        if (s.best > before) {
          improved = true;
          break;
        }
      }
    }
    if (!improved) frac *= 0.5;
  }
  return s;
}

Assignment with_sigma4(Assignment a, double theta) {
  a["sigma4"] = theta_to_sigma4(theta);
  return a;
}

}  // namespace

WorstCaseResult worst_case_gain(const GainFunction& f, const std::vector<ParameterSpec>& specs,
                                const std::string& channel, const WorstCaseOptions& opt) {
  validate(opt);
  for (const auto& p : specs)
    if (p.name == "sigma4") throw ValidationError("worst_case: sigma4 is gridded, not searched");
  Assignment nominal;
  for (const auto& p : specs) nominal[p.name] = p.nominal;
  std::vector<Assignment> starts = {nominal};
  for (bool upper : {false, true}) {
    Assignment corner = nominal;
    bool any = false;
    for (const char* n : {"Ixx_B", "Iyy_B", "Izz_B"})
      for (const auto& p : specs)
        if (p.name == n) {
          corner[n] = upper ? p.hi : p.lo;
          any = true;
        }
    if (any) starts.push_back(corner);
  }
  if (opt.vertices && !specs.empty()) {
    if (specs.size() > 12) throw ValidationError("worst_case: more than 12 parameters for vertex starts");
    const auto v = sample_assignments(specs, SamplingScheme::vertices, 0, 0);
    starts.insert(starts.end(), v.begin(), v.end());
  }
  std::vector<Assignment> off_grid;
  for (const auto& a : opt.extra_starts) {
    validate_assignment(specs, [&] {
      Assignment b = a;
      b.erase("sigma4");
      return b;
    }());
    Assignment full = nominal;
    for (const auto& [k, v] : a)
      if (k != "sigma4") full[k] = v;
    if (a.count("sigma4")) {
      if (std::abs(a.at("sigma4")) > 1.0) throw ValidationError("worst_case: extra start sigma4 outside [-1, 1]");
      full["sigma4"] = a.at("sigma4");
      off_grid.push_back(full);
    } else {
      starts.push_back(full);
    }
  }

  WorstCaseResult r;
  r.channel = channel;
  r.theta = sigma4_grid(opt.n_tau);
  std::vector<Search> per(r.theta.size());
  parallel_for(r.theta.size(), opt.workers, [&](std::size_t k) { per[k] = search_at(f, specs, starts, r.theta[k], opt); });
  r.worst_gain = -1.0;
  for (std::size_t k = 0; k < per.size(); ++k) {
    r.per_theta.push_back(per[k].best);
    r.per_theta_worst.push_back(with_sigma4(per[k].arg, r.theta[k]));
    r.trace.insert(r.trace.end(), per[k].trace.begin(), per[k].trace.end());
    r.evaluations += per[k].evaluations;
    if (per[k].best > r.worst_gain) {
      r.worst_gain = per[k].best;
      r.worst = r.per_theta_worst.back();
      r.worst_theta = r.theta[k];
    }
  }
  for (const auto& a : off_grid) {
    Assignment d = a;
    const double th = sigma4_to_theta(d.at("sigma4"));
    d.erase("sigma4");
    const double v = f(d, th);
    ++r.evaluations;
    if (v > r.worst_gain) {
      r.worst_gain = v;
      r.worst = a;
      r.worst_theta = th;
    }
    r.trace.push_back(r.worst_gain);
  }
  r.nominal_gain = f(nominal, 0.0);
  ++r.evaluations;
  return r;
}

namespace {

json assignment_json(const Assignment& a) { return json(a); }

}  // namespace

json to_json(const WorstCaseResult& r) {
  json pw = json::array();
  for (const auto& a : r.per_theta_worst) pw.push_back(assignment_json(a));
  return {{"channel", r.channel},     {"worst_gain", r.worst_gain}, {"worst", assignment_json(r.worst)},
          {"worst_theta", r.worst_theta}, {"nominal_gain", r.nominal_gain}, {"theta", r.theta},
          {"per_theta", r.per_theta}, {"per_theta_worst", pw},      {"trace", r.trace},
          {"evaluations", r.evaluations}, {"bound", "lower"}};
}

WorstCaseResult worst_case_from_json(const json& j) {
  jsonio::check_keys(j,
                     {"channel", "worst_gain", "worst", "worst_theta", "nominal_gain", "theta", "per_theta",
                      "per_theta_worst", "trace", "evaluations", "bound", "pass"},
                     "worst_case_result");
  WorstCaseResult r;
  try {
    r.channel = j.at("channel").get<std::string>();
    r.worst_gain = j.at("worst_gain").get<double>();
    r.worst = j.at("worst").get<Assignment>();
    r.worst_theta = j.at("worst_theta").get<double>();
    r.nominal_gain = j.at("nominal_gain").get<double>();
    r.theta = j.at("theta").get<std::vector<double>>();
    r.per_theta = j.at("per_theta").get<std::vector<double>>();
    r.per_theta_worst = j.at("per_theta_worst").get<std::vector<Assignment>>();
    r.trace = j.at("trace").get<std::vector<double>>();
    r.evaluations = j.at("evaluations").get<int>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("worst_case_result: ") + e.what());
  }
  return r;
}

// ---------------------------------------------------------------- sweep

namespace {

std::vector<double> mode_frequencies(const StateSpace& g) {
  const ModalBasis b(g.a());
  std::vector<double> f;
  for (Index k = 0; k < b.eigenvalues().size(); ++k) {
    const cdouble l = b.eigenvalues()(k);
    if (l.imag() > 1e-6 && std::abs(l) > kMassOmega) f.push_back(std::abs(l));
  }
  std::sort(f.begin(), f.end());
  return f;
}

std::pair<std::string, std::string> split_channel(const std::string& c) {
  const auto p = c.find("->");
  return {c.substr(0, p), c.substr(p + 2)};
}

}  // namespace

SweepResult sigma_sweep(const BenchConfig& cfg, const DesignVector& base, const std::string& parameter,
                        const std::vector<double>& grid, const SweepOptions& opt) {
  if (grid.empty()) throw ValidationError("sweep: grid must not be empty");
  double lo = -M_PI, hi = M_PI;
  if (parameter != "theta_sa") {
    const auto spec = design_specs({parameter});
    lo = spec[0].lo;
    hi = spec[0].hi;
  }
  for (double v : grid)
    if (!(v >= lo && v <= hi))
      throw ValidationError("sweep: grid value " + std::to_string(v) + " outside the range of '" + parameter + "'");
  const bool open_loop = opt.channel.find("->") != std::string::npos;
  std::optional<WcChannel> ch;
  if (!open_loop) {
    ch = wc_channel_from_string(opt.channel);
    if (!opt.gains) throw ValidationError("sweep: closed-loop channel '" + opt.channel + "' requires gains");
  }
  SweepResult r;
  r.parameter = parameter;
  r.channel = opt.channel;
  r.grid = grid;
  r.omega = opt.omega.empty() ? logspace(-3.0, 2.0, 200) : opt.omega;
  r.sigma.resize(grid.size());
  r.poles.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    DesignVector x = base;
    double theta = cfg.theta_sa;
    if (parameter == "theta_sa")
      theta = grid[k];
    else
      x.set(parameter, grid[k]);
    const Plant plant = build_plant(cfg, x, theta, {});
    StateSpace g;
    if (open_loop) {
      const auto [in, out] = split_channel(opt.channel);
      if (!plant.system.has_input(in) || !plant.system.has_output(out))
        throw ValidationError("sweep: plant has no channel '" + opt.channel + "'");
      g = plant.system.select({in}, {out});
    } else {
      static const char* in_port[] = {"", "T_ext_n", "T_ext_n", "T_ext_n", "d_T"};
      static const char* out_port[] = {"", "ape", "rpe", "u_n", "T_n"};
      const int idx = index_of(*ch);
      const auto gp = generalized_plant(plant, avionics(), weights(opt.req));
      g = close_static_feedback(gp.system, "u", "y", controller_matrix(*opt.gains)).select({in_port[idx]}, {out_port[idx]});
    }
    r.sigma[k] = frequency_response(g, r.omega).sigma_max;
    r.poles[k] = mode_frequencies(plant.system);
  }
  return r;
}

json to_json(const SweepResult& r) {
  return {{"parameter", r.parameter}, {"channel", r.channel}, {"grid", r.grid},
          {"omega", r.omega},         {"sigma", r.sigma},     {"poles", r.poles}};
}

// ---------------------------------------------------------------- report

json validation_summary(const ValidationInputs& in) {
  json j;
  j["bound"] = "Worst-case gains are sampled lower bounds with local refinement; no upper bound is computed. "
               "Validated means no sampled violation and every refined lower bound below 1.";
  if (in.indices) j["indices"] = to_json(*in.indices);
  json wc = json::array();
  json binding = json::array();
  bool pass = true;
  for (const auto& r : in.worst_cases) {
    json e = to_json(r);
    e["pass"] = r.worst_gain <= 1.0;
    pass = pass && r.worst_gain <= 1.0;
    if (r.worst_gain >= kBindingThreshold) binding.push_back(r.channel);
    wc.push_back(e);
  }
  j["worst_cases"] = wc;
  j["binding"] = binding;
  j["binding_threshold"] = kBindingThreshold;
  j["pass"] = pass && (!in.indices || in.indices->feasible());
  json sw = json::array();
  for (const auto& s : in.sweeps)
    sw.push_back({{"parameter", s.parameter}, {"channel", s.channel}, {"grid", s.grid}, {"poles", s.poles}});
  j["sweeps"] = sw;
  return j;
}

namespace {

std::string write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw IoError("cannot write " + p.string());
  os << content;
  os.close();
  if (!os) throw IoError("error writing " + p.string());
  return p.string();
}

}  // namespace

std::vector<std::string> validation_report(const ValidationInputs& in, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
  std::vector<std::string> paths;
  paths.push_back(write_file(fs::path(out_dir) / "summary.json", validation_summary(in).dump(2) + "\n"));
  for (const auto& r : in.worst_cases) {
    std::ostringstream os;
    os.precision(17);
    os << "theta_sa,worst_gain\n";
    for (std::size_t k = 0; k < r.theta.size(); ++k) os << r.theta[k] << ',' << r.per_theta[k] << '\n';
    paths.push_back(write_file(fs::path(out_dir) / ("worst_case_" + r.channel + ".csv"), os.str()));
  }
  for (std::size_t s = 0; s < in.sweeps.size(); ++s) {
    const auto& sw = in.sweeps[s];
    std::ostringstream os;
    os.precision(17);
    os << "param_value,omega,sigma\n";
    for (std::size_t k = 0; k < sw.grid.size(); ++k)
      for (std::size_t w = 0; w < sw.omega.size(); ++w) os << sw.grid[k] << ',' << sw.omega[w] << ',' << sw.sigma[k][w] << '\n';
    paths.push_back(
        write_file(fs::path(out_dir) / ("sweep_" + sw.parameter + "_" + std::to_string(s) + ".csv"), os.str()));
  }
  return paths;
}

}  // namespace flexsc
