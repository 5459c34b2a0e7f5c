#include "flexsc/codesign/codesign.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <set>
#include <sstream>

#include "flexsc/common/error.hpp"
#include "flexsc/common/json_util.hpp"
#include "flexsc/common/parallel.hpp"

namespace flexsc {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json number(double v) {
  if (std::isnan(v)) return nullptr;
  return std::isfinite(v) ? json(v) : json(v > 0 ? "inf" : "-inf");
}

}  // namespace

// ---------------------------------------------------------------- PSO

void validate(const PsoOptions& o) {
  if (o.iterations < 1 || o.swarm < 1) throw ValidationError("pso: iterations and swarm must be >= 1");
  if (!(o.velocity_clamp > 0.0)) throw ValidationError("pso: velocity_clamp must be positive");
  if (o.workers < 1) throw ValidationError("pso: workers must be >= 1");
}

json to_json(const PsoOptions& o) {
  return {{"iterations", o.iterations}, {"swarm", o.swarm},     {"seed", o.seed},
          {"inertia", o.inertia},       {"cognitive", o.cognitive}, {"social", o.social},
          {"velocity_clamp", o.velocity_clamp}};
}

PsoOptions pso_options_from_json(const json& j) {
  const std::string w = "pso";
  jsonio::check_keys(j, {"iterations", "swarm", "seed", "inertia", "cognitive", "social", "velocity_clamp"}, w);
  PsoOptions o;
  jsonio::read(j, "iterations", o.iterations, w);
  jsonio::read(j, "swarm", o.swarm, w);
  jsonio::read(j, "seed", o.seed, w);
  jsonio::read(j, "inertia", o.inertia, w);
  jsonio::read(j, "cognitive", o.cognitive, w);
  jsonio::read(j, "social", o.social, w);
  jsonio::read(j, "velocity_clamp", o.velocity_clamp, w);
  validate(o);
  return o;
}

PsoResult pso_minimize(const std::function<double(const std::vector<double>&)>& f, const std::vector<double>& lo,
                       const std::vector<double>& hi, const PsoOptions& opt) {
  return pso_minimize([&](const std::vector<double>& x, int, int) { return f(x); }, lo, hi, opt);
}

PsoResult pso_minimize(const std::function<double(const std::vector<double>&, int, int)>& f,
                       const std::vector<double>& lo, const std::vector<double>& hi, const PsoOptions& opt) {
  validate(opt);
  const std::size_t d = lo.size();
  if (d == 0 || hi.size() != d) throw ValidationError("pso: bounds must be nonempty and of equal length");
  for (std::size_t k = 0; k < d; ++k)
    if (!std::isfinite(lo[k]) || !std::isfinite(hi[k]) || !(lo[k] < hi[k]))
      throw ValidationError("pso: bounds must be finite with lo < hi");

  const auto ns = static_cast<std::size_t>(opt.swarm);
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<double> vmax(d);
  for (std::size_t k = 0; k < d; ++k) vmax[k] = opt.velocity_clamp * (hi[k] - lo[k]);

  std::vector<std::vector<double>> x(ns, std::vector<double>(d)), v = x;
  for (std::size_t p = 0; p < ns; ++p)
    for (std::size_t k = 0; k < d; ++k) {
      x[p][k] = lo[k] + u01(rng) * (hi[k] - lo[k]);
      v[p][k] = (2.0 * u01(rng) - 1.0) * vmax[k];
    }

  PsoResult res;
  res.value = kInf;
  std::vector<std::vector<double>> pbest = x;
  std::vector<double> pval(ns, kInf), val(ns);
  for (int it = 0; it < opt.iterations; ++it) {
    parallel_for(ns, opt.workers, [&](std::size_t p) { val[p] = f(x[p], it, static_cast<int>(p)); });
    for (std::size_t p = 0; p < ns; ++p) {
      res.history.push_back({it, static_cast<int>(p), x[p], val[p]});
      if (val[p] < pval[p]) {
        pval[p] = val[p];
        pbest[p] = x[p];
      }
      if (val[p] < res.value) {
        res.value = val[p];
        res.x = x[p];
      }
    }
    if (res.x.empty()) res.x = x[0];
    res.best_per_iteration.push_back(res.value);
    if (it + 1 == opt.iterations) break;
    for (std::size_t p = 0; p < ns; ++p)
      for (std::size_t k = 0; k < d; ++k) {
        const double r1 = u01(rng), r2 = u01(rng);
        double vk = opt.inertia * v[p][k] + opt.cognitive * r1 * (pbest[p][k] - x[p][k]) +
                    opt.social * r2 * (res.x[k] - x[p][k]);
        vk = std::clamp(vk, -vmax[k], vmax[k]);
        double xk = x[p][k] + vk;
        if (xk < lo[k] || xk > hi[k]) {
          xk = std::clamp(xk, lo[k], hi[k]);
          vk = 0.0;
        }
        x[p][k] = xk;
        v[p][k] = vk;
      }
  }
  return res;
}

// ---------------------------------------------------------------- surrogate

const std::vector<std::string>& default_design_subset() {
  static const std::vector<std::string> s = {"t_sP", "t_cP", "R_SRS", "t_cV"};
  return s;
}

namespace {

const std::array<const char*, 4> kParts = {"yoke", "panel", "srs", "sar"};

ModalAppendageData& part(AppendageSet& s, const std::string& name) {
  if (name == "yoke") return s.yoke;
  if (name == "panel") return s.panel;
  if (name == "srs") return s.srs;
  return s.sar;
}

const ModalAppendageData& part(const AppendageSet& s, const std::string& name) {
  return part(const_cast<AppendageSet&>(s), name);
}

std::map<std::string, MatrixXd> flatten(const ModalAppendageData& d) {
  std::map<std::string, MatrixXd> m;
  m["mr"] = d.mr;
  if (d.n_modes() > 0) {
    m["freq"] = d.freq;
    m["lp"] = d.lp;
    for (const auto& p : d.ports) m["phi_c:" + p.name] = p.phi_c;
  }
  return m;
}

ModalAppendageData unflatten(const ModalAppendageData& ref, const std::map<std::string, MatrixXd>& m) {
  ModalAppendageData d = ref;
  d.mr = m.at("mr");
  d.mr = 0.5 * (d.mr + d.mr.transpose());
  if (ref.n_modes() > 0) {
    d.freq = m.at("freq");
    d.lp = m.at("lp");
    for (auto& p : d.ports) p.phi_c = m.at("phi_c:" + p.name);
  }
  return d;
}

DesignVector with_subset(const DesignVector& base, const Assignment& a) { return DesignVector::from_assignment(a, base); }

}  // namespace

double AppendageSurrogate::holdout_max_rel_error() const {
  double w = 0.0;
  for (const auto& [n, s] : parts) w = std::max(w, s.holdout_max_rel_error);
  return w;
}

double AppendageSurrogate::in_sample_max_rel_error() const {
  double w = 0.0;
  for (const auto& [n, s] : parts) w = std::max(w, s.in_sample_max_rel_error);
  return w;
}

AppendageSurrogate fit_appendage_surrogate(const BenchConfig& cfg, const DesignVector& base,
                                           const std::vector<std::string>& subset, const SurrogateFitOptions& opt) {
  return fit_appendage_surrogate(cfg, base, design_specs(subset), opt);
}

AppendageSurrogate fit_appendage_surrogate(const BenchConfig& cfg, const DesignVector& base,
                                           const std::vector<ParameterSpec>& box, const SurrogateFitOptions& opt) {
  validate(base);
  std::vector<std::string> subset;
  for (const auto& b : box) {
    validate(b);
    (void)design_specs({b.name});
    subset.push_back(b.name);
  }
  AppendageSurrogate s;
  s.subset = subset;
  s.base = base;
  s.reference = generate_appendages(cfg, base);
  std::vector<Assignment> designs;
  if (!subset.empty()) {
    designs = sample_assignments(box, SamplingScheme::vertices, 0, 0);
    const auto rnd = sample_assignments(box, SamplingScheme::random, opt.samples, opt.seed);
    designs.insert(designs.end(), rnd.begin(), rnd.end());
  } else {
    designs.push_back({});
  }
  std::vector<AppendageSet> data(designs.size());
  for (std::size_t i = 0; i < designs.size(); ++i) data[i] = generate_appendages(cfg, with_subset(base, designs[i]));
  for (const char* name : kParts) {
    std::vector<SurrogateSample> samples;
    for (std::size_t i = 0; i < designs.size(); ++i) samples.push_back({designs[i], flatten(part(data[i], name))});
    s.parts[name] = fit_surrogate(samples, box, subset.empty() ? 0 : opt.degree);
  }
  return s;
}

AppendageSet eval_appendage_surrogate(const AppendageSurrogate& s, const Assignment& a, bool* crossing) {
  for (const auto& [k, v] : a)
    if (std::find(s.subset.begin(), s.subset.end(), k) == s.subset.end())
      throw ValidationError("surrogate: '" + k + "' is not a fitted design variable");
  AppendageSet out = s.reference;
  bool crossed = false;
  for (const char* name : kParts) {
    Assignment full = a;
    for (const auto& n : s.subset)
      if (!full.count(n)) full[n] = s.base.get(n);
    ModalAppendageData d = unflatten(part(s.reference, name), eval_surrogate(s.parts.at(name), full));
    crossed = sort_modes(d) || crossed;
    part(out, name) = d;
  }
  if (crossing) *crossing = crossed;
  return out;
}

json to_json(const AppendageSurrogate& s) {
  json parts = json::object(), ref = json::object();
  for (const char* name : kParts) {
    parts[name] = to_json(s.parts.at(name));
    ref[name] = to_json(part(s.reference, name));
  }
  return {{"subset", s.subset}, {"base", s.base.to_assignment()}, {"reference", ref}, {"parts", parts},
          {"holdout_max_rel_error", number(s.holdout_max_rel_error())},
          {"in_sample_max_rel_error", s.in_sample_max_rel_error()}};
}

AppendageSurrogate appendage_surrogate_from_json(const json& j) {
  jsonio::check_keys(j, {"subset", "base", "reference", "parts", "holdout_max_rel_error", "in_sample_max_rel_error"},
                     "surrogate");
  AppendageSurrogate s;
  try {
    s.subset = j.at("subset").get<std::vector<std::string>>();
    s.base = DesignVector::from_assignment(j.at("base").get<Assignment>());
    for (const char* name : kParts) {
      part(s.reference, name) = modal_data_from_json(j.at("reference").at(name));
      s.parts[name] = surrogate_from_json(j.at("parts").at(name));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("surrogate: ") + e.what());
  }
  return s;
}

// ---------------------------------------------------------------- co-design

json to_json(const CodesignOptions& o) {
  return {{"design_subset", o.design_subset}, {"base", o.base.to_assignment()}, {"pso", to_json(o.pso)},
          {"tune", to_json(o.tune)},          {"model_scheme", o.model_scheme}, {"sigma_points", o.sigma_points},   {"mono_budget", o.mono_budget},
          {"w_m", o.w_m},                     {"w_c", o.w_c},                   {"design_bounds", o.design_bounds},
          {"uncertainty_bounds", o.uncertainty_bounds}};
}

std::vector<ParameterSpec> design_box(const CodesignOptions& o) {
  for (const auto& [name, r] : o.design_bounds)
    if (std::find(o.design_subset.begin(), o.design_subset.end(), name) == o.design_subset.end())
      throw ValidationError("codesign.design_bounds: '" + name + "' is not in design_subset");
  return narrow_specs(design_specs(o.design_subset), o.design_bounds, "codesign.design_bounds");
}

CodesignOptions codesign_options_from_json(const json& j) {
  const std::string w = "codesign";
  jsonio::check_keys(j, {"design_subset", "base", "pso", "tune", "model_scheme", "sigma_points", "mono_budget", "w_m", "w_c",
                         "design_bounds", "uncertainty_bounds"}, w);
  CodesignOptions o;
  jsonio::read(j, "design_subset", o.design_subset, w);
  if (j.contains("base")) {
    Assignment a;
    jsonio::read(j, "base", a, w);
    for (const auto& [k, v] : a) (void)o.base.get(k);
    o.base = DesignVector::from_assignment(a);
    validate(o.base);
  }
  if (j.contains("pso")) o.pso = pso_options_from_json(j.at("pso"));
  if (j.contains("tune")) o.tune = tune_options_from_json(j.at("tune"));
  jsonio::read(j, "model_scheme", o.model_scheme, w);
  jsonio::read(j, "sigma_points", o.sigma_points, w);
  jsonio::read(j, "mono_budget", o.mono_budget, w);
  jsonio::read(j, "w_m", o.w_m, w);
  jsonio::read(j, "w_c", o.w_c, w);
  jsonio::read(j, "design_bounds", o.design_bounds, w);
  jsonio::read(j, "uncertainty_bounds", o.uncertainty_bounds, w);
  (void)design_box(o);
  (void)tuning_models(o);
  if (o.mono_budget < 0) throw ValidationError("codesign.mono_budget must be >= 0");
  if (!(o.w_m >= 0.0) || !(o.w_c >= 0.0)) throw ValidationError("codesign weights must be >= 0");
  return o;
}

std::vector<ModelSpec> tuning_models(const CodesignOptions& o) {
  if (o.model_scheme != "default" && o.model_scheme != "nominal")
    throw ValidationError("codesign.model_scheme must be 'default' or 'nominal'");
  if (o.model_scheme == "nominal") return {{"nominal", {}}};
  if (o.sigma_points < 0) throw ValidationError("codesign.sigma_points must be >= 0");
  return default_model_set(o.sigma_points, narrow_specs(structural_uncertainty_specs(), o.uncertainty_bounds,
                                                        "codesign.uncertainty_bounds"));
}

double reference_mass(const BenchConfig& cfg) { return total_mass(build_plant(cfg, design_max(), cfg.theta_sa, {})); }

double system_objective(double mass, double mass_ref, const IndexValues& jc) {
  double s = mass / mass_ref;
  for (double v : jc) s += v;
  return std::isfinite(s) ? s : kLaunchFailureObjective;
}

ParticleRecord evaluate_design(const BenchConfig& cfg, const Requirements& req, const DesignVector& x,
                               const std::vector<ModelSpec>& models, const TuneOptions& tune_opt, double mass_ref) {
  ParticleRecord r;
  r.omega_sto = launch_frequency(x, cfg.panel, cfg.lambda);
  r.launch_ok = launch_passes(r.omega_sto);
  if (!r.launch_ok) {
    r.objective = kLaunchFailureObjective;
    r.indices.jc.fill(kNaN);
    return r;
  }
  const AppendageSet apps = generate_appendages(cfg, x);
  const LoopFamily fam = LoopFamily::build(cfg, apps, models, req);
  r.mass = fam.masses()[fam.nominal()];
  const Plant nominal = assemble_plant(cfg, apps, cfg.theta_sa, {});
  TuneOptions to = tune_opt;
  to.workers = 1;
  const SynthesisResult t = tune(fam, initial_gains(rigid_inertia(nominal), req), to);
  r.gains = t.gains;
  r.indices = t.indices;
  r.objective = system_objective(r.mass, mass_ref, t.indices.jc);
  r.feasible = t.feasible;
  return r;
}

namespace {

void finish_best_sequence(CodesignResult& res, int iterations, int swarm) {
  double best = kNaN;
  for (int it = 0; it < iterations; ++it) {
    for (int p = 0; p < swarm; ++p) {
      const auto& rec = res.particles[static_cast<std::size_t>(it * swarm + p)];
      if (rec.feasible && (std::isnan(best) || rec.objective < best)) best = rec.objective;
    }
    res.best_per_iteration.push_back(best);
  }
}

}  // namespace

CodesignResult distributed_codesign(const BenchConfig& cfg, const Requirements& req, const CodesignOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  validate(opt.pso);
  validate(req);
  const auto box = design_box(opt);
  if (box.empty()) throw ValidationError("codesign.design_subset must not be empty");
  const auto models = tuning_models(opt);
  CodesignResult res;
  res.method = "distributed";
  res.mass_ref = reference_mass(cfg);
  res.initial_mass = total_mass(build_plant(cfg, opt.base, cfg.theta_sa, {}));

  std::vector<double> lo, hi;
  for (const auto& b : box) {
    lo.push_back(b.lo);
    hi.push_back(b.hi);
  }
  const auto ns = static_cast<std::size_t>(opt.pso.swarm);
  res.particles.resize(static_cast<std::size_t>(opt.pso.iterations) * ns);
  PsoOptions po = opt.pso;
  po.workers = opt.workers;
  pso_minimize(
      [&](const std::vector<double>& v, int it, int p) {
        Assignment a;
        for (std::size_t k = 0; k < box.size(); ++k) a[box[k].name] = v[k];
        ParticleRecord rec = evaluate_design(cfg, req, with_subset(opt.base, a), models, opt.tune, res.mass_ref);
        rec.iteration = it;
        rec.particle = p;
        rec.design = a;
        res.particles[static_cast<std::size_t>(it) * ns + static_cast<std::size_t>(p)] = rec;
        return rec.objective;
      },
      lo, hi, po);
  finish_best_sequence(res, opt.pso.iterations, opt.pso.swarm);

  // best feasible particle; else the best launch-passing one
  const ParticleRecord* best = nullptr;
  for (const auto& r : res.particles)
    if (r.feasible && (!best || r.objective < best->objective)) best = &r;
  if (!best) {
    res.warnings.push_back("no particle satisfied the launch and control constraints");
    for (const auto& r : res.particles)
      if (r.launch_ok && (!best || r.objective < best->objective)) best = &r;
  }
  if (best) {
    res.feasible = best->feasible;
    res.design = with_subset(opt.base, best->design);
    res.gains = best->gains;
    res.objective = best->objective;
    res.mass = best->mass;
    res.omega_sto = best->omega_sto;
    res.launch_ok = best->launch_ok;
    res.indices = best->indices;
  } else {
    res.warnings.push_back("no particle passed the launch constraint");
    res.objective = kLaunchFailureObjective;
    res.indices.jc.fill(kNaN);
  }
  res.evaluations = static_cast<int>(res.particles.size());
  res.wall_seconds = seconds_since(t0);
  return res;
}

// ---------------------------------------------------------------- monolithic

namespace {

class JointEvaluator {
 public:
  JointEvaluator(const BenchConfig& cfg, const Requirements& req, const AppendageSurrogate& s,
                 const std::vector<ModelSpec>& models, const std::vector<ParameterSpec>& box, double mass_ref,
                 const CodesignOptions& opt)
      : cfg_(cfg), req_(req), sur_(s), models_(models), box_(box), mass_ref_(mass_ref), opt_(opt) {}

  struct Value {
    IndexValues jc{};
    double mass = 0.0;
    double objective = 0.0;
  };

  Assignment design(const std::vector<double>& z) const {
    Assignment a;
    for (std::size_t k = 0; k < box_.size(); ++k)
      a[box_[k].name] = box_[k].lo + 0.5 * (z[k] + 1.0) * (box_[k].hi - box_[k].lo);
    return a;
  }

  AppendageSet appendages(const std::vector<double>& z) {
    bool crossed = false;
    AppendageSet apps = eval_appendage_surrogate(sur_, design(z), &crossed);
    if (crossed) crossing = true;
    return apps;
  }

  void set_active(const std::vector<std::size_t>& active) {
    active_ = active;
    cache_.clear();
  }

  Value operator()(const std::vector<double>& x) {
    ++count;
    const std::vector<double> z(x.begin() + 6, x.end());
    const auto& fam = family(z);
    const ControllerGains g = ControllerGains::from_vector({std::exp(x[0]), std::exp(x[1]), std::exp(x[2]),
                                                            std::exp(x[3]), std::exp(x[4]), std::exp(x[5])});
    std::vector<IndexValues> vals(fam.size());
    parallel_for(fam.size(), opt_.workers, [&](std::size_t k) { vals[k] = fam.evaluate(k, g, false); });
    Value v;
    v.jc.fill(0.0);
    for (const auto& a : vals)
      for (std::size_t j = 0; j < v.jc.size(); ++j) v.jc[j] = std::max(v.jc[j], a[j]);
    v.mass = fam.masses()[fam.nominal()];
    v.objective = opt_.w_m * v.mass / mass_ref_ + opt_.w_c * v.jc[0] +
                  (penalized_objective(v.jc, opt_.tune.penalty) - v.jc[0]);
    if (!std::isfinite(v.objective)) v.objective = kInf;
    return v;
  }

  int count = 0;
  bool crossing = false;

 private:
  const LoopFamily& family(const std::vector<double>& z) {
    for (auto& [key, f] : cache_)
      if (key == z) return *f;
    std::vector<ModelSpec> specs;
    for (auto i : active_) specs.push_back(models_[i]);
    auto f = std::make_shared<LoopFamily>(LoopFamily::build(cfg_, appendages(z), specs, req_));
    if (cache_.size() >= 2) cache_.erase(cache_.begin());
    cache_.emplace_back(z, f);
    return *cache_.back().second;
  }

  const BenchConfig& cfg_;
  const Requirements& req_;
  const AppendageSurrogate& sur_;
  const std::vector<ModelSpec>& models_;
  const std::vector<ParameterSpec>& box_;
  double mass_ref_;
  const CodesignOptions& opt_;
  std::vector<std::size_t> active_;
  std::vector<std::pair<std::vector<double>, std::shared_ptr<LoopFamily>>> cache_;
};

}  // namespace

CodesignResult monolithic_codesign(const BenchConfig& cfg, const Requirements& req, const AppendageSurrogate& surrogate,
                                   const CodesignOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  validate(req);
  const auto models = tuning_models(opt);
  CodesignResult res;
  res.method = "monolithic";
  res.mass_ref = reference_mass(cfg);
  res.initial_mass = total_mass(build_plant(cfg, opt.base, cfg.theta_sa, {}));
  TuneOptions to = opt.tune;
  to.workers = opt.workers;

  if (opt.design_subset.empty()) {
    const AppendageSet apps = generate_appendages(cfg, opt.base);
    const LoopFamily fam = LoopFamily::build(cfg, apps, models, req, opt.workers);
    const SynthesisResult t = tune(fam, initial_gains(rigid_inertia(assemble_plant(cfg, apps, cfg.theta_sa, {})), req), to);
    res.design = opt.base;
    res.gains = t.gains;
    res.indices = t.indices;
    res.mass = fam.masses()[fam.nominal()];
    res.objective = opt.w_m * res.mass / res.mass_ref + opt.w_c * t.indices.jc[0];
    res.omega_sto = launch_frequency(opt.base, cfg.panel, cfg.lambda);
    res.launch_ok = launch_passes(res.omega_sto);
    res.feasible = t.feasible && res.launch_ok;
    res.evaluations = t.evaluations;
    res.wall_seconds = seconds_since(t0);
    return res;
  }

  if (surrogate.subset != opt.design_subset)
    throw ValidationError("monolithic: surrogate subset does not match codesign.design_subset");
  const auto box = design_box(opt);
  for (const auto& n : DesignVector::names())
    if (std::find(opt.design_subset.begin(), opt.design_subset.end(), n) == opt.design_subset.end() &&
        surrogate.base.get(n) != opt.base.get(n))
      throw ValidationError("monolithic: surrogate base differs from codesign.base in '" + n + "'");
  for (const auto& [name, sur] : surrogate.parts)
    for (std::size_t k = 0; k < box.size(); ++k)
      if (box[k].lo < sur.lo[k] || box[k].hi > sur.hi[k])
        throw ValidationError("monolithic: search box of '" + box[k].name + "' exceeds the surrogate box");

  JointEvaluator ev(cfg, req, surrogate, models, box, res.mass_ref, opt);
  std::vector<double> z0(box.size());
  for (std::size_t k = 0; k < box.size(); ++k)
    z0[k] = 2.0 * (opt.base.get(box[k].name) - box[k].lo) / (box[k].hi - box[k].lo) - 1.0;

  // warm start: gains tuned at the starting design
  const AppendageSet apps0 = ev.appendages(z0);
  const LoopFamily fam0 = LoopFamily::build(cfg, apps0, models, req, opt.workers);
  const SynthesisResult t0res =
      tune(fam0, initial_gains(rigid_inertia(assemble_plant(cfg, apps0, cfg.theta_sa, {})), req), to);
  std::set<std::size_t> active(t0res.active_set.begin(), t0res.active_set.end());
  active.insert(fam0.nominal());
  active.insert(fam0.min_inertia());
  for (auto w : t0res.indices.worst) active.insert(w);

  std::vector<double> x = t0res.gains.to_vector();
  for (double& e : x) e = std::log(e);
  x.insert(x.end(), z0.begin(), z0.end());

  int remaining = opt.mono_budget;
  const double gain_step0 = 0.25, design_step0 = 0.5;
  for (int round = 0; round < opt.tune.max_rounds && remaining > 0; ++round) {
    ev.set_active({active.begin(), active.end()});
    const int before = ev.count;
    const int round_budget =
        round + 1 == opt.tune.max_rounds ? remaining : std::max(1, static_cast<int>(0.6 * remaining));
    auto inc = ev(x);
    auto record = [&] {
      res.mono_trace.push_back({round, t0res.evaluations + ev.count, inc.objective, inc.mass,
                                std::max({inc.jc[1], inc.jc[2], inc.jc[3], inc.jc[4]})});
    };
    record();
    double scale = 1.0;
    while (scale * design_step0 >= opt.tune.min_step && ev.count - before < round_budget) {
      bool improved = false;
      for (std::size_t k = 0; k < x.size() && ev.count - before < round_budget; ++k) {
        const double step = scale * (k < 6 ? gain_step0 : design_step0);
        for (double sgn : {1.0, -1.0}) {
          if (ev.count - before >= round_budget) break;
          std::vector<double> c = x;
          c[k] += sgn * step;
          if (k >= 6) c[k] = std::clamp(c[k], -1.0, 1.0);
          if (c[k] == x[k]) continue;
          const auto v = ev(c);
          const bool acc = v.objective < inc.objective;
          if (acc) {
            x = c;
            inc = v;
          }
          record();
          if (acc) {
            improved = true;
            break;
          }
        }
      }
      if (!improved) scale *= 0.5;
    }
    remaining -= ev.count - before;

    // full sweep at the incumbent design
    const std::vector<double> z(x.begin() + 6, x.end());
    const LoopFamily full = LoopFamily::build(cfg, ev.appendages(z), models, req, opt.workers);
    IndexOptions io;
    io.certify = false;
    io.workers = opt.workers;
    const auto sweep = control_indices(full, ControllerGains::from_vector({std::exp(x[0]), std::exp(x[1]),
                                                                           std::exp(x[2]), std::exp(x[3]),
                                                                           std::exp(x[4]), std::exp(x[5])}),
                                       io);
    bool added = false;
    for (std::size_t j = 0; j < static_cast<std::size_t>(kNumIndices); ++j)
      if (sweep.jc[j] > inc.jc[j] * (1.0 + 1e-9) && active.insert(sweep.worst[j]).second) added = true;
    if (!added) break;
  }

  const std::vector<double> z(x.begin() + 6, x.end());
  const Assignment a = ev.design(z);
  res.design = with_subset(opt.base, a);
  res.gains = ControllerGains::from_vector(
      {std::exp(x[0]), std::exp(x[1]), std::exp(x[2]), std::exp(x[3]), std::exp(x[4]), std::exp(x[5])});
  const LoopFamily final_fam = LoopFamily::build(cfg, ev.appendages(z), models, req, opt.workers);
  IndexOptions fo = opt.tune.final_indices;
  fo.workers = opt.workers;
  res.indices = control_indices(final_fam, res.gains, fo);
  res.mass = final_fam.masses()[final_fam.nominal()];
  res.objective = opt.w_m * res.mass / res.mass_ref + opt.w_c * res.indices.jc[0];
  res.omega_sto = launch_frequency(res.design, cfg.panel, cfg.lambda);
  res.launch_ok = launch_passes(res.omega_sto);
  res.feasible = res.indices.feasible() && res.launch_ok;
  if (!res.launch_ok) res.warnings.push_back("final design fails the launch constraint");
  if (ev.crossing) res.warnings.push_back("surrogate mode crossing inside the design box");
  res.evaluations = t0res.evaluations + ev.count;
  res.wall_seconds = seconds_since(t0);
  return res;
}

// ---------------------------------------------------------------- output

json to_json(const CodesignResult& r, bool include_timing) {
  json parts = json::array();
  for (const auto& p : r.particles) {
    json jc = json::array();
    for (double v : p.indices.jc) jc.push_back(number(v));
    json e = {{"iteration", p.iteration}, {"particle", p.particle}, {"design", p.design},
              {"omega_sto", p.omega_sto}, {"launch_ok", p.launch_ok}, {"objective", number(p.objective)},
              {"feasible", p.feasible},   {"jc", jc}};
    if (p.launch_ok) {
      e["mass"] = p.mass;
      e["gains"] = to_json(p.gains);
    }
    parts.push_back(e);
  }
  json best = json::array();
  for (double v : r.best_per_iteration) best.push_back(number(v));
  json trace = json::array();
  for (const auto& t : r.mono_trace)
    trace.push_back({{"round", t.round}, {"evaluations", t.evaluations}, {"objective", number(t.objective)},
                     {"mass", t.mass}, {"max_constraint", number(t.max_constraint)}});
  json j = {{"method", r.method},
            {"feasible", r.feasible},
            {"design", r.design.to_assignment()},
            {"gains", to_json(r.gains)},
            {"objective", number(r.objective)},
            {"mass", r.mass},
            {"mass_ref", r.mass_ref},
            {"initial_mass", r.initial_mass},
            {"omega_sto", r.omega_sto},
            {"launch_ok", r.launch_ok},
            {"indices", to_json(r.indices)},
            {"best_per_iteration", best},
            {"particles", parts},
            {"mono_trace", trace},
            {"evaluations", r.evaluations},
            {"warnings", r.warnings}};
  if (include_timing) j["wall_seconds"] = r.wall_seconds;
  return j;
}

std::string pareto_csv(const CodesignResult& r) {
  std::ostringstream os;
  os.precision(17);
  os << "mass_kg,Jc_max,iteration,particle\n";
  for (const auto& p : r.particles)
    if (p.launch_ok) os << p.mass << ',' << p.indices.max_all() << ',' << p.iteration << ',' << p.particle << '\n';
  return os.str();
}

}  // namespace flexsc
