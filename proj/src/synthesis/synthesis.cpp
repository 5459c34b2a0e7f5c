#include "flexsc/synthesis/synthesis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <set>

#include "flexsc/common/error.hpp"
#include "flexsc/common/json_util.hpp"
#include "flexsc/common/parallel.hpp"
#include "flexsc/lti/interconnect.hpp"
#include "flexsc/lti/norms.hpp"
#include "flexsc/lti/reduce.hpp"

namespace flexsc {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Channel {
  std::vector<std::string> in, out;
  bool h2 = false;
};

const std::array<Channel, kNumIndices>& channels() {
  static const std::array<Channel, kNumIndices> c = {{
      {{"n_gyro", "n_sst"}, {"ape", "rpe"}, true},
      {{"T_ext_n"}, {"ape"}, false},
      {{"T_ext_n"}, {"rpe"}, false},
      {{"T_ext_n"}, {"u_n"}, false},
      {{"d_T"}, {"T_n"}, false},
  }};
  return c;
}

MatrixXd columns(const StateSpace& g, const MatrixXd& m, const std::vector<std::string>& ports) {
  Index w = 0;
  for (const auto& p : ports) w += g.input(p).width;
  MatrixXd out(m.rows(), w);
  Index k = 0;
  for (const auto& p : ports) {
    const auto r = g.input(p);
    out.middleCols(k, r.width) = m.middleCols(r.offset, r.width);
    k += r.width;
  }
  return out;
}

MatrixXd rows(const StateSpace& g, const MatrixXd& m, const std::vector<std::string>& ports) {
  Index w = 0;
  for (const auto& p : ports) w += g.output(p).width;
  MatrixXd out(w, m.cols());
  Index k = 0;
  for (const auto& p : ports) {
    const auto r = g.output(p);
    out.middleRows(k, r.width) = m.middleRows(r.offset, r.width);
    k += r.width;
  }
  return out;
}

double channel_norm_direct(const StateSpace& sub, bool h2, bool certify) {
  if (h2) return h2_norm(sub);
  return certify ? hinf_norm(sub) : peak_gain_estimate(sub).value;
}

std::vector<double> log_gains(const ControllerGains& g) {
  std::vector<double> v = g.to_vector();
  for (double& x : v) x = std::log(x);
  return v;
}

ControllerGains from_log(const std::vector<double>& v) {
  std::vector<double> e(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) e[i] = std::exp(v[i]);
  return ControllerGains::from_vector(e);
}

double max_constraint(const IndexValues& v) { return std::max({v[1], v[2], v[3], v[4]}); }

}  // namespace

const std::array<const char*, kNumIndices>& index_names() {
  static const std::array<const char*, kNumIndices> n = {"noise", "ape", "rpe", "command", "sensitivity"};
  return n;
}

std::vector<ModelSpec> default_model_set(int sigma_points) {
  return default_model_set(sigma_points, structural_uncertainty_specs());
}

std::vector<ModelSpec> default_model_set(int sigma_points, const std::vector<ParameterSpec>& structural) {
  if (sigma_points < 0) throw ValidationError("model set: sigma_points must be >= 0");
  std::vector<ModelSpec> out;
  out.push_back({"nominal", {}});
  const auto verts = sample_assignments(structural, SamplingScheme::vertices, 0, 0);
  for (std::size_t k = 0; k < verts.size(); ++k) out.push_back({"v" + std::to_string(k), verts[k]});
  for (int k = 1; k <= sigma_points; ++k) {
    const double s = static_cast<double>(k) / sigma_points;
    char buf[32];
    std::snprintf(buf, sizeof buf, "sigma4=%.4g", s);
    out.push_back({buf, {{"sigma4", s}}});
  }
  return out;
}

json to_json(const std::vector<ModelSpec>& set) {
  json arr = json::array();
  for (const auto& m : set) arr.push_back({{"label", m.label}, {"delta", m.delta}});
  return {{"models", arr}};
}

std::vector<ModelSpec> model_set_from_json(const json& j) {
  jsonio::check_keys(j, {"scheme", "sigma_points", "models"}, "model_set");
  if (j.contains("models")) {
    std::vector<ModelSpec> out;
    for (const auto& m : j.at("models")) {
      jsonio::check_keys(m, {"label", "delta"}, "model_set.models");
      ModelSpec s;
      jsonio::read(m, "label", s.label, "model_set.models");
      jsonio::read(m, "delta", s.delta, "model_set.models");
      validate_assignment(uncertainty_specs(), s.delta);
      out.push_back(s);
    }
    if (out.empty()) throw ValidationError("model_set.models must not be empty");
    return out;
  }
  std::string scheme = "default";
  int sp = 5;
  jsonio::read(j, "scheme", scheme, "model_set");
  jsonio::read(j, "sigma_points", sp, "model_set");
  if (scheme == "nominal") return {{"nominal", {}}};
  if (scheme != "default") throw ValidationError("model_set.scheme must be 'default' or 'nominal'");
  return default_model_set(sp);
}

LoopFamily::LoopFamily(const std::vector<Plant>& plants, std::vector<std::string> labels, const Requirements& req,
                       ObserverPortOrder order)
    : labels_(std::move(labels)), req_(req) {
  if (plants.empty()) throw ValidationError("model set must not be empty");
  if (labels_.size() != plants.size()) throw ValidationError("model labels do not match plants");
  const Avionics av = avionics(order);
  const Weights w = weights(req);
  plants_.reserve(plants.size());
  double best = kInf;
  for (std::size_t i = 0; i < plants.size(); ++i) {
    plants_.push_back(generalized_plant(plants[i], av, w));
    masses_.push_back(total_mass(plants[i]));
    const double tr = rigid_inertia(plants[i]).trace();
    if (tr < best) {
      best = tr;
      min_inertia_ = i;
    }
    if (labels_[i] == "nominal") nominal_ = i;
  }
}

LoopFamily LoopFamily::build(const BenchConfig& cfg, const AppendageSet& apps, const std::vector<ModelSpec>& models,
                             const Requirements& req, int workers) {
  std::vector<Plant> plants(models.size());
  parallel_for(models.size(), workers, [&](std::size_t i) {
    plants[i] = assemble_plant(cfg, apps, theta_for(cfg, models[i].delta), models[i].delta);
  });
  std::vector<std::string> labels;
  for (const auto& m : models) labels.push_back(m.label);
  return LoopFamily(plants, labels, req);
}

LoopFamily LoopFamily::build(const BenchConfig& cfg, const DesignVector& x, const std::vector<ModelSpec>& models,
                             const Requirements& req, int workers) {
  return build(cfg, generate_appendages(cfg, x), models, req, workers);
}

namespace {

struct ClosedLoopModes {
  StateSpace cl;
  ModalBasis basis;
  bool is_stable;
};

ClosedLoopModes closed_loop_modes(const GeneralizedPlant& gp, const ControllerGains& g) {
  StateSpace cl = balanced_realization(close_static_feedback(gp.system, "u", "y", controller_matrix(g)));
  ModalBasis basis(cl.a());
  const bool st = basis.stable() && std::all_of(basis.eigenvalues().begin(), basis.eigenvalues().end(),
                                                [](const cdouble& l) { return std::isfinite(l.real()); });
  return {std::move(cl), std::move(basis), st};
}

double channel_value(const ClosedLoopModes& m, int index, bool certify) {
  const Channel& ch = channels()[static_cast<std::size_t>(index)];
  const StateSpace& cl = m.cl;
  if (!m.is_stable) {
    const StateSpace sub = kalman_minimal(cl.select(ch.in, ch.out));
    return stable(sub) ? channel_norm_direct(sub, ch.h2, true) : kInf;
  }
  const MatrixXd b = columns(cl, cl.b(), ch.in);
  const MatrixXd c = rows(cl, cl.c(), ch.out);
  const MatrixXd d = rows(cl, columns(cl, cl.d(), ch.in), ch.out);
  if (ch.h2) {
    if (!d.isZero(0.0)) return kInf;
    return m.basis.reliable() ? ModalChannel(m.basis, b, c, d).h2() : h2_norm(cl.select(ch.in, ch.out));
  }
  const PeakGain lb = m.basis.reliable() ? peak_gain_estimate(m.basis, ModalChannel(m.basis, b, c, d))
                                         : peak_gain_estimate(cl.select(ch.in, ch.out));
  return certify ? hinf_certify(cl.select(ch.in, ch.out), lb) : lb.value;
}

}  // namespace

IndexValues LoopFamily::evaluate(std::size_t model, const ControllerGains& g, bool certify) const {
  const ClosedLoopModes m = closed_loop_modes(plants_.at(model), g);
  IndexValues out{};
  for (int j = 0; j < kNumIndices; ++j) out[static_cast<std::size_t>(j)] = channel_value(m, j, certify);
  return out;
}

double index_value(const GeneralizedPlant& gp, const ControllerGains& g, int index, bool certify) {
  if (index < 0 || index >= kNumIndices) throw ValidationError("index_value: index out of range");
  return channel_value(closed_loop_modes(gp, g), index, certify);
}

double ControlIndices::max_all() const { return *std::max_element(jc.begin(), jc.end()); }
double ControlIndices::max_constraint() const { return flexsc::max_constraint(jc); }
double ControlIndices::sum() const {
  double s = 0.0;
  for (double v : jc) s += v;
  return s;
}

namespace {

json number(double v) { return std::isfinite(v) ? json(v) : json("inf"); }

}  // namespace

json to_json(const ControlIndices& c) {
  json j = json::object();
  for (int k = 0; k < kNumIndices; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    j["Jc" + std::to_string(k + 1)] = {{"name", index_names()[ks]}, {"value", number(c.jc[ks])},
                                       {"worst_model", c.worst_label[ks]}};
  }
  j["max"] = number(c.max_all());
  j["feasible"] = c.feasible();
  return j;
}

ControlIndices control_indices(const LoopFamily& family, const ControllerGains& g, const IndexOptions& opt,
                               const std::vector<std::size_t>& subset) {
  std::vector<std::size_t> models = subset;
  if (models.empty())
    for (std::size_t i = 0; i < family.size(); ++i) models.push_back(i);
  std::vector<IndexValues> vals(models.size());
  parallel_for(models.size(), opt.workers, [&](std::size_t k) { vals[k] = family.evaluate(models[k], g, false); });
  if (opt.certify && opt.certify_top > 0) {
    std::set<std::size_t> chosen;
    for (int j = 1; j < kNumIndices; ++j) {
      std::vector<std::size_t> order(models.size());
      for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return vals[a][static_cast<std::size_t>(j)] > vals[b][static_cast<std::size_t>(j)];
      });
      for (std::size_t k = 0; k < order.size() && k < static_cast<std::size_t>(opt.certify_top); ++k)
        chosen.insert(order[k]);
    }
    const std::vector<std::size_t> list(chosen.begin(), chosen.end());
    std::vector<IndexValues> cert(list.size());
    parallel_for(list.size(), opt.workers, [&](std::size_t k) { cert[k] = family.evaluate(models[list[k]], g, true); });
    for (std::size_t k = 0; k < list.size(); ++k) vals[list[k]] = cert[k];
  }
  ControlIndices out;
  out.jc.fill(-1.0);
  for (std::size_t k = 0; k < models.size(); ++k)
    for (std::size_t j = 0; j < static_cast<std::size_t>(kNumIndices); ++j)
      if (vals[k][j] > out.jc[j]) {
        out.jc[j] = vals[k][j];
        out.worst[j] = models[k];
      }
  for (std::size_t j = 0; j < static_cast<std::size_t>(kNumIndices); ++j) out.worst_label[j] = family.label(out.worst[j]);
  return out;
}

json to_json(const TuneOptions& o) {
  return {{"starts", o.starts},
          {"budget", o.budget},
          {"penalty", o.penalty},
          {"seed", o.seed},
          {"margin", o.margin},
          {"max_rounds", o.max_rounds},
          {"initial_step", o.initial_step},
          {"min_step", o.min_step},
          {"certify_top", o.final_indices.certify_top}};
}

TuneOptions tune_options_from_json(const json& j) {
  const std::string w = "tune";
  jsonio::check_keys(j, {"starts", "budget", "penalty", "seed", "margin", "max_rounds", "initial_step", "min_step",
                         "certify_top"},
                     w);
  TuneOptions o;
  jsonio::read(j, "starts", o.starts, w);
  jsonio::read(j, "budget", o.budget, w);
  jsonio::read(j, "penalty", o.penalty, w);
  jsonio::read(j, "seed", o.seed, w);
  jsonio::read(j, "margin", o.margin, w);
  jsonio::read(j, "max_rounds", o.max_rounds, w);
  jsonio::read(j, "initial_step", o.initial_step, w);
  jsonio::read(j, "min_step", o.min_step, w);
  jsonio::read(j, "certify_top", o.final_indices.certify_top, w);
  if (o.starts < 1 || o.budget < 1 || o.max_rounds < 1) throw ValidationError("tune: starts, budget, max_rounds >= 1");
  if (!(o.penalty > 0.0) || !(o.margin >= 0.0 && o.margin < 1.0)) throw ValidationError("tune: bad penalty or margin");
  if (!(o.initial_step > 0.0) || !(o.min_step > 0.0)) throw ValidationError("tune: steps must be positive");
  return o;
}

double penalized_objective(const IndexValues& v, double penalty) {
  double p = 0.0;
  for (int j = 1; j < kNumIndices; ++j) {
    const double e = std::max(0.0, v[static_cast<std::size_t>(j)] - 1.0);
    p += e * e;
  }
  const double f = v[0] + penalty * p;
  return std::isfinite(f) ? f : kInf;
}

json to_json(const SynthesisResult& r, const LoopFamily& family) {
  json trace = json::array();
  for (const auto& t : r.trace) trace.push_back({{"round", t.round}, {"evaluations", t.evaluations}, {"objective", number(t.objective)}});
  json active = json::array();
  for (auto i : r.active_set) active.push_back(family.label(i));
  return {{"gains", to_json(r.gains)},   {"indices", to_json(r.indices)}, {"feasible", r.feasible},
          {"evaluations", r.evaluations}, {"rounds", r.rounds},           {"active_set", active},
          {"wall_seconds", r.wall_seconds}, {"trace", trace}};
}

namespace {

class ActiveEvaluator {
 public:
  ActiveEvaluator(const LoopFamily& f, int workers) : family_(f), workers_(workers) {}

  IndexValues operator()(const std::vector<double>& logk) {
    ++count;
    const ControllerGains g = from_log(logk);
    std::vector<IndexValues> vals(active.size());
    parallel_for(active.size(), workers_, [&](std::size_t k) { vals[k] = family_.evaluate(active[k], g, false); });
    IndexValues m;
    m.fill(0.0);
    for (const auto& v : vals)
      for (std::size_t j = 0; j < m.size(); ++j) m[j] = std::max(m[j], v[j]);
    return m;
  }

  std::vector<std::size_t> active;
  int count = 0;

 private:
  const LoopFamily& family_;
  int workers_;
};

struct Point {
  std::vector<double> x;
  IndexValues v;
};

// Compass search; `better(candidate, incumbent)` decides acceptance.
template <class Better, class Done, class OnEval>
Point pattern_search(ActiveEvaluator& ev, Point inc, double step, double min_step, int budget, Better better, Done done,
                     OnEval on_eval) {
  int used = 0;
  while (step >= min_step && used < budget && !done(inc)) {
    bool improved = false;
    for (std::size_t k = 0; k < inc.x.size() && used < budget; ++k) {
      for (double sgn : {1.0, -1.0}) {
        if (used >= budget) break;
        Point c = inc;
        c.x[k] += sgn * step;
        c.v = ev(c.x);
        ++used;
        const bool acc = better(c, inc);
        if (acc) inc = c;
        on_eval(inc);
        if (acc) {
          improved = true;
          break;
        }
      }
      if (done(inc)) break;
    }
    if (!improved) step *= 0.5;
  }
  return inc;
}

}  // namespace

SynthesisResult tune(const LoopFamily& family, const ControllerGains& init, const TuneOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  validate(init);
  SynthesisResult res;
  ActiveEvaluator ev(family, opt.workers);
  const double target = 1.0 - opt.margin;
  const auto feasible_m = [&](const IndexValues& v) { return max_constraint(v) <= target; };

  // stabilize on the nominal model
  ev.active = {family.nominal()};
  std::vector<double> x0 = log_gains(init);
  IndexValues v0 = ev(x0);
  if (!std::isfinite(penalized_objective(v0, opt.penalty))) {
    // independent powers of two on Kp and Kv, nearest first
    std::vector<std::pair<int, int>> grid;
    for (int a = -16; a <= 16; a += 2)
      for (int b = -16; b <= 16; b += 2)
        if (a != 0 || b != 0) grid.emplace_back(a, b);
    std::stable_sort(grid.begin(), grid.end(), [](const auto& p, const auto& q) {
      return std::abs(p.first) + std::abs(p.second) < std::abs(q.first) + std::abs(q.second);
    });
    for (const auto& [a, b] : grid) {
      std::vector<double> x = x0;
      for (std::size_t k = 0; k < x.size(); ++k) x[k] += (k % 2 == 0 ? a : b) * std::log(2.0);
      const IndexValues v = ev(x);
      if (std::isfinite(penalized_objective(v, opt.penalty))) {
        x0 = x;
        v0 = v;
        break;
      }
    }
  }

  // initial active set: nominal, lightest inertia, worst per index at the start point
  std::set<std::size_t> active{family.nominal(), family.min_inertia()};
  {
    IndexOptions io;
    io.certify = false;
    io.workers = opt.workers;
    const auto c = control_indices(family, from_log(x0), io);
    for (auto w : c.worst) active.insert(w);
  }

  Point cur{x0, {}};
  int remaining = opt.budget;
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int round = 0; round < opt.max_rounds && remaining > 0; ++round) {
    res.rounds = round + 1;
    ev.active.assign(active.begin(), active.end());
    const int round_budget = round + 1 == opt.max_rounds ? remaining : std::max(1, static_cast<int>(0.6 * remaining));
    const int before = ev.count;
    cur.v = ev(cur.x);
    const double step0 = round == 0 ? opt.initial_step : 0.5 * opt.initial_step;

    // phase 1: feasibility with margin, multi-start
    if (!feasible_m(cur.v)) {
      const int p1_budget = std::max(1, static_cast<int>(0.6 * round_budget));
      const int per_start = std::max(1, p1_budget / opt.starts);
      Point best = cur;
      for (int s = 0; s < opt.starts; ++s) {
        Point start = cur;
        if (s > 0) {
          for (double& e : start.x) e += uni(rng);
          start.v = ev(start.x);
        }
        const auto better1 = [](const Point& c, const Point& i) { return max_constraint(c.v) < max_constraint(i.v); };
        Point p = pattern_search(ev, start, step0, opt.min_step, per_start, better1,
                                 [&](const Point& i) { return feasible_m(i.v); }, [](const Point&) {});
        if (max_constraint(p.v) < max_constraint(best.v)) best = p;
        if (feasible_m(best.v)) break;
      }
      cur = best;
    }

    // phase 2: penalized H2 with feasibility guard
    const int used = ev.count - before;
    const int p2_budget = std::max(0, round_budget - used);
    const auto better2 = [&](const Point& c, const Point& i) {
      if (feasible_m(i.v) && !feasible_m(c.v)) return false;
      return penalized_objective(c.v, opt.penalty) < penalized_objective(i.v, opt.penalty);
    };
    res.trace.push_back({round, ev.count, penalized_objective(cur.v, opt.penalty)});
    cur = pattern_search(ev, cur, step0, opt.min_step, p2_budget, better2, [](const Point&) { return false; },
                         [&](const Point& i) {
                           res.trace.push_back({round, ev.count, penalized_objective(i.v, opt.penalty)});
                         });
    remaining -= ev.count - before;

    // grow the active set from a full sweep
    IndexOptions io;
    io.certify = false;
    io.workers = opt.workers;
    const auto sweep = control_indices(family, from_log(cur.x), io);
    bool added = false;
    for (std::size_t j = 0; j < static_cast<std::size_t>(kNumIndices); ++j)
      if (sweep.jc[j] > cur.v[j] * (1.0 + 1e-9) && active.insert(sweep.worst[j]).second) added = true;
    if (!added) break;
  }

  res.gains = from_log(cur.x);
  res.active_set.assign(active.begin(), active.end());
  IndexOptions fo = opt.final_indices;
  fo.workers = opt.workers;
  res.indices = control_indices(family, res.gains, fo);
  res.feasible = res.indices.feasible();
  res.evaluations = ev.count;
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace flexsc
