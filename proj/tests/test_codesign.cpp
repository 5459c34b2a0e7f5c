#include <gtest/gtest.h>

#include <cmath>

#include "flexsc/codesign/codesign.hpp"
#include "flexsc/common/error.hpp"

using namespace flexsc;

namespace {

double sphere(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double rosenbrock(const std::vector<double>& x) {
  return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
}

PsoOptions pso(int ni, int ns, std::uint64_t seed = 3) {
  PsoOptions o;
  o.iterations = ni;
  o.swarm = ns;
  o.seed = seed;
  return o;
}

CodesignOptions tiny_options() {
  CodesignOptions o;
  o.model_scheme = "nominal";
  o.pso = pso(2, 3, 5);
  o.tune.budget = 60;
  o.tune.max_rounds = 1;
  o.tune.starts = 2;
  o.tune.final_indices.certify_top = 1;
  o.mono_budget = 80;
  return o;
}

const AppendageSurrogate& surrogate() {
  static const AppendageSurrogate s =
      fit_appendage_surrogate(default_bench_config(), DesignVector{}, default_design_subset());
  return s;
}

}  // namespace

TEST(Pso, Sphere4D) {
  const std::vector<double> lo(4, -5.0), hi(4, 5.0);
  const auto r = pso_minimize(sphere, lo, hi, pso(50, 20));
  EXPECT_LT(r.value, 1e-3);
  EXPECT_EQ(r.history.size(), 50u * 20u);
  EXPECT_NEAR(sphere(r.x), r.value, 0.0);
}

TEST(Pso, ConstantFunction) {
  const auto r = pso_minimize([](const std::vector<double>&) { return 4.25; }, {0.0, 0.0}, {1.0, 1.0}, pso(5, 4));
  ASSERT_EQ(r.best_per_iteration.size(), 5u);
  for (double b : r.best_per_iteration) EXPECT_EQ(b, 4.25);
}

TEST(Pso, Rosenbrock2D) {
  const auto r = pso_minimize(rosenbrock, {-2.0, -2.0}, {2.0, 2.0}, pso(100, 20));
  EXPECT_LT(r.value, 0.1);
}

TEST(Pso, BestNonIncreasingAndInsideBounds) {
  const std::vector<double> lo = {-1.0, 2.0, -3.0}, hi = {1.0, 4.0, 0.0};
  const auto r = pso_minimize([](const std::vector<double>& x) { return std::sin(5 * x[0]) + x[1] * x[2]; }, lo, hi,
                              pso(30, 10));
  for (std::size_t k = 1; k < r.best_per_iteration.size(); ++k)
    EXPECT_LE(r.best_per_iteration[k], r.best_per_iteration[k - 1]);
  for (const auto& e : r.history)
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_GE(e.x[k], lo[k]);
      EXPECT_LE(e.x[k], hi[k]);
    }
}

TEST(Pso, DeterministicAcrossWorkers) {
  const std::vector<double> lo(4, -5.0), hi(4, 5.0);
  auto serial = pso(20, 8);
  auto threaded = serial;
  threaded.workers = 4;
  const auto a = pso_minimize(sphere, lo, hi, serial);
  const auto b = pso_minimize(sphere, lo, hi, threaded);
  const auto c = pso_minimize(sphere, lo, hi, serial);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t k = 0; k < a.history.size(); ++k) {
    EXPECT_EQ(a.history[k].x, b.history[k].x);
    EXPECT_EQ(a.history[k].value, b.history[k].value);
    EXPECT_EQ(a.history[k].x, c.history[k].x);
  }
  EXPECT_NE(pso_minimize(sphere, lo, hi, pso(20, 8, 4)).history[0].x, a.history[0].x);
}

TEST(Pso, TiesGoToLowestParticle) {
  const auto r = pso_minimize([](const std::vector<double>&, int, int) { return 1.0; }, {0.0}, {1.0}, pso(1, 6));
  EXPECT_EQ(r.x, r.history[0].x);
}

TEST(Pso, Errors) {
  EXPECT_THROW(pso_minimize(sphere, {0.0}, {0.0}, pso(2, 2)), ValidationError);
  EXPECT_THROW(pso_minimize(sphere, {0.0}, {INFINITY}, pso(2, 2)), ValidationError);
  EXPECT_THROW(pso_minimize(sphere, {0.0}, {1.0}, pso(0, 2)), ValidationError);
  EXPECT_THROW(pso_options_from_json({{"swarms", 3}}), ValidationError);
}

TEST(AppendageSurrogate, HoldoutAccuracy) {
  const auto& s = surrogate();
  EXPECT_LE(s.holdout_max_rel_error(), 1e-2);
  EXPECT_LE(s.in_sample_max_rel_error(), 1e-2);
  EXPECT_EQ(s.parts.size(), 4u);
}

TEST(AppendageSurrogate, ReproducesGeneratorInsideBox) {
  const auto cfg = default_bench_config();
  const auto& s = surrogate();
  Assignment a = {{"t_sP", 2.4e-4}, {"t_cP", 3.1e-2}, {"R_SRS", 1.4e-2}, {"t_cV", 0.7e-3}};
  const auto fit = eval_appendage_surrogate(s, a);
  const auto ref = generate_appendages(cfg, DesignVector::from_assignment(a));
  for (auto [f, r] : {std::pair{&fit.panel, &ref.panel}, {&fit.srs, &ref.srs}, {&fit.sar, &ref.sar}}) {
    EXPECT_NEAR(f->mass(), r->mass(), 1e-2 * r->mass());
    for (Index k = 0; k < r->n_modes(); ++k) EXPECT_NEAR(f->freq(k), r->freq(k), 1e-2 * r->freq(k));
  }
  const auto plant_fit = assemble_plant(cfg, fit, 0.0, {});
  const auto plant_ref = assemble_plant(cfg, ref, 0.0, {});
  EXPECT_NEAR(total_mass(plant_fit), total_mass(plant_ref), 1e-3 * total_mass(plant_ref));
}

TEST(AppendageSurrogate, ExtrapolationAndUnknownVariable) {
  const auto& s = surrogate();
  EXPECT_THROW(eval_appendage_surrogate(s, {{"t_sP", 5e-4}}), ValidationError);
  EXPECT_THROW(eval_appendage_surrogate(s, {{"E_Y", 1e11}}), ValidationError);
}

TEST(AppendageSurrogate, JsonRoundTrip) {
  const auto& s = surrogate();
  const auto back = appendage_surrogate_from_json(to_json(s));
  const Assignment a = {{"t_sP", 3.5e-4}, {"t_cP", 1.5e-2}};
  const auto x = eval_appendage_surrogate(s, a), y = eval_appendage_surrogate(back, a);
  EXPECT_EQ(x.panel.freq, y.panel.freq);
  EXPECT_EQ(x.panel.mr, y.panel.mr);
  EXPECT_EQ(x.yoke.ports[0].phi_c, y.yoke.ports[0].phi_c);
}

TEST(Codesign, LaunchFailureScoresTen) {
  const auto cfg = default_bench_config();
  const DesignVector x = design_min();
  ASSERT_FALSE(launch_passes(launch_frequency(x, cfg.panel, cfg.lambda)));
  const auto r = evaluate_design(cfg, Requirements{}, x, {{"nominal", {}}}, TuneOptions{}, reference_mass(cfg));
  EXPECT_EQ(r.objective, 10.0);
  EXPECT_FALSE(r.launch_ok);
  EXPECT_FALSE(r.feasible);
}

TEST(Codesign, AllMaxMassRatioIsOne) {
  const auto cfg = default_bench_config();
  const double mref = reference_mass(cfg);
  EXPECT_EQ(total_mass(build_plant(cfg, design_max(), cfg.theta_sa, {})) / mref, 1.0);
  EXPECT_GT(mref, total_mass(build_plant(cfg, DesignVector{}, cfg.theta_sa, {})));
}

TEST(Codesign, SystemObjective) {
  const IndexValues jc = {0.1, 0.7, 0.05, 0.01, 0.6};
  EXPECT_DOUBLE_EQ(system_objective(1300.0, 1400.0, jc), 1300.0 / 1400.0 + 1.46);
  EXPECT_EQ(system_objective(1300.0, 1400.0, {0.1, INFINITY, 0, 0, 0}), 10.0);
}

TEST(Codesign, TinyDistributedRun) {
  const auto cfg = default_bench_config();
  const auto opt = tiny_options();
  const auto r = distributed_codesign(cfg, Requirements{}, opt);
  ASSERT_EQ(r.particles.size(), 6u);
  ASSERT_EQ(r.best_per_iteration.size(), 2u);
  for (std::size_t k = 1; k < r.best_per_iteration.size(); ++k)
    if (!std::isnan(r.best_per_iteration[k - 1])) EXPECT_LE(r.best_per_iteration[k], r.best_per_iteration[k - 1]);
  double best = INFINITY;
  for (const auto& p : r.particles) {
    if (p.launch_ok) EXPECT_EQ(p.objective, system_objective(p.mass, r.mass_ref, p.indices.jc));
    if (p.feasible) {
      EXPECT_GT(p.omega_sto, kLaunchOmega);
      best = std::min(best, p.objective);
    }
  }
  if (r.feasible) EXPECT_EQ(r.objective, best);
  // stored indices reproduce
  for (const auto& p : r.particles) {
    if (!p.feasible) continue;
    const auto again = evaluate_design(cfg, Requirements{}, DesignVector::from_assignment(p.design), tuning_models(opt),
                                       opt.tune, r.mass_ref);
    for (int j = 0; j < kNumIndices; ++j) EXPECT_NEAR(again.indices.jc[j], p.indices.jc[j], 1e-9 * p.indices.jc[j]);
    break;
  }
  const std::string csv = pareto_csv(r);
  EXPECT_EQ(csv.rfind("mass_kg,Jc_max,iteration,particle\n", 0), 0u);
  std::size_t rows = 0, launch = 0;
  for (char c : csv) rows += c == '\n';
  for (const auto& p : r.particles) launch += p.launch_ok;
  EXPECT_EQ(rows, launch + 1);
}

TEST(Codesign, DistributedIndependentOfWorkers) {
  const auto cfg = default_bench_config();
  auto a = tiny_options();
  auto b = a;
  b.workers = 3;
  const auto ra = distributed_codesign(cfg, Requirements{}, a);
  const auto rb = distributed_codesign(cfg, Requirements{}, b);
  EXPECT_EQ(to_json(ra, false).dump(), to_json(rb, false).dump());
}

TEST(Codesign, MonolithicFrozenDesignIsTune) {
  const auto cfg = default_bench_config();
  auto opt = tiny_options();
  opt.design_subset.clear();
  const auto r = monolithic_codesign(cfg, Requirements{}, surrogate(), opt);
  const auto fam = LoopFamily::build(cfg, DesignVector{}, tuning_models(opt), Requirements{});
  const auto t = tune(fam, initial_gains(rigid_inertia(build_plant(cfg, DesignVector{}, cfg.theta_sa, {})), Requirements{}),
                      opt.tune);
  const auto va = r.gains.to_vector(), vb = t.gains.to_vector();
  for (std::size_t i = 0; i < va.size(); ++i) EXPECT_NEAR(va[i], vb[i], 1e-9 * vb[i]);
  for (int j = 0; j < kNumIndices; ++j) EXPECT_NEAR(r.indices.jc[j], t.indices.jc[j], 1e-9 * t.indices.jc[j]);
}

TEST(Codesign, MonolithicSmallRun) {
  const auto cfg = default_bench_config();
  const auto opt = tiny_options();
  const auto r = monolithic_codesign(cfg, Requirements{}, surrogate(), opt);
  ASSERT_FALSE(r.mono_trace.empty());
  for (std::size_t k = 1; k < r.mono_trace.size(); ++k) {
    const auto& p = r.mono_trace[k - 1];
    const auto& q = r.mono_trace[k];
    if (p.round != q.round) continue;
    EXPECT_LE(q.objective, p.objective);
  }
  const auto box = design_specs(opt.design_subset);
  for (const auto& b : box) {
    EXPECT_GE(r.design.get(b.name), b.lo);
    EXPECT_LE(r.design.get(b.name), b.hi);
  }
  EXPECT_EQ(r.launch_ok, launch_passes(launch_frequency(r.design, cfg.panel, cfg.lambda)));
  EXPECT_NEAR(r.objective, r.mass / r.mass_ref + r.indices.jc[0], 1e-12);
}

TEST(Codesign, MonolithicRejectsMismatchedSurrogate) {
  auto opt = tiny_options();
  opt.design_subset = {"t_sP", "t_cP"};
  EXPECT_THROW(monolithic_codesign(default_bench_config(), Requirements{}, surrogate(), opt), ValidationError);
}

TEST(Codesign, OptionsJson) {
  auto o = tiny_options();
  o.w_m = 2.0;
  const auto back = codesign_options_from_json(to_json(o));
  EXPECT_EQ(back.model_scheme, "nominal");
  EXPECT_EQ(back.pso.swarm, 3);
  EXPECT_EQ(back.w_m, 2.0);
  EXPECT_EQ(back.design_subset, o.design_subset);
  EXPECT_THROW(codesign_options_from_json({{"swarm", 3}}), ValidationError);
  EXPECT_THROW(codesign_options_from_json({{"design_subset", {"t_sP", "bogus"}}}), ValidationError);
  EXPECT_THROW(codesign_options_from_json({{"model_scheme", "all"}}), ValidationError);
}

TEST(Codesign, NarrowedBoundsConfineTheSwarm) {
  auto opt = tiny_options();
  opt.design_bounds = {{"t_cP", {0.02, 0.03}}, {"R_SRS", {0.015, 0.018}}};
  const auto box = design_box(opt);
  EXPECT_EQ(box[1].lo, 0.02);
  EXPECT_EQ(box[2].hi, 0.018);
  const auto r = distributed_codesign(default_bench_config(), Requirements{}, opt);
  for (const auto& p : r.particles) {
    EXPECT_GE(p.design.at("t_cP"), 0.02);
    EXPECT_LE(p.design.at("t_cP"), 0.03);
    EXPECT_GE(p.design.at("R_SRS"), 0.015);
    EXPECT_LE(p.design.at("R_SRS"), 0.018);
  }
  auto wide = opt;
  wide.design_bounds = {{"t_cP", {0.005, 0.03}}};
  EXPECT_THROW(design_box(wide), ValidationError);
  wide.design_bounds = {{"t_Y", {1e-3, 2e-3}}};
  EXPECT_THROW(design_box(wide), ValidationError);
}

TEST(Codesign, MonolithicRejectsBoxBeyondSurrogate) {
  const auto narrow = narrow_specs(design_specs(default_design_subset()), {{"t_cP", {0.015, 0.03}}}, "box");
  const auto s = fit_appendage_surrogate(default_bench_config(), DesignVector{}, narrow, SurrogateFitOptions{30, 2, 3});
  auto opt = tiny_options();
  EXPECT_THROW(monolithic_codesign(default_bench_config(), Requirements{}, s, opt), ValidationError);
}

TEST(Codesign, UncertaintyBoundsShrinkTheModelSet) {
  CodesignOptions o;
  o.sigma_points = 0;
  o.uncertainty_bounds = {{"m_B", {-0.05, 0.05}}};
  const auto m = tuning_models(o);
  ASSERT_EQ(m.size(), 257u);
  for (const auto& s : m)
    if (s.delta.count("m_B")) EXPECT_EQ(std::abs(s.delta.at("m_B")), 0.05);
  o.uncertainty_bounds = {{"m_B", {0.01, 0.05}}};
  EXPECT_THROW(tuning_models(o), ValidationError);
  o.uncertainty_bounds = {{"sigma4", {0.0, 0.5}}};
  EXPECT_THROW(tuning_models(o), ValidationError);
}
