#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "flexsc/common/error.hpp"
#include "flexsc/synthesis/synthesis.hpp"
#include "flexsc/titop/rigid_body.hpp"

using namespace flexsc;

namespace {

const Vector3d kJ(2415.33, 1695.25, 2929.28);

ControllerGains table_final_gains() {
  return ControllerGains::from_vector({35.0764, 335.2577, 13.9779, 280.8861, 35.008, 404.4305});
}

Plant rigid_plant(const Vector3d& j = kJ) {
  RigidBodySpec s;
  s.mass = 1300.0;
  s.inertia = j.asDiagonal();
  return plant_from_dynamics(rigid_multiport(s, s.com));
}

LoopFamily rigid_family(const Requirements& r = {}) { return LoopFamily({rigid_plant()}, {"nominal"}, r); }

const LoopFamily& bench_family() {
  static const LoopFamily f = [] {
    const auto cfg = default_bench_config();
    std::vector<ModelSpec> models = {{"nominal", {}}};
    const auto all = default_model_set(2);
    for (std::size_t k : {1u, 77u, 200u, 256u}) models.push_back(all[k]);
    models.push_back(all.back());
    return LoopFamily::build(cfg, DesignVector{}, models, Requirements{});
  }();
  return f;
}

TuneOptions quick_options() {
  TuneOptions o;
  o.budget = 160;
  o.max_rounds = 2;
  o.starts = 3;
  o.final_indices.certify_top = 2;
  return o;
}

}  // namespace

TEST(ModelSet, DefaultCountAndLabels) {
  const auto m = default_model_set(5);
  ASSERT_EQ(m.size(), 1u + 256u + 5u);
  EXPECT_EQ(m[0].label, "nominal");
  EXPECT_TRUE(m[0].delta.empty());
  EXPECT_EQ(m[1].label, "v0");
  EXPECT_EQ(m[1].delta.size(), 8u);
  EXPECT_DOUBLE_EQ(m.back().delta.at("sigma4"), 1.0);
  EXPECT_DOUBLE_EQ(m[257].delta.at("sigma4"), 0.2);
}

TEST(ModelSet, JsonRoundTripAndStrict) {
  const auto m = default_model_set(1);
  const auto back = model_set_from_json(to_json(m));
  ASSERT_EQ(back.size(), m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_EQ(back[i].label, m[i].label);
    EXPECT_EQ(back[i].delta, m[i].delta);
  }
  EXPECT_EQ(model_set_from_json({{"scheme", "nominal"}}).size(), 1u);
  EXPECT_THROW(model_set_from_json({{"schema", "nominal"}}), ValidationError);
  EXPECT_THROW(model_set_from_json({{"models", {{{"label", "x"}, {"delta", {{"bogus", 0.1}}}}}}}), ValidationError);
}

TEST(Indices, PenalizedObjective) {
  const IndexValues v{0.3, 1.5, 0.9, 1.1, 0.2};
  EXPECT_NEAR(penalized_objective(v, 1e3), 0.3 + 1e3 * (0.25 + 0.01), 1e-12);
  EXPECT_DOUBLE_EQ(penalized_objective({0.3, 0.5, 0.5, 0.5, 0.5}, 1e3), 0.3);
  EXPECT_TRUE(std::isinf(penalized_objective({0.3, INFINITY, 0.5, 0.5, 0.5}, 1e3)));
}

TEST(Indices, ZeroGainSensitivityIsInverseGamma) {
  const auto fam = rigid_family();
  ControllerGains zero;
  zero.kp.setZero();
  zero.kv.setZero();
  const auto v = fam.evaluate(0, zero, true);
  EXPECT_NEAR(v[4], 1.0 / 1.5, 1e-9);
  EXPECT_TRUE(std::isinf(v[1]));
  // sensor noise never reaches the plant with an open loop
  EXPECT_NEAR(v[0], 0.0, 1e-12);
}

TEST(Indices, RigidFinalGainsApeAboveStaticBound) {
  const auto fam = rigid_family();
  const auto g = table_final_gains();
  const auto v = fam.evaluate(0, g, true);
  EXPECT_GE(v[1], 0.677);
  EXPECT_GE(v[1], static_ape_index(g, Requirements{}) * (1 - 1e-6));
  for (double x : v) EXPECT_TRUE(std::isfinite(x));
  const auto est = fam.evaluate(0, g, false);
  for (int j = 1; j < kNumIndices; ++j) EXPECT_LE(est[j], v[j] * (1 + 1e-9));
  EXPECT_NEAR(est[0], v[0], 1e-12 * v[0]);
}

TEST(Indices, EvaluationIsPure) {
  const auto& fam = bench_family();
  const auto g = table_final_gains();
  const auto a = fam.evaluate(1, g, true);
  fam.evaluate(0, ControllerGains{}, true);
  const auto b = fam.evaluate(1, g, true);
  for (int j = 0; j < kNumIndices; ++j) EXPECT_EQ(a[j], b[j]);
}

TEST(Indices, WorstModelAttributionReproduces) {
  const auto& fam = bench_family();
  const auto g = table_final_gains();
  const auto c = control_indices(fam, g);
  for (int j = 0; j < kNumIndices; ++j) {
    const auto v = fam.evaluate(c.worst[j], g, true);
    EXPECT_NEAR(v[j], c.jc[j], 1e-9 * std::max(1.0, c.jc[j])) << index_names()[j];
    EXPECT_EQ(c.worst_label[j], fam.label(c.worst[j]));
  }
  const auto again = control_indices(fam, g);
  for (int j = 0; j < kNumIndices; ++j) EXPECT_NEAR(again.jc[j], c.jc[j], 1e-9 * c.jc[j]);
  IndexOptions par;
  par.workers = 3;
  const auto p = control_indices(fam, g, par);
  for (int j = 0; j < kNumIndices; ++j) EXPECT_EQ(p.jc[j], c.jc[j]);
}

TEST(Indices, SubsetMaxBoundedByFull) {
  const auto& fam = bench_family();
  const auto g = table_final_gains();
  const auto full = control_indices(fam, g);
  const auto sub = control_indices(fam, g, {}, {0, 2});
  for (int j = 0; j < kNumIndices; ++j) EXPECT_LE(sub.jc[j], full.jc[j] * (1 + 1e-12));
  EXPECT_TRUE(sub.worst[0] == 0 || sub.worst[0] == 2);
}

TEST(Tune, RigidNominalReachesFeasibility) {
  const auto fam = rigid_family();
  const Requirements req;
  const auto init = initial_gains(kJ.asDiagonal(), req);
  EXPECT_GT(static_ape_index(init, req), 1.0);
  const auto res = tune(fam, init, quick_options());
  EXPECT_TRUE(res.feasible);
  EXPECT_LE(res.indices.max_constraint(), 1.0);
  for (int i = 0; i < 3; ++i) EXPECT_GT(res.gains.kp(i), init.kp(i));
  EXPECT_LE(static_ape_index(res.gains, req), 1.0);
  EXPECT_GT(res.evaluations, 0);
  EXPECT_LE(res.evaluations, quick_options().budget + 20);
}

TEST(Tune, RigidApeOnStaticTradeCurve) {
  const auto fam = rigid_family();
  const Requirements req;
  const auto res = tune(fam, initial_gains(kJ.asDiagonal(), req), quick_options());
  ASSERT_TRUE(res.feasible);
  const double s = static_ape_index(res.gains, req);
  EXPECT_NEAR(res.indices.jc[1], s, 0.05 * s);
}

TEST(Tune, StoredIndicesMatchFreshEvaluation) {
  const auto fam = rigid_family();
  const auto o = quick_options();
  const auto res = tune(fam, initial_gains(kJ.asDiagonal(), Requirements{}), o);
  const auto fresh = control_indices(fam, res.gains, o.final_indices);
  for (int j = 0; j < kNumIndices; ++j) EXPECT_NEAR(fresh.jc[j], res.indices.jc[j], 1e-9 * res.indices.jc[j]);
}

TEST(Tune, TraceMonotoneWithinRound) {
  const auto fam = rigid_family();
  const auto res = tune(fam, initial_gains(kJ.asDiagonal(), Requirements{}), quick_options());
  ASSERT_FALSE(res.trace.empty());
  for (std::size_t k = 1; k < res.trace.size(); ++k) {
    if (res.trace[k].round != res.trace[k - 1].round) continue;
    EXPECT_LE(res.trace[k].objective, res.trace[k - 1].objective);
    EXPECT_GE(res.trace[k].evaluations, res.trace[k - 1].evaluations);
  }
}

TEST(Tune, Reproducible) {
  const auto fam = rigid_family();
  const auto init = initial_gains(kJ.asDiagonal(), Requirements{});
  const auto a = tune(fam, init, quick_options());
  const auto b = tune(fam, init, quick_options());
  const auto va = a.gains.to_vector(), vb = b.gains.to_vector();
  for (std::size_t i = 0; i < va.size(); ++i) EXPECT_NEAR(va[i], vb[i], 1e-9 * va[i]);
  for (int j = 0; j < kNumIndices; ++j) EXPECT_NEAR(a.indices.jc[j], b.indices.jc[j], 1e-9 * a.indices.jc[j]);
}

TEST(Tune, SlackApeLowersNoiseIndex) {
  Requirements slack;
  slack.ape *= 100.0;
  const auto strict_fam = rigid_family();
  const auto slack_fam = rigid_family(slack);
  const auto init = initial_gains(kJ.asDiagonal(), Requirements{});
  const auto strict = tune(strict_fam, init, quick_options());
  const auto loose = tune(slack_fam, init, quick_options());
  ASSERT_TRUE(loose.feasible);
  // Gains tuned for the strict APE, scored with the slack weights.
  const double reference = slack_fam.evaluate(0, strict.gains, true)[0];
  EXPECT_LT(loose.indices.jc[0], reference);
  EXPECT_LT(loose.indices.jc[0], slack_fam.evaluate(0, init, true)[0]);
}

TEST(Tune, StabilizesFromUnstableStart) {
  const auto fam = rigid_family();
  const auto init = initial_gains(kJ.asDiagonal(), Requirements{});
  ControllerGains bad = init;
  bad.kp *= 1e3;
  bad.kv *= 1e3;
  EXPECT_TRUE(std::isinf(fam.evaluate(0, bad)[1]));
  const auto res = tune(fam, bad, quick_options());
  for (double x : res.indices.jc) EXPECT_TRUE(std::isfinite(x));
}

TEST(Tune, OptionsJsonStrict) {
  TuneOptions o;
  o.budget = 77;
  o.seed = 9;
  const auto back = tune_options_from_json(to_json(o));
  EXPECT_EQ(back.budget, 77);
  EXPECT_EQ(back.seed, 9u);
  EXPECT_THROW(tune_options_from_json({{"budgt", 3}}), ValidationError);
  EXPECT_THROW(tune_options_from_json({{"margin", 1.5}}), ValidationError);
  EXPECT_THROW(tune(rigid_family(), ControllerGains::from_vector({1, 1, 1, -1, 1, 1})), ValidationError);
}

TEST(Timing, BenchEvaluation) {
  const auto& fam = bench_family();
  const auto g = table_final_gains();
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < fam.size(); ++i) fam.evaluate(i, g, false);
  const double per = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / fam.size();
  RecordProperty("seconds_per_model", std::to_string(per));
  std::printf("bench model evaluation: %.4f s (order %ld)\n", per, static_cast<long>(fam.plant(0).system.order()));
  EXPECT_LT(per, 1.0);
}
