#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "flexsc/acs/acs.hpp"
#include "flexsc/common/error.hpp"
#include "flexsc/lti/frequency.hpp"
#include "flexsc/lti/norms.hpp"
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

StateSpace identity3() { return StateSpace::gain(MatrixXd::Identity(3, 3), {{"in", 3}}, {{"out", 3}}); }

Avionics ideal_avionics() {
  Avionics av;
  av.rw = av.gyro = av.sst = av.delay = identity3();
  MatrixXd d = MatrixXd::Identity(6, 6);
  av.observer = StateSpace::gain(d, {{"theta_m", 3}, {"omega_m", 3}}, {{"theta_hat", 3}, {"omega_hat", 3}});
  return av;
}

cdouble siso_at(const StateSpace& g, Index out, Index in, double w) { return HessenbergEvaluator(g).at({0.0, w})(out, in); }

}  // namespace

TEST(Avionics, ReactionWheel) {
  const auto av = avionics();
  EXPECT_EQ(av.rw.order(), 6);
  const MatrixXd dc = dc_gain(av.rw);
  EXPECT_LT((dc - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
  // zeta = 0.7 sits just under 1/sqrt(2): peak 1/(2 zeta sqrt(1 - zeta^2))
  EXPECT_NEAR(hinf_norm(av.rw), 1.0 / (2 * 0.7 * std::sqrt(1 - 0.49)), 1e-6);
  const cdouble s(0.0, 100.0 * M_PI);
  EXPECT_NEAR(std::abs(siso_at(av.rw, 1, 1, 100.0 * M_PI) - 1.0 / (1.4 * s / (100.0 * M_PI))), 0.0, 1e-12);
}

TEST(Avionics, SensorsAreFirstOrderLags) {
  const auto av = avionics();
  for (double w : {1.0, 10.0, 300.0}) {
    EXPECT_NEAR(std::abs(siso_at(av.gyro, 0, 0, w) - 200 * M_PI / cdouble(200 * M_PI, w)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(siso_at(av.sst, 2, 2, w) - 16 * M_PI / cdouble(16 * M_PI, w)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(siso_at(av.sst, 2, 1, w)), 0.0, 1e-15);
  }
}

TEST(Avionics, PadeDelayIsAllPass) {
  const auto av = avionics();
  EXPECT_NEAR(dc_gain(av.delay)(0, 0), 1.0, 1e-14);
  const HessenbergEvaluator ev(av.delay);
  for (double w : logspace(-3, 4, 200)) {
    const MatrixXcd g = ev.at({0.0, w});
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(std::abs(g(i, i)), 1.0, 1e-10) << w;
  }
  // phase matches exp(-j w Td) at low frequency
  EXPECT_NEAR(std::arg(ev.at({0.0, 0.5})(0, 0)), -0.5 * kLoopDelay, 1e-6);
}

TEST(Observer, AsPrintedAttitudeChannelIsHighPass) {
  const StateSpace o = observer(ObserverPortOrder::as_printed).select({"theta_m"}, {"theta_hat"});
  const HessenbergEvaluator ev(o);
  for (double w : logspace(-4, 2, 120)) {
    const cdouble s(0.0, w);
    const cdouble ref = s * s / (s * s + 0.1131 * s + 0.003948);
    const MatrixXcd g = ev.at(s);
    for (int i = 0; i < 3; ++i) EXPECT_LT(std::abs(g(i, i) - ref), 1e-9) << w;
    EXPECT_EQ(std::abs(g(0, 1)), 0.0);
  }
}

TEST(Observer, ComplementaryOrderFollowsAttitude) {
  const StateSpace o = observer(ObserverPortOrder::complementary);
  const HessenbergEvaluator ev(o);
  const auto th = o.input("theta_m"), om = o.input("omega_m"), th_hat = o.output("theta_hat"),
             om_hat = o.output("omega_hat");
  for (double w : logspace(-4, 2, 60)) {
    const cdouble s(0.0, w);
    const MatrixXcd g = ev.at(s);
    const cdouble tt = g(th_hat.offset, th.offset);
    EXPECT_LT(std::abs(tt - (0.1131 * s + 0.00394) / (s * s + 0.1131 * s + 0.003948)), 1e-9);
    const cdouble tw = g(th_hat.offset, om.offset);
    EXPECT_LT(std::abs(tw - s / (s * s + 0.1131 * s + 0.003948)), 1e-9);
    // rate estimate is the derivative of the attitude estimate
    EXPECT_LT(std::abs(g(om_hat.offset, th.offset) - s * tt), 1e-9);
    EXPECT_LT(std::abs(g(om_hat.offset, om.offset) - s * tw), 1e-9);
  }
  EXPECT_NEAR(dc_gain(o)(th_hat.offset, th.offset), 0.00394 / 0.003948, 1e-12);
}

TEST(Weights, Values) {
  const Requirements r;
  const auto w = weights(r);
  EXPECT_NEAR(dc_gain(w.w_rpe).cwiseAbs().maxCoeff(), 0.0, 1e-12);
  const MatrixXcd hi = HessenbergEvaluator(w.w_rpe).at({0.0, 1e7});
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(std::abs(hi(i, i)), 2000.0, 1e-2);
  EXPECT_LT((w.w_s.d() - (2.0 / 3.0) * MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(w.w_ape.d()(1, 1), 5000.0, 1e-9);
  EXPECT_NEAR(w.wn_sst.d()(0, 0), 3.5e-5, 1e-18);
  EXPECT_NEAR(w.wn_gyro.d()(2, 2), 1.4e-6, 1e-18);
  EXPECT_NEAR(w.w_ext.d()(0, 0), 1.9e-3, 1e-18);
  EXPECT_NEAR(w.w_u.d()(0, 0), 1.0 / 0.215, 1e-12);
}

TEST(Margins, FromGamma) {
  const auto m = margins_from_gamma(1.5);
  // printed values are 4-digit roundings
  EXPECT_NEAR(m.gain / 3.0, 1.0, 1e-3);
  EXPECT_NEAR(m.gain_db / 9.542, 1.0, 1e-3);
  EXPECT_NEAR(m.phase_deg / 38.94, 1.0, 1e-3);
  EXPECT_NEAR(m.disk / 0.667, 1.0, 1e-3);
  EXPECT_NEAR(m.phase_deg, 2.0 * std::asin(1.0 / 3.0) * 180.0 / M_PI, 1e-12);
  EXPECT_NEAR(m.gain_db, 20.0 * std::log10(3.0), 1e-12);
  EXPECT_THROW(margins_from_gamma(1.0), ValidationError);
}

TEST(Controller, StaticPd) {
  ControllerGains g = ControllerGains::from_vector({2.0, 3.0, 4.0, 5.0, 6.0, 7.0});
  const StateSpace k = controller(g);
  VectorXd y = VectorXd::Zero(6);
  y(0) = 1.0;
  EXPECT_LT((k.d() * y - Vector3d(-2.0, 0, 0)).norm(), 1e-15);
  y.setZero();
  y.tail(3) << 1.0, 2.0, 3.0;
  EXPECT_LT((k.d() * y - Vector3d(-3.0, -10.0, -21.0)).norm(), 1e-15);
  EXPECT_EQ(ControllerGains::from_vector(g.to_vector()), g);
  EXPECT_EQ(gains_from_json(to_json(g)), g);
  EXPECT_THROW(validate(ControllerGains::from_vector({1, 1, 1, 0, 1, 1})), ValidationError);
}

TEST(Controller, FinalGainsCommandIsSmall) {
  const Requirements r;
  VectorXd y = VectorXd::Zero(6);
  y.head(3) = r.ape;
  const VectorXd u = controller(table_final_gains()).d() * y;
  EXPECT_LT(u.cwiseAbs().maxCoeff(), 0.03 * 0.215);
}

TEST(InitialGains, TableBrackets) {
  const Requirements r;
  const auto g = initial_gains(kJ.asDiagonal(), r).to_vector();
  const std::vector<double> ref{8.6952, 202.8248, 6.1029, 142.4001, 10.5454, 246.0605};
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(g[i] / ref[i], 1.0, 1e-3) << i;
}

TEST(InitialGains, NominalBenchReproducesBrackets) {
  const Plant p = build_plant(default_bench_config(), DesignVector{}, 0.0, {});
  const auto g = initial_gains(rigid_inertia(p), Requirements{}).to_vector();
  const std::vector<double> ref{8.6952, 202.8248, 6.1029, 142.4001, 10.5454, 246.0605};
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(g[i] / ref[i], 1.0, 1e-3) << i;
}

TEST(InitialGains, ApeBoundBranch) {
  const Requirements r;
  const double w_req = std::sqrt(1.9e-3 / (2415.33 * 8e-5));
  EXPECT_NEAR(w_req, 0.0992, 1e-4);
  const auto g = initial_gains(kJ.asDiagonal(), r, 0.7, 0.06, true);
  EXPECT_NEAR(g.kp(0), 2415.33 * w_req * w_req, 1e-9);
  EXPECT_NEAR(g.kv(0), 1.4 * 2415.33 * w_req, 1e-9);
  EXPECT_NEAR(static_ape_index(g, r), 1.0, 1e-12);
}

TEST(GeneralizedPlant, Ports) {
  const auto gp = generalized_plant(rigid_plant(), avionics(), weights(Requirements{}));
  for (const char* in : {"T_ext_n", "n_sst", "n_gyro", "d_T", "u"}) EXPECT_TRUE(gp.system.has_input(in)) << in;
  for (const char* out : {"ape", "rpe", "u_n", "T_n", "y"}) EXPECT_TRUE(gp.system.has_output(out)) << out;
  EXPECT_EQ(gp.system.output("y").width, 6);
  Plant bad = rigid_plant();
  bad.system = bad.system.select({"u"}, {"theta", "omega"});
  EXPECT_THROW(generalized_plant(bad, avionics(), weights(Requirements{})), ValidationError);
}

TEST(GeneralizedPlant, RigidIdealLoopHasDesignPoles) {
  const Requirements r;
  const auto g = initial_gains(kJ.asDiagonal(), r);
  const auto cl = close_loop(generalized_plant(rigid_plant(), ideal_avionics(), weights(r)), g);
  ASSERT_TRUE(cl.stable);
  Eigen::EigenSolver<MatrixXd> es(cl.system.a(), false);
  // axis poles: -xi w +- j w sqrt(1 - xi^2); w_rpe adds -3/dt +- j sqrt(3)/dt
  std::vector<cdouble> expected;
  const cdouble p(-0.7 * 0.06, 0.06 * std::sqrt(1 - 0.49));
  for (int i = 0; i < 3; ++i) {
    expected.push_back(p);
    expected.push_back(std::conj(p));
    expected.push_back({-3.0 / 15.0, std::sqrt(3.0) / 15.0});
    expected.push_back({-3.0 / 15.0, -std::sqrt(3.0) / 15.0});
  }
  ASSERT_EQ(es.eigenvalues().size(), static_cast<Index>(expected.size()));
  for (const cdouble& e : expected) {
    double best = INFINITY;
    for (Index k = 0; k < es.eigenvalues().size(); ++k) best = std::min(best, std::abs(es.eigenvalues()(k) - e));
    EXPECT_LT(best, 1e-9);
  }
  // disturbance rejection 1 / (J (s^2 + 2 xi w s + w^2))
  const StateSpace tr = cl.system.select({"T_ext_n"}, {"ape"});
  for (double w : {0.01, 0.06, 0.3}) {
    const cdouble s(0.0, w);
    const cdouble ref = 1.9e-3 / 8e-5 / (2415.33 * (s * s + 2 * 0.7 * 0.06 * s + 0.0036));
    EXPECT_LT(std::abs(siso_at(tr, 0, 0, w) - ref) / std::abs(ref), 1e-9);
  }
}

TEST(GeneralizedPlant, StaticApeWithFinalGains) {
  const Requirements r;
  const ControllerGains g = table_final_gains();
  EXPECT_NEAR(static_ape_index(g, r), 0.680, 0.005);
  const auto cl = close_loop(generalized_plant(rigid_plant(), avionics(), weights(r)), g);
  ASSERT_TRUE(cl.stable);
  const MatrixXd dc = dc_gain(cl.system.select({"T_ext_n"}, {"ape"}));
  EXPECT_NEAR(dc.cwiseAbs().maxCoeff(), 0.680, 0.005);
  EXPECT_LT(dc.cwiseAbs().maxCoeff(), 0.7208);
}

TEST(GeneralizedPlant, ZeroGainsAreUnstable) {
  const auto gp = generalized_plant(rigid_plant(), avionics(), weights(Requirements{}));
  ControllerGains z;
  z.kp.setZero();
  z.kv.setZero();
  const auto cl = close_loop(gp, z);
  EXPECT_FALSE(cl.stable);
  EXPECT_THROW(hinf_norm(cl.system.select({"T_ext_n"}, {"ape"})), UnstableSystemError);
}

TEST(GeneralizedPlant, NoiseScalingDoublesH2) {
  Requirements r;
  const auto g = initial_gains(kJ.asDiagonal(), r);
  const auto a = close_loop(generalized_plant(rigid_plant(), avionics(), weights(r)), g);
  r.psd_sst *= 4.0;
  const auto b = close_loop(generalized_plant(rigid_plant(), avionics(), weights(r)), g);
  const double ha = h2_norm(a.system.select({"n_sst"}, {"ape"}));
  const double hb = h2_norm(b.system.select({"n_sst"}, {"ape"}));
  EXPECT_GT(ha, 0.0);
  EXPECT_NEAR(hb / ha, 2.0, 2e-9);
}

TEST(GeneralizedPlant, NoiseChannelIsStrictlyProper) {
  const auto g = initial_gains(kJ.asDiagonal(), Requirements{});
  const auto cl = close_loop(generalized_plant(rigid_plant(), avionics(), weights(Requirements{})), g);
  EXPECT_EQ(cl.system.select({"n_gyro", "n_sst"}, {"ape", "rpe"}).d().cwiseAbs().maxCoeff(), 0.0);
}

TEST(GeneralizedPlant, InitialGainsStabilizeFlexibleBenchOverTheta) {
  const auto cfg = default_bench_config();
  const Requirements r;
  const auto apps = generate_appendages(cfg, DesignVector{});
  const auto g = initial_gains(kNominalInertia.asDiagonal(), r);
  const auto av = avionics();
  const auto w = weights(r);
  for (double th : sigma4_grid(50)) {
    const auto cl = close_loop(generalized_plant(assemble_plant(cfg, apps, th, {}), av, w), g);
    EXPECT_TRUE(cl.stable) << th;
  }
}

TEST(Requirements, JsonAndValidation) {
  Requirements r;
  r.gamma = 1.7;
  const auto back = requirements_from_json(nlohmann::json::parse(to_json(r).dump()));
  EXPECT_EQ(back.gamma, 1.7);
  EXPECT_EQ(back.ape, r.ape);
  EXPECT_THROW(requirements_from_json({{"gamma", 0.9}}), ValidationError);
  EXPECT_THROW(requirements_from_json({{"apee", 1}}), ValidationError);
  EXPECT_THROW(requirements_from_json({{"ape", {1.0, 2.0}}}), ValidationError);
}
