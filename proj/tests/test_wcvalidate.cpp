#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "flexsc/common/error.hpp"
#include "flexsc/lti/frequency.hpp"
#include "flexsc/lti/norms.hpp"
#include "flexsc/lti/transfer.hpp"
#include "flexsc/validate/wcvalidate.hpp"

using namespace flexsc;

namespace {

ControllerGains table_final_gains() {
  return ControllerGains::from_vector({35.0764, 335.2577, 13.9779, 280.8861, 35.008, 404.4305});
}

std::vector<double> polymul(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> c(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
  return c;
}

// Sensitivity peak of a collocated PD loop on a rigid body plus one flexible
// mode at 1.2 (1 + delta) rad/s, close to the crossover.
double resonance_sensitivity(double delta) {
  const double wf = 1.2 * (1.0 + delta), z = 0.02, kp = 1.0, kv = 1.4, c = 0.5;
  const std::vector<double> mode = {1.0, 2.0 * z * wf, wf * wf};
  const std::vector<double> num = polymul({1.0, 0.0, 0.0}, mode);
  std::vector<double> plant_num = mode;
  plant_num[0] += c;
  std::vector<double> den = num;
  const auto loop = polymul({kv, kp}, plant_num);
  for (std::size_t i = 0; i < loop.size(); ++i) den[den.size() - loop.size() + i] += loop[i];
  return hinf_norm(transfer_function(num, den), 1e-9);
}

std::vector<ParameterSpec> one_delta(double lo, double hi) {
  return {{"d", 0.0, lo, hi, ParameterKind::uncertain, 1}};
}

WorstCaseOptions quick(int n_tau = 2) {
  WorstCaseOptions o;
  o.n_tau = n_tau;
  return o;
}

}  // namespace

TEST(Channels, Names) {
  EXPECT_EQ(wc_channel_from_string("ape"), WcChannel::ape);
  EXPECT_EQ(wc_channel_from_string("Sensitivity"), WcChannel::sensitivity);
  EXPECT_EQ(to_string(WcChannel::command), "Command");
  EXPECT_EQ(index_of(WcChannel::ape), 1);
  EXPECT_EQ(index_of(WcChannel::sensitivity), 4);
  EXPECT_THROW(wc_channel_from_string("noise"), ValidationError);
}

TEST(WorstCase, MonotoneStaticGain) {
  const auto r = worst_case_gain([](const Assignment& a, double) { return std::abs(1.0 + a.at("d")); },
                                 one_delta(-0.25, 0.25), "gain", quick());
  EXPECT_DOUBLE_EQ(r.worst_gain, 1.25);
  EXPECT_DOUBLE_EQ(r.worst.at("d"), 0.25);
  EXPECT_DOUBLE_EQ(r.nominal_gain, 1.0);
}

TEST(WorstCase, ResonanceAgainstDenseGrid) {
  double brute = 0.0, arg = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const double d = -0.25 + 0.5 * k / 9999.0;
    const double v = resonance_sensitivity(d);
    if (v > brute) {
      brute = v;
      arg = d;
    }
  }
  EXPECT_GT(arg, -0.25);
  EXPECT_LT(arg, 0.25);
  const auto r = worst_case_gain([](const Assignment& a, double) { return resonance_sensitivity(a.at("d")); },
                                 one_delta(-0.25, 0.25), "S", quick());
  EXPECT_NEAR(r.worst_gain, brute, 1e-2 * brute);
  EXPECT_LE(r.worst_gain, brute * (1 + 1e-6));
}

TEST(WorstCase, LowerBoundSoundness) {
  const std::vector<ParameterSpec> specs = {{"a", 0.0, -1.0, 1.0, ParameterKind::uncertain, 1},
                                            {"b", 0.0, -0.5, 0.5, ParameterKind::uncertain, 1},
                                            {"c", 0.0, -0.2, 0.3, ParameterKind::uncertain, 1}};
  const GainFunction f = [](const Assignment& x, double th) {
    return 1.0 + 0.4 * x.at("a") * x.at("a") + 0.5 * std::cos(th) * x.at("b") - 2.0 * std::pow(x.at("c") - 0.1, 2);
  };
  const auto r = worst_case_gain(f, specs, "synthetic", quick(8));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double sample_max = 0.0;
  std::vector<Assignment> samples;
  for (int k = 0; k < 100; ++k) {
    Assignment a;
    for (const auto& p : specs) a[p.name] = p.lo + u(rng) * (p.hi - p.lo);
    const double s4 = u(rng);
    sample_max = std::max(sample_max, f(a, sigma4_to_theta(s4)));
    a["sigma4"] = s4;
    samples.push_back(a);
  }
  EXPECT_GE(r.worst_gain, sample_max);
  auto seeded = quick(8);
  seeded.extra_starts = samples;
  EXPECT_GE(worst_case_gain(f, specs, "synthetic", seeded).worst_gain, sample_max);
  // the refined optimum: a at a face, b at +0.5, c interior at 0.1
  EXPECT_NEAR(r.worst_gain, 1.0 + 0.4 + 0.25, 1e-5);
  EXPECT_NEAR(r.worst.at("c"), 0.1, 1e-3);
}

TEST(WorstCase, ReproducesAtWorstAssignment) {
  const std::vector<ParameterSpec> specs = {{"a", 0.0, -1.0, 1.0, ParameterKind::uncertain, 1}};
  const GainFunction f = [](const Assignment& x, double th) { return 2.0 + std::sin(th) * x.at("a"); };
  const auto r = worst_case_gain(f, specs, "s", quick(11));
  Assignment d = r.worst;
  const double s4 = d.at("sigma4");
  d.erase("sigma4");
  EXPECT_NEAR(f(d, sigma4_to_theta(s4)), r.worst_gain, 1e-9);
  EXPECT_GE(r.worst_gain, r.nominal_gain);
  ASSERT_EQ(r.per_theta.size(), 11u);
  EXPECT_EQ(r.trace.size() + 1, static_cast<std::size_t>(r.evaluations));
}

TEST(WorstCase, DeterministicAcrossWorkers) {
  const GainFunction f = [](const Assignment& x, double th) { return resonance_sensitivity(x.at("d")) + 0.01 * th; };
  auto a = quick(6);
  auto b = a;
  b.workers = 3;
  EXPECT_EQ(to_json(worst_case_gain(f, one_delta(-0.25, 0.25), "x", a)).dump(),
            to_json(worst_case_gain(f, one_delta(-0.25, 0.25), "x", b)).dump());
}

TEST(WorstCase, Errors) {
  const GainFunction f = [](const Assignment&, double) { return 1.0; };
  EXPECT_THROW(worst_case_gain(f, {{"sigma4", 0.0, -1.0, 1.0, ParameterKind::uncertain, 1}}, "x"), ValidationError);
  auto o = quick();
  o.n_tau = 1;
  EXPECT_THROW(worst_case_gain(f, one_delta(-1, 1), "x", o), ValidationError);
  EXPECT_THROW(worst_case_options_from_json({{"ntau", 3}}), ValidationError);
}

TEST(BenchWorstCase, ThetaSymmetry) {
  const auto f = bench_gain_function(default_bench_config(), DesignVector{}, Requirements{}, table_final_gains(),
                                     WcChannel::ape);
  const Assignment d = {{"m_B", 0.1}, {"Ixx_B", -0.1}, {"w1_S", 0.2}};
  for (double th : {0.4, 1.3, 2.7}) {
    const double a = f(d, th), b = f(d, -th);
    EXPECT_NEAR(a, b, 1e-8 * a);
  }
}

TEST(BenchWorstCase, HeavyHubBindsApe) {
  const auto f = bench_gain_function(default_bench_config(), DesignVector{}, Requirements{}, table_final_gains(),
                                     WcChannel::ape);
  WorstCaseOptions o;
  o.n_tau = 2;
  o.vertices = false;
  o.budget = 40;
  const auto r = worst_case_gain(f, structural_uncertainty_specs(), "APE", o);
  EXPECT_GE(r.worst_gain, r.nominal_gain);
  int at_max = 0;
  for (const char* n : {"Ixx_B", "Iyy_B", "Izz_B"}) at_max += r.worst.at(n) == 0.15;
  EXPECT_GE(at_max, 1);
  Assignment d = r.worst;
  const double s4 = d.at("sigma4");
  d.erase("sigma4");
  EXPECT_NEAR(f(d, sigma4_to_theta(s4)), r.worst_gain, 1e-9 * r.worst_gain);
  EXPECT_EQ(r.worst.size(), uncertainty_specs().size());
}

TEST(Sweep, SrsRadiusLowersItsMode) {
  const auto cfg = default_bench_config();
  std::vector<double> grid;
  for (int k = 0; k < 6; ++k) grid.push_back(2.0e-2 - k * (2.0e-2 - 1.25e-2) / 5.0);
  const auto r = sigma_sweep(cfg, DesignVector{}, "R_SRS", grid);
  DesignVector x;
  x.R_SRS = grid[0];
  double track = generate_appendages(cfg, x).srs.freq(0);
  double prev = INFINITY;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double best = INFINITY, pick = 0.0;
    for (double w : r.poles[k])
      if (std::abs(w - track) < best) {
        best = std::abs(w - track);
        pick = w;
      }
    EXPECT_LT(pick, prev) << k;
    prev = track = pick;
  }
}

TEST(Sweep, ThetaContinuity) {
  std::vector<double> grid;
  for (int k = 0; k < 50; ++k) grid.push_back(M_PI * k / 49.0);
  SweepOptions o;
  o.omega = {0.1, 1.0};
  const auto r = sigma_sweep(default_bench_config(), DesignVector{}, "theta_sa", grid, o);
  double worst = 0.0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    ASSERT_EQ(r.poles[k].size(), r.poles[k - 1].size());
    for (std::size_t m = 0; m < r.poles[k].size(); ++m)
      worst = std::max(worst, std::abs(r.poles[k][m] - r.poles[k - 1][m]) / r.poles[k - 1][m]);
  }
  EXPECT_LT(worst, 0.05);
}

TEST(Sweep, SinglePointMatchesFrequencyResponse) {
  const auto cfg = default_bench_config();
  SweepOptions o;
  o.omega = logspace(-2, 1, 25);
  const auto r = sigma_sweep(cfg, DesignVector{}, "t_cV", {1.2e-3}, o);
  ASSERT_EQ(r.sigma.size(), 1u);
  DesignVector x;
  x.t_cV = 1.2e-3;
  const auto fr = frequency_response(build_plant(cfg, x, cfg.theta_sa, {}).system.select({"u"}, {"omega"}), o.omega);
  EXPECT_EQ(r.sigma[0], fr.sigma_max);
}

TEST(Sweep, ClosedLoopAndErrors) {
  const auto cfg = default_bench_config();
  SweepOptions o;
  o.omega = {0.01, 0.1};
  o.channel = "Sensitivity";
  EXPECT_THROW(sigma_sweep(cfg, DesignVector{}, "t_cV", {1e-3}, o), ValidationError);
  o.gains = table_final_gains();
  const auto r = sigma_sweep(cfg, DesignVector{}, "t_cV", {1e-3}, o);
  EXPECT_GT(r.sigma[0][0], 0.0);
  EXPECT_THROW(sigma_sweep(cfg, DesignVector{}, "t_cV", {5e-3}), ValidationError);
  EXPECT_THROW(sigma_sweep(cfg, DesignVector{}, "bogus", {1.0}), ValidationError);
  EXPECT_THROW(sigma_sweep(cfg, DesignVector{}, "theta_sa", {4.0}), ValidationError);
}

TEST(Report, EmptyAndSchema) {
  const auto empty = validation_summary({});
  EXPECT_TRUE(empty["worst_cases"].empty());
  EXPECT_TRUE(empty["pass"].get<bool>());
  ValidationInputs in;
  WorstCaseResult r;
  r.channel = "APE";
  r.worst_gain = 0.8;
  r.worst = {{"sigma4", 0.0}};
  for (const auto& p : structural_uncertainty_specs()) r.worst[p.name] = p.lo;
  r.theta = {0.0, M_PI};
  r.per_theta = {0.8, 0.7};
  r.per_theta_worst = {r.worst, r.worst};
  in.worst_cases.push_back(r);
  WorstCaseResult s = r;
  s.channel = "Command";
  s.worst_gain = 0.0123456789012345;
  in.worst_cases.push_back(s);
  const auto j = validation_summary(in);
  for (const auto& p : uncertainty_specs()) EXPECT_TRUE(j["worst_cases"][0]["worst"].contains(p.name));
  EXPECT_EQ(j["binding"].size(), 1u);
  EXPECT_EQ(j["binding"][0], "APE");
  // bit-exact reload
  const auto parsed = nlohmann::json::parse(j.dump());
  const auto back = worst_case_from_json(parsed["worst_cases"][1]);
  EXPECT_EQ(back.worst_gain, s.worst_gain);
  EXPECT_EQ(back.per_theta, s.per_theta);
  EXPECT_EQ(back.theta, s.theta);
  EXPECT_EQ(back.worst, s.worst);
}

TEST(Report, WritesFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "flexsc_report_test";
  std::filesystem::remove_all(dir);
  ValidationInputs in;
  WorstCaseResult r;
  r.channel = "RPE";
  r.theta = {0.0, 1.0};
  r.per_theta = {0.1, 0.2};
  r.per_theta_worst = {{}, {}};
  in.worst_cases.push_back(r);
  SweepResult sw;
  sw.parameter = "t_cV";
  sw.grid = {1e-3};
  sw.omega = {0.1, 1.0};
  sw.sigma = {{2.0, 3.0}};
  sw.poles = {{}};
  in.sweeps.push_back(sw);
  const auto paths = validation_report(in, dir.string());
  ASSERT_EQ(paths.size(), 3u);
  for (const auto& p : paths) EXPECT_TRUE(std::filesystem::exists(p));
  std::ifstream csv(dir / "worst_case_RPE.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "theta_sa,worst_gain");
  const auto a = validation_summary(in).dump(2) + "\n";
  std::ifstream js(dir / "summary.json");
  const std::string b((std::istreambuf_iterator<char>(js)), std::istreambuf_iterator<char>());
  EXPECT_EQ(a, b);
  std::filesystem::remove_all(dir);
}
