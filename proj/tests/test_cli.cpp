#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "flexsc/cli/cli.hpp"
#include "flexsc/common/error.hpp"

using namespace flexsc;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path work_dir() {
  static const fs::path d = [] {
    const fs::path p = fs::temp_directory_path() / "flexsc_cli_test";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

fs::path write_config(const std::string& name, const json& j) {
  const fs::path p = work_dir() / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

int run(const std::string& args) {
  const std::string cmd = std::string(FLEXSC_CLI_PATH) + " " + args + " > /dev/null 2> " +
                          (work_dir() / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

json tiny_codesign() {
  return {{"model_set", {{"scheme", "nominal"}}},
          {"codesign",
           {{"model_scheme", "nominal"},
            {"pso", {{"iterations", 2}, {"swarm", 3}}},
            {"tune", {{"budget", 60}, {"max_rounds", 1}, {"starts", 2}, {"certify_top", 1}}}}},
          {"worst_case", {{"n_tau", 2}, {"vertices", false}, {"budget", 30}}}};
}

}  // namespace

TEST(Cli, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Cli, ConfigIsStrictAndRoundTrips) {
  EXPECT_THROW(run_config_from_json({{"bogus", 1}}), ValidationError);
  EXPECT_THROW(run_config_from_json({{"tune", {{"budgte", 3}}}}), ValidationError);
  EXPECT_THROW(run_config_from_json({{"design", {{"t_sP", 1.0}}}}), ValidationError);
  EXPECT_THROW(run_config_from_json({{"design_bounds", {{"t_sP", {4e-4, 2e-4}}}}}), ValidationError);
  EXPECT_THROW(run_config_from_json({{"uncertainty_bounds", {{"m_B", {-0.3, 0.1}}}}}), ValidationError);
  EXPECT_THROW(run_config_from_json({{"codesign", {{"base", {{"t_sP", 3e-4}}}}}}), ValidationError);
  EXPECT_THROW(run_config_from_json({{"channels", {"noise"}}}), ValidationError);
  EXPECT_THROW(run_config_from_json({{"sweep", {{"parameter", "R_SRS"}}}}), ValidationError);
  const RunConfig c = run_config_from_json({{"seed", 9},
                                            {"workers", 2},
                                            {"design", {{"t_cP", 0.02}}},
                                            {"design_bounds", {{"t_cP", {0.015, 0.03}}}},
                                            {"sweep", {{"parameter", "t_cP"}, {"range", {0.015, 0.03}}, {"points", 4}}}});
  EXPECT_EQ(c.codesign.pso.seed, 9u);
  EXPECT_EQ(c.tune.seed, 9u);
  EXPECT_EQ(c.worst_case.workers, 2);
  EXPECT_EQ(c.design.t_cP, 0.02);
  ASSERT_TRUE(c.sweep.has_value());
  EXPECT_EQ(c.sweep->grid.size(), 4u);
  const RunConfig back = run_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
}

TEST(Cli, OverridesRouteToTheCommand) {
  RunConfig c = run_config_from_json(json::object());
  apply_overrides(c, "codesign-mono", {.budget = 77});
  EXPECT_EQ(c.codesign.mono_budget, 77);
  apply_overrides(c, "validate", {.channel = "rpe", .budget = 12});
  ASSERT_EQ(c.channels.size(), 1u);
  EXPECT_EQ(c.channels[0], WcChannel::rpe);
  EXPECT_EQ(c.worst_case.budget, 12);
  EXPECT_THROW(apply_overrides(c, "build", {.budget = 5}), ValidationError);
  EXPECT_THROW(apply_overrides(c, "tune", {.channel = "APE"}), ValidationError);
  EXPECT_THROW(apply_overrides(c, "tune", {.workers = 0}), ValidationError);
}

TEST(Cli, BuildMassIsHubPlusAppendages) {
  const fs::path out = work_dir() / "build";
  ASSERT_EQ(run("build --out " + out.string()), 0);
  const json p = load(out / "plant.json");
  EXPECT_NEAR(p.at("total_mass").get<double>(), p.at("constituent_mass_sum").get<double>(),
              1e-6 * p.at("constituent_mass_sum").get<double>());
  const json& parts = p.at("constituents");
  double sum = parts.at("hub").get<double>();
  for (const char* k : {"yoke", "panel", "srs", "sar"})
    sum += parts.at(k).at("count").get<int>() * parts.at(k).at("mass").get<double>();
  EXPECT_NEAR(sum, p.at("constituent_mass_sum").get<double>(), 1e-9 * sum);
  EXPECT_TRUE(p.at("launch_ok").get<bool>());
  const json m = load(out / "manifest.json");
  EXPECT_EQ(m.at("config_sha256"), sha256_hex("{}"));
  EXPECT_EQ(m.at("exit_code"), 0);
}

TEST(Cli, ExitCodes) {
  const auto bad = write_config("bad.json", {{"tune", {{"iterations", 3}}}});
  EXPECT_EQ(run("tune --config " + bad.string()), 2);
  EXPECT_NE(slurp(work_dir() / "stderr.txt").find("iterations"), std::string::npos);
  EXPECT_EQ(run("nonsense"), 2);
  EXPECT_EQ(run("build --config " + (work_dir() / "missing.json").string()), 1);
  const auto hard = write_config("hard.json", {{"model_set", {{"scheme", "nominal"}}},
                                               {"tune", {{"budget", 1}, {"max_rounds", 1}, {"starts", 1}}}});
  EXPECT_EQ(run("tune --config " + hard.string() + " --out " + (work_dir() / "hard").string()), 3);
  EXPECT_EQ(load(work_dir() / "hard" / "manifest.json").at("exit_code"), 3);
}

TEST(Cli, DistributedRunIsByteIdenticalAndConfigUntouched) {
  const auto cfg = write_config("desk.json", tiny_codesign());
  const std::string before = slurp(cfg);
  const fs::path a = work_dir() / "dist_a", b = work_dir() / "dist_b";
  const int ca = run("codesign-dist --config " + cfg.string() + " --seed 7 --out " + a.string());
  const int cb = run("codesign-dist --config " + cfg.string() + " --seed 7 --out " + b.string());
  ASSERT_TRUE(ca == 0 || ca == 3);
  EXPECT_EQ(ca, cb);
  EXPECT_EQ(slurp(a / "codesign_dist.json"), slurp(b / "codesign_dist.json"));
  EXPECT_EQ(slurp(a / "pareto.csv"), slurp(b / "pareto.csv"));
  EXPECT_EQ(slurp(cfg), before);
  const json m = load(a / "manifest.json");
  EXPECT_EQ(m.at("seed"), 7);
  EXPECT_EQ(m.at("config_sha256"), sha256_hex(before));
  EXPECT_EQ(m.at("effective_config").at("codesign").at("pso").at("seed"), 7);
  // the recorded effective config reproduces the run
  const auto again = write_config("again.json", m.at("effective_config"));
  const fs::path c = work_dir() / "dist_c";
  EXPECT_EQ(run("codesign-dist --config " + again.string() + " --out " + c.string()), ca);
  EXPECT_EQ(slurp(c / "codesign_dist.json"), slurp(a / "codesign_dist.json"));

  // validate the co-design result on one channel
  json v = tiny_codesign();
  v["result"] = (a / "codesign_dist.json").string();
  v["worst_case"]["vertices"] = true;
  const auto vcfg = write_config("validate.json", v);
  const fs::path vo = work_dir() / "val";
  ASSERT_EQ(run("validate --config " + vcfg.string() + " --channel APE --out " + vo.string()), 0);
  const json wc = load(vo / "worst_case_APE.json");
  int at_face = 0;
  for (const auto& p : structural_uncertainty_specs()) {
    const double x = wc.at("worst").at(p.name).get<double>();
    at_face += x == p.lo || x == p.hi;
  }
  EXPECT_GE(at_face, 1);
  EXPECT_EQ(wc.at("worst").size(), uncertainty_specs().size());
  const json s = load(vo / "summary.json");
  EXPECT_TRUE(s.contains("indices"));
  EXPECT_EQ(s.at("worst_cases").size(), 1u);
  EXPECT_TRUE(fs::exists(vo / "worst_case_APE.csv"));

  // report regenerates the summary from the saved pieces
  json r = json::object();
  r["report_inputs"] = {(vo / "worst_case_APE.json").string(), (a / "codesign_dist.json").string()};
  const auto rcfg = write_config("report.json", r);
  const fs::path ro = work_dir() / "rep";
  ASSERT_EQ(run("report --config " + rcfg.string() + " --out " + ro.string()), 0);
  const json rs = load(ro / "summary.json");
  EXPECT_EQ(rs.at("worst_cases").at(0).at("worst_gain"), s.at("worst_cases").at(0).at("worst_gain"));
}

TEST(Cli, SurrogateAndSweep) {
  json j = {{"surrogate", {{"samples", 20}, {"degree", 2}}},
            {"sweep", {{"parameter", "R_SRS"}, {"range", {0.0125, 0.02}}, {"points", 3}, {"omega", {0.5, 5.0}}}}};
  const auto cfg = write_config("sur.json", j);
  const fs::path out = work_dir() / "sur";
  ASSERT_EQ(run("fit-surrogate --config " + cfg.string() + " --out " + out.string()), 0);
  const AppendageSurrogate s = appendage_surrogate_from_json(load(out / "surrogate.json"));
  EXPECT_EQ(s.subset, default_design_subset());
  ASSERT_EQ(run("sweep --config " + cfg.string() + " --out " + out.string()), 0);
  const std::string csv = slurp(out / "sweep_R_SRS.csv");
  EXPECT_EQ(csv.rfind("param_value,omega,sigma\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 3 * 2);
  EXPECT_EQ(run("sweep --config " + cfg.string() + " --channel APE --out " + out.string()), 2);
}

TEST(Cli, RefusesToOverwriteTheConfig) {
  const fs::path dir = work_dir() / "self";
  fs::create_directories(dir);
  const fs::path cfg = dir / "manifest.json";
  std::ofstream(cfg) << "{}";
  EXPECT_EQ(run("build --config " + cfg.string() + " --out " + dir.string()), 1);
  EXPECT_EQ(slurp(cfg), "{}");
}
