#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "flexsc/codesign/codesign.hpp"
#include "flexsc/validate/wcvalidate.hpp"

namespace flexsc {

/// Exit codes of the batch front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitInfeasible = 3;

inline constexpr const char* kVersion = "0.1.0";

struct SweepSpec {
  std::string parameter;
  std::vector<double> grid;
  SweepOptions options;
};

/// Everything a run needs; parsed strictly from one JSON document.
struct RunConfig {
  std::string bench_path;  ///< empty for the built-in benchmark
  BenchConfig bench = default_bench_config();
  Requirements requirements;
  Bounds uncertainty_bounds;
  Bounds design_bounds;
  DesignVector design;  ///< design for build, tune, validate and sweep
  std::optional<ControllerGains> gains;
  std::string result_path;  ///< prior tune or co-design result providing design and gains
  nlohmann::json model_set = {{"scheme", "default"}};
  TuneOptions tune;
  CodesignOptions codesign;
  SurrogateFitOptions surrogate_fit;
  std::string surrogate_path;  ///< fitted surrogate for codesign-mono
  WorstCaseOptions worst_case;
  std::vector<WcChannel> channels = all_wc_channels();
  std::optional<SweepSpec> sweep;
  std::vector<std::string> report_inputs;
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::string out = "out";
};

/// Unknown keys are rejected; relative paths resolve against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& j, const std::string& base_dir = ".");
nlohmann::json to_json(const RunConfig& c);

/// Command-line overrides, applied after parsing.
struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
  std::optional<std::string> channel;
  std::optional<int> budget;
};

void apply_overrides(RunConfig& c, const std::string& command, const CliOverrides& o);

/// Lowercase hex SHA-256 of `bytes`.
std::string sha256_hex(const std::string& bytes);

const std::vector<std::string>& cli_commands();

/// Runs one command; writes its artifacts and manifest.json under c.out.
/// Returns the exit code; validation errors propagate as exceptions.
int run_command(const std::string& command, const RunConfig& c, const std::string& config_text,
                const std::string& config_path, std::vector<std::string>& written);

/// Full front end including argument parsing; never throws.
int cli_main(int argc, char** argv);

}  // namespace flexsc
