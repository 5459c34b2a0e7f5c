#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "flexsc/synthesis/synthesis.hpp"

namespace flexsc {

/// Closed-loop channels checked by worst-case analysis.
enum class WcChannel { ape, rpe, command, sensitivity };

const std::vector<WcChannel>& all_wc_channels();
std::string to_string(WcChannel c);
/// Case-insensitive "APE", "RPE", "Command", "Sensitivity".
WcChannel wc_channel_from_string(const std::string& s);
/// Position among the control indices (Jc2 ... Jc5).
int index_of(WcChannel c);

/// Peak gain of the channel for an assignment (without sigma4) at a solar-array angle.
using GainFunction = std::function<double(const Assignment& delta, double theta_sa)>;

/// Gain function of the benchmark closed loop for a fixed design and gains.
GainFunction bench_gain_function(const BenchConfig& cfg, const DesignVector& x, const Requirements& req,
                                 const ControllerGains& g, WcChannel channel);

struct WorstCaseOptions {
  int n_tau = 50;
  bool vertices = true;   ///< box vertices as start points (d <= 12)
  int budget = 200;       ///< refinement evaluations per grid angle
  /// Extra assignments evaluated as start points, at their own sigma4 when given.
  std::vector<Assignment> extra_starts;
  double initial_step = 0.5;  ///< fraction of the half range
  double min_step = 1e-3;
  int workers = 1;
};

void validate(const WorstCaseOptions& o);
nlohmann::json to_json(const WorstCaseOptions& o);
WorstCaseOptions worst_case_options_from_json(const nlohmann::json& j);

struct WorstCaseResult {
  std::string channel;
  double worst_gain = 0.0;  ///< lower bound
  Assignment worst;         ///< every uncertainty parameter, sigma4 included
  double worst_theta = 0.0;
  double nominal_gain = 0.0;
  std::vector<double> theta;      ///< grid
  std::vector<double> per_theta;  ///< worst gain per grid angle
  std::vector<Assignment> per_theta_worst;
  std::vector<double> trace;      ///< running best over the search, grid angle major
  int evaluations = 0;
};

/// Grid over sigma4 in [0, 1]; per angle: nominal, both hub inertia
/// corners and the box vertices, then coordinate ascent from the best start.
WorstCaseResult worst_case_gain(const GainFunction& f, const std::vector<ParameterSpec>& specs,
                                const std::string& channel, const WorstCaseOptions& opt = {});

nlohmann::json to_json(const WorstCaseResult& r);
WorstCaseResult worst_case_from_json(const nlohmann::json& j);

struct SweepOptions {
  /// "in->out" on the open-loop plant, or a closed-loop channel name with `gains`.
  std::string channel = "u->omega";
  std::optional<ControllerGains> gains;
  Requirements req;
  std::vector<double> omega;  ///< rad/s; empty gives 200 log points in [1e-3, 1e2]
};

struct SweepResult {
  std::string parameter;
  std::string channel;
  std::vector<double> grid;
  std::vector<double> omega;
  std::vector<std::vector<double>> sigma;  ///< grid x omega, largest singular value
  /// Plant mode frequencies (rad/s) per grid point, sorted ascending.
  std::vector<std::vector<double>> poles;
};

/// `parameter` is a design variable or "theta_sa".
SweepResult sigma_sweep(const BenchConfig& cfg, const DesignVector& base, const std::string& parameter,
                        const std::vector<double>& grid, const SweepOptions& opt = {});

nlohmann::json to_json(const SweepResult& r);

struct ValidationInputs {
  std::optional<ControlIndices> indices;
  std::vector<WorstCaseResult> worst_cases;
  std::vector<SweepResult> sweeps;
};

/// Worst-case gains at or above this value mark a binding constraint.
inline constexpr double kBindingThreshold = 0.5;

/// summary.json plus CSV curves under `out_dir`; returns the written paths.
std::vector<std::string> validation_report(const ValidationInputs& in, const std::string& out_dir);
nlohmann::json validation_summary(const ValidationInputs& in);

}  // namespace flexsc
