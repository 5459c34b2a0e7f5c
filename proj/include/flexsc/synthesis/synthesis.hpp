#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "flexsc/acs/acs.hpp"

namespace flexsc {

inline constexpr int kNumIndices = 5;
/// Jc1 (H2 noise), Jc2 (APE), Jc3 (RPE), Jc4 (command), Jc5 (sensitivity).
using IndexValues = std::array<double, kNumIndices>;
const std::array<const char*, kNumIndices>& index_names();

struct ModelSpec {
  std::string label;
  Assignment delta;  ///< may contain sigma4
};

/// Nominal, the box vertices of the structural uncertainties, and
/// `sigma_points` SADM angles with sigma4 in (0, 1].
std::vector<ModelSpec> default_model_set(int sigma_points = 5);
/// Same with the vertices of `structural` (a narrowing of the table ranges).
std::vector<ModelSpec> default_model_set(int sigma_points, const std::vector<ParameterSpec>& structural);
/// Labels "nominal", "v<k>" and "sigma4=<value>".
std::vector<ModelSpec> model_set_from_json(const nlohmann::json& j);
nlohmann::json to_json(const std::vector<ModelSpec>& set);

/// Model family with one generalized plant per model; built once, evaluated for
/// many gains.
class LoopFamily {
 public:
  LoopFamily(const std::vector<Plant>& plants, std::vector<std::string> labels, const Requirements& req,
             ObserverPortOrder order = ObserverPortOrder::complementary);

  static LoopFamily build(const BenchConfig& cfg, const DesignVector& x, const std::vector<ModelSpec>& models,
                          const Requirements& req, int workers = 1);
  /// Appendage data supplied directly (surrogate-built plants).
  static LoopFamily build(const BenchConfig& cfg, const AppendageSet& apps, const std::vector<ModelSpec>& models,
                          const Requirements& req, int workers = 1);

  std::size_t size() const { return plants_.size(); }
  const std::string& label(std::size_t i) const { return labels_[i]; }
  const GeneralizedPlant& plant(std::size_t i) const { return plants_[i]; }
  const Requirements& requirements() const { return req_; }
  /// Model index of "nominal" (0 when absent).
  std::size_t nominal() const { return nominal_; }
  /// Model with the smallest trace of the rigid inertia.
  std::size_t min_inertia() const { return min_inertia_; }
  const std::vector<double>& masses() const { return masses_; }

  /// Indices of one model. Lower-bound H-infinity estimates unless `certify`.
  IndexValues evaluate(std::size_t model, const ControllerGains& g, bool certify = false) const;

 private:
  std::vector<GeneralizedPlant> plants_;
  std::vector<std::string> labels_;
  std::vector<double> masses_;
  Requirements req_;
  std::size_t nominal_ = 0, min_inertia_ = 0;
};

/// One index (0 = Jc1 ... 4 = Jc5) of a single generalized plant.
double index_value(const GeneralizedPlant& gp, const ControllerGains& g, int index, bool certify = false);

struct ControlIndices {
  IndexValues jc{};
  std::array<std::size_t, kNumIndices> worst{};
  std::array<std::string, kNumIndices> worst_label;

  double max_all() const;
  /// max(Jc2..Jc5)
  double max_constraint() const;
  double sum() const;
  bool feasible() const { return max_constraint() <= 1.0; }
};

nlohmann::json to_json(const ControlIndices& c);

struct IndexOptions {
  /// H-infinity values of the `certify_top` worst models per index are certified.
  bool certify = true;
  int certify_top = 3;
  int workers = 1;
};

/// Max over the family (or over `subset`) of every index.
ControlIndices control_indices(const LoopFamily& family, const ControllerGains& g, const IndexOptions& opt = {},
                               const std::vector<std::size_t>& subset = {});

struct TuneOptions {
  int starts = 5;
  int budget = 400;  ///< gains evaluations over the active set
  double penalty = 1e3;
  std::uint64_t seed = 1;
  /// Phase 1 target and phase 2 feasibility guard: max(Jc2..5) <= 1 - margin.
  double margin = 0.02;
  int max_rounds = 4;
  double initial_step = 0.5;  ///< log-gain step
  double min_step = 2e-3;
  int workers = 1;
  IndexOptions final_indices;
};

nlohmann::json to_json(const TuneOptions& o);
TuneOptions tune_options_from_json(const nlohmann::json& j);

struct TracePoint {
  int round = 0;
  int evaluations = 0;
  double objective = 0.0;  ///< best penalized objective so far in the round
};

struct SynthesisResult {
  ControllerGains gains;
  ControlIndices indices;
  std::vector<TracePoint> trace;
  std::vector<std::size_t> active_set;
  int evaluations = 0;
  int rounds = 0;
  bool feasible = false;
  double wall_seconds = 0.0;
};

nlohmann::json to_json(const SynthesisResult& r, const LoopFamily& family);

/// Jc1 + penalty * sum_j max(0, Jc_j - 1)^2 over j = 2..5.
double penalized_objective(const IndexValues& v, double penalty);

/// Multi-model structured tuning: feasibility by pattern search on log-gains
/// with multi-start, then penalized H2 minimization; the model set is grown
/// from the worst models of full sweeps.
SynthesisResult tune(const LoopFamily& family, const ControllerGains& init, const TuneOptions& opt = {});

}  // namespace flexsc
