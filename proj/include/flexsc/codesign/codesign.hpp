#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "flexsc/synthesis/synthesis.hpp"

namespace flexsc {

// ---------------------------------------------------------------- PSO

struct PsoOptions {
  int iterations = 20;  ///< N_i, including the initial swarm
  int swarm = 20;       ///< N_s
  std::uint64_t seed = 1;
  double inertia = 0.729;
  double cognitive = 1.49445;
  double social = 1.49445;
  double velocity_clamp = 0.2;  ///< fraction of the range per dimension
  int workers = 1;
};

void validate(const PsoOptions& o);
nlohmann::json to_json(const PsoOptions& o);
PsoOptions pso_options_from_json(const nlohmann::json& j);

struct PsoEvaluation {
  int iteration = 0;
  int particle = 0;
  std::vector<double> x;
  double value = 0.0;
};

struct PsoResult {
  std::vector<double> x;
  double value = 0.0;
  std::vector<double> best_per_iteration;
  std::vector<PsoEvaluation> history;
};

/// Global-best PSO. Particles of one iteration are evaluated concurrently;
/// ties go to the lowest particle index.
PsoResult pso_minimize(const std::function<double(const std::vector<double>&)>& f, const std::vector<double>& lo,
                       const std::vector<double>& hi, const PsoOptions& opt);
/// `f(x, iteration, particle)`; iterations count from 0.
PsoResult pso_minimize(const std::function<double(const std::vector<double>&, int, int)>& f,
                       const std::vector<double>& lo, const std::vector<double>& hi, const PsoOptions& opt);

// ---------------------------------------------------------------- surrogate

/// Design variables optimized by default.
const std::vector<std::string>& default_design_subset();

/// Polynomial models of the appendage modal data (M_rr, L_P, omega_k and the
/// port shapes) over a box of design variables.
struct AppendageSurrogate {
  std::vector<std::string> subset;
  DesignVector base;
  AppendageSet reference;  ///< data at `base`; names, damping and port geometry
  std::map<std::string, Surrogate> parts;  ///< "yoke", "panel", "srs", "sar"

  double holdout_max_rel_error() const;
  double in_sample_max_rel_error() const;
};

struct SurrogateFitOptions {
  int samples = 100;  ///< random designs, box vertices added on top; every fifth is held out
  int degree = 3;
  std::uint64_t seed = 11;
};

AppendageSurrogate fit_appendage_surrogate(const BenchConfig& cfg, const DesignVector& base,
                                           const std::vector<std::string>& subset,
                                           const SurrogateFitOptions& opt = {});
/// Fit over an explicit box of design variables.
AppendageSurrogate fit_appendage_surrogate(const BenchConfig& cfg, const DesignVector& base,
                                           const std::vector<ParameterSpec>& box,
                                           const SurrogateFitOptions& opt = {});

/// Appendage data at the subset values `a` (other variables at `base`).
/// Throws ValidationError outside the box. Mode crossings are sorted and
/// reported through `crossing`.
AppendageSet eval_appendage_surrogate(const AppendageSurrogate& s, const Assignment& a, bool* crossing = nullptr);

nlohmann::json to_json(const AppendageSurrogate& s);
AppendageSurrogate appendage_surrogate_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------- co-design

inline constexpr double kLaunchFailureObjective = 10.0;

struct CodesignOptions {
  std::vector<std::string> design_subset = default_design_subset();
  DesignVector base;  ///< values of the variables outside the subset
  PsoOptions pso;
  TuneOptions tune;
  std::string model_scheme = "default";  ///< "default" or "nominal"
  int sigma_points = 5;                  ///< sigma4 points of the default scheme
  /// Monolithic driver: total evaluation budget, weights of mass and Jc1.
  int mono_budget = 1200;
  double w_m = 1.0;
  double w_c = 1.0;
  /// Narrower ranges for design variables of the subset and for the
  /// structural uncertainties of the tuning model set.
  Bounds design_bounds;
  Bounds uncertainty_bounds;
  int workers = 1;
};

nlohmann::json to_json(const CodesignOptions& o);
/// Search box: the subset specs narrowed by `design_bounds`.
std::vector<ParameterSpec> design_box(const CodesignOptions& o);
std::vector<ModelSpec> tuning_models(const CodesignOptions& o);
CodesignOptions codesign_options_from_json(const nlohmann::json& j);

struct ParticleRecord {
  int iteration = 0;
  int particle = 0;
  Assignment design;  ///< subset values
  double omega_sto = 0.0;
  bool launch_ok = false;
  double mass = 0.0;
  ControlIndices indices;
  ControllerGains gains;
  double objective = 0.0;  ///< J^s
  bool feasible = false;   ///< launch passed and all Jc2..5 <= 1
};

/// One evaluation of the monolithic search.
struct MonoTracePoint {
  int round = 0;
  int evaluations = 0;
  double objective = 0.0;
  double mass = 0.0;
  double max_constraint = 0.0;
};

struct CodesignResult {
  std::string method;  ///< "distributed" or "monolithic"
  bool feasible = false;
  DesignVector design;
  ControllerGains gains;
  double objective = 0.0;
  double mass = 0.0;
  double mass_ref = 0.0;  ///< m-bar, mass at the all-max design
  double initial_mass = 0.0;
  double omega_sto = 0.0;
  bool launch_ok = false;
  ControlIndices indices;
  std::vector<double> best_per_iteration;  ///< NaN before the first feasible particle
  std::vector<ParticleRecord> particles;
  std::vector<MonoTracePoint> mono_trace;
  int evaluations = 0;
  double wall_seconds = 0.0;
  std::vector<std::string> warnings;
};

nlohmann::json to_json(const CodesignResult& r, bool include_timing = true);
/// mass_kg, Jc_max, iteration, particle for every launch-passing particle.
std::string pareto_csv(const CodesignResult& r);

/// m-bar: total mass of the nominal model at design_max().
double reference_mass(const BenchConfig& cfg);

/// J^s = m / m_bar + sum_j Jc_j, or the launch failure value.
double system_objective(double mass, double mass_ref, const IndexValues& jc);

/// Nested evaluation of one design: launch check, plant family, tune.
ParticleRecord evaluate_design(const BenchConfig& cfg, const Requirements& req, const DesignVector& x,
                               const std::vector<ModelSpec>& models, const TuneOptions& tune_opt, double mass_ref);

CodesignResult distributed_codesign(const BenchConfig& cfg, const Requirements& req, const CodesignOptions& opt);

/// Joint search on log-gains and normalized design variables with the
/// surrogate-built plants; launch checked afterwards. An empty subset runs
/// `tune` at the base design.
CodesignResult monolithic_codesign(const BenchConfig& cfg, const Requirements& req, const AppendageSurrogate& surrogate,
                                   const CodesignOptions& opt);

}  // namespace flexsc
