#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "flexsc/lti/state_space.hpp"
#include "flexsc/param/paramspace.hpp"
#include "flexsc/titop/rigid_body.hpp"

namespace flexsc {

/// Structural design variables of the benchmark.
struct DesignVector {
  double E_Y = 1.165e11;   ///< yoke Young modulus, Pa
  double rho_Y = 3340.0;   ///< yoke density, kg/m^3
  double B_Y = 3.25e-2;    ///< yoke section width, m
  double D_Y = 3.25e-2;    ///< yoke section height, m
  double t_Y = 1.5e-3;     ///< yoke wall thickness, m
  double t_sP = 3.0e-4;    ///< panel skin thickness, m
  double t_cP = 2.25e-2;   ///< panel core thickness, m
  double LR_Y = 0.71;      ///< yoke length ratio
  double AR_P = 25.0 / 24.0;
  double R_SRS = 1.625e-2;  ///< SRS tube outer radius, m
  double t_SRS = 4.9e-4;    ///< SRS tube wall, m
  double t_cV = 1.0e-3;     ///< SAR core thickness, m

  static const std::vector<std::string>& names();
  double get(const std::string& name) const;
  void set(const std::string& name, double value);
  Assignment to_assignment() const;
  /// `base` with the entries present in `a` overwritten.
  static DesignVector from_assignment(const Assignment& a, const DesignVector& base);
  static DesignVector from_assignment(const Assignment& a);
  bool operator==(const DesignVector&) const = default;
};

/// Table bounds; nominal is the mid-range value.
std::vector<ParameterSpec> design_specs();
/// Specs restricted to `subset`, in the order given.
std::vector<ParameterSpec> design_specs(const std::vector<std::string>& subset);
void validate(const DesignVector& x);
DesignVector design_min();
DesignVector design_max();

/// Hub mass/inertia (+-15%), first two array and SAR modes (+-25%), sigma4.
std::vector<ParameterSpec> uncertainty_specs();
/// The above without sigma4.
std::vector<ParameterSpec> structural_uncertainty_specs();

struct PanelConstants {
  double e = 7.0e10;          ///< skin Young modulus, Pa
  double nu = 0.3;
  double rho_skin = 1600.0;   ///< kg/m^3
  double rho_core = 32.0;     ///< kg/m^3
  double area = 7.5;          ///< l_P w_P per panel, m^2
  double nonstructural = 2.5; ///< cells and harness, kg/m^2
};

struct TubeConstants {
  double e = 1.2e11;
  double rho = 1600.0;
  double length = 10.0;
  double nonstructural = 0.1;  ///< kg/m
};

struct YokeConstants {
  double base_length = 1.2;  ///< length at LR_Y = 1, m
};

struct SarConstants {
  double length = 3.0;
  double width = 1.0;
  double backing_ei = 1500.0;   ///< N m^2 out of plane
  double skin_e = 7.0e10;
  double skin_t = 2.5e-4;
  double skin_rho = 1600.0;
  double core_rho = 1500.0;
  double nonstructural = 20.0;  ///< kg/m^2
};

/// lambda(AR_P), piecewise linear.
struct LambdaTable {
  std::vector<double> aspect_ratio;
  std::vector<double> lambda;
  double operator()(double ar) const;
  void validate() const;
};

struct Mount {
  std::string name;
  Vector3d position = Vector3d::Zero();
  Matrix3d dcm = Matrix3d::Identity();  ///< appendage frame to hub frame at theta = 0
};

struct ModeCounts {
  int yoke = 4;
  int panel = 4;
  int srs = 4;
  int sar = 4;
};

struct BenchConfig {
  RigidBodySpec hub;
  Mount sa1, sa2, srs1, srs2, sar;
  YokeConstants yoke;
  PanelConstants panel;
  TubeConstants srs;
  SarConstants sar_panel;
  LambdaTable lambda;
  double theta_sa = 0.0;
  double damping = 0.005;
  ModeCounts modes;
  /// Static-shape enrichment of the yoke, which carries the panel.
  bool yoke_residual_flexibility = true;
  /// Replaces the analytic generator for "yoke", "panel", "srs" or "sar".
  std::map<std::string, ModalAppendageData> overrides;
};

/// Whole-spacecraft inertia at B for the nominal design, kg m^2.
inline const Vector3d kNominalInertia{2415.33, 1695.25, 2929.28};

BenchConfig default_bench_config();
void validate(const BenchConfig& cfg);
nlohmann::json to_json(const BenchConfig& cfg);
/// Unknown keys are rejected; absent keys keep the defaults. Relative
/// override paths resolve against `base_dir`.
BenchConfig bench_config_from_json(const nlohmann::json& j, const std::string& base_dir = ".");

/// Modal data of the four appendage types for one design.
struct AppendageSet {
  ModalAppendageData yoke, panel, srs, sar;
};

AppendageSet generate_appendages(const BenchConfig& cfg, const DesignVector& x);

struct Plant {
  /// Inputs "T_ext", "u" (torques at B); outputs "theta", "omega", "acc_B".
  StateSpace system;
  /// Inputs "W_ext" at B; outputs "acc_B".
  StateSpace dynamics;
  Assignment assignment;
  double theta_sa = 0.0;
  double bookkept_mass = 0.0;  ///< hub plus appendage masses
  Vector3d b = Vector3d::Zero();  ///< point B in the hub frame
};

/// Adds the attitude integrators to a W_ext -> acc_B model.
Plant plant_from_dynamics(const StateSpace& dynamics);

Plant assemble_plant(const BenchConfig& cfg, const AppendageSet& apps, double theta_sa, const Assignment& delta);
/// delta must not contain sigma4.
Plant build_plant(const BenchConfig& cfg, const DesignVector& x, double theta_sa, const Assignment& delta);
/// theta from delta's sigma4 when present, else cfg.theta_sa.
Plant build_plant(const BenchConfig& cfg, const DesignVector& x, const Assignment& delta);
double theta_for(const BenchConfig& cfg, const Assignment& delta);

inline constexpr double kMassOmega = 1e-4;
double total_mass(const Plant& plant);
Matrix3d rigid_inertia(const Plant& plant);

inline constexpr double kLaunchOmega = 76.0 * M_PI;
double launch_frequency(const DesignVector& x, const PanelConstants& panel, const LambdaTable& table);
bool launch_passes(double omega_sto);

/// Shape scaled so the nominal design sits at 1.2 omega_L.
LambdaTable calibrated_lambda_table(const PanelConstants& panel);

}  // namespace flexsc
