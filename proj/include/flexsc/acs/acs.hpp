#pragma once

#include <vector>

#include "json.hpp"
#include "flexsc/bench/envision.hpp"
#include "flexsc/lti/state_space.hpp"

namespace flexsc {

/// Pointing, command and margin requirements (per axis x, y, z).
struct Requirements {
  Vector3d ape{0.08e-3, 0.2e-3, 0.08e-3};  ///< rad
  Vector3d rpe{0.5e-3, 0.5e-3, 0.5e-3};    ///< rad
  double dt_rpe = 15.0;                     ///< s
  Vector3d t_ext{1.9e-3, 1.9e-3, 1.9e-3};   ///< N m
  Vector3d u_max{0.215, 0.215, 0.215};      ///< N m
  double gamma = 1.5;
  Vector3d psd_sst = Vector3d::Constant(3.5e-5 * 3.5e-5);    ///< rad^2 s
  Vector3d psd_gyro = Vector3d::Constant(1.4e-6 * 1.4e-6);   ///< rad^2 / s
};

void validate(const Requirements& r);
nlohmann::json to_json(const Requirements& r);
Requirements requirements_from_json(const nlohmann::json& j);

/// Margins guaranteed by ||S_i||_inf <= gamma.
struct Margins {
  double disk = 0.0;
  double gain = 0.0;
  double gain_db = 0.0;
  double phase_deg = 0.0;
};

Margins margins_from_gamma(double gamma);

struct ControllerGains {
  Vector3d kp = Vector3d::Ones();  ///< N m / rad
  Vector3d kv = Vector3d::Ones();  ///< N m s / rad

  /// (Kp_x, Kv_x, Kp_y, Kv_y, Kp_z, Kv_z)
  std::vector<double> to_vector() const;
  static ControllerGains from_vector(const std::vector<double>& v);
  bool operator==(const ControllerGains&) const = default;
};

void validate(const ControllerGains& g);
nlohmann::json to_json(const ControllerGains& g);
ControllerGains gains_from_json(const nlohmann::json& j);

/// How the printed observer columns are bound to the measurements.
enum class ObserverPortOrder {
  /// input [omega_m; Theta_m], output [omega_hat; Theta_hat] as typeset
  as_printed,
  /// input [Theta_m; omega_m], output [Theta_hat; omega_hat]; complementary filter
  complementary,
};

/// Three-axis avionics blocks, each with ports "in" / "out" of width 3 except
/// the observer: inputs "theta_m", "omega_m"; outputs "theta_hat", "omega_hat".
struct Avionics {
  StateSpace rw, gyro, sst, delay, observer;
};

inline constexpr double kLoopDelay = 0.0625;

StateSpace observer(ObserverPortOrder order);
Avionics avionics(ObserverPortOrder order = ObserverPortOrder::complementary, double delay = kLoopDelay);

/// Weighting filters, inputs "in" / outputs "out", width 3.
struct Weights {
  StateSpace w_ext, wn_sst, wn_gyro, w_ape, w_rpe, w_s;
  StateSpace w_u;  ///< diag(u_max)^-1
};

Weights weights(const Requirements& r);

/// Static map u = -(Kp theta_hat + Kv omega_hat); inputs "theta_hat",
/// "omega_hat"; output "u".
StateSpace controller(const ControllerGains& g);
/// 3 x 6 gain acting on [theta_hat; omega_hat].
MatrixXd controller_matrix(const ControllerGains& g);

/// Rigid decoupled tuning Kp = J w^2, Kv = 2 xi J w. With enforce_ape_bound
/// the bandwidth is raised to the static APE bound when that is larger.
ControllerGains initial_gains(const Matrix3d& j_b, const Requirements& r, double xi = 0.7, double omega = 0.06,
                              bool enforce_ape_bound = false);

/// max_i T_ext(i) / (Kp_i APE(i)): steady pointing error index of a rigid plant.
double static_ape_index(const ControllerGains& g, const Requirements& r);

/// Open generalized plant. Inputs "T_ext_n", "n_sst", "n_gyro", "d_T" (unit
/// disturbance at the plant torque input), "u"; outputs "ape", "rpe", "u_n",
/// "T_n", "y" = [theta_hat; omega_hat].
struct GeneralizedPlant {
  StateSpace system;
};

GeneralizedPlant generalized_plant(const Plant& plant, const Avionics& av, const Weights& w);

struct ClosedLoop {
  StateSpace system;  ///< inputs "T_ext_n", "n_sst", "n_gyro", "d_T"; outputs "ape", "rpe", "u_n", "T_n"
  bool stable = false;
};

ClosedLoop close_loop(const GeneralizedPlant& gp, const ControllerGains& g);

}  // namespace flexsc
