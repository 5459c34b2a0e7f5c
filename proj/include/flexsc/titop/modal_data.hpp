#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "json.hpp"
#include "flexsc/lti/state_space.hpp"

namespace flexsc {

using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Eigen::Matrix3d;
using Eigen::Vector3d;

/// Free (child) port of a flexible appendage.
struct ModalPort {
  std::string name;
  MatrixXd phi_c;  ///< 6 x n_modes, mode shapes at the port
  Vector3d cp;     ///< vector from the port C to the clamped point P
};

/// Clamped-interface modal data of one appendage, expressed at its root P.
struct ModalAppendageData {
  std::string name;
  VectorXd freq;     ///< rad/s
  VectorXd damping;  ///< per mode
  MatrixXd lp;       ///< n_modes x 6 participation factors
  std::vector<ModalPort> ports;
  Matrix6d mr = Matrix6d::Zero();  ///< rigid mass at P

  Index n_modes() const { return freq.size(); }
  Matrix6d residual_mass() const;  ///< M_r - L_P^T L_P
  double mass() const { return mr(0, 0); }
  /// Center of mass relative to P, read from the rigid mass coupling block.
  Vector3d center_of_mass() const;
};

Matrix3d skew(const Vector3d& v);

/// [[I, skew(r)], [0, I]]; maps the acceleration twist at P to the twist at C
/// when r = P - C.
Matrix6d twist_transport(const Vector3d& r);

/// Rigid mass matrix at a point, for a body of mass m with center of mass at
/// offset r from that point and inertia j_g about its center of mass.
Matrix6d rigid_mass_matrix(double m, const Vector3d& r, const Matrix3d& j_g);

/// Checks frequencies, damping, shapes and mass properties; throws ValidationError.
void validate(const ModalAppendageData& d);

/// omega_k (1 + delta_k); L_P and Phi_C unchanged.
ModalAppendageData scale_frequencies(const ModalAppendageData& d, const VectorXd& delta);

nlohmann::json to_json(const ModalAppendageData& d);
ModalAppendageData modal_data_from_json(const nlohmann::json& j);

}  // namespace flexsc
