#pragma once

#include <string>
#include <vector>

#include "flexsc/titop/modal_data.hpp"

namespace flexsc {

struct ConnectionPoint {
  std::string name;
  Vector3d position = Vector3d::Zero();
};

struct RigidBodySpec {
  std::string name = "hub";
  double mass = 1.0;
  Vector3d com = Vector3d::Zero();
  Matrix3d inertia = Matrix3d::Identity();  ///< about the center of mass
  std::vector<ConnectionPoint> points;
};

/// Rigid mass matrix of the body expressed at point `at`.
Matrix6d rigid_mass_at(const RigidBodySpec& spec, const Vector3d& at);

/// Static multi-port model. Inputs: "W_<pt>" per point then "W_ext" at B;
/// outputs: "acc_<pt>" per point then "acc_B".
StateSpace rigid_multiport(const RigidBodySpec& spec, const Vector3d& b);

}  // namespace flexsc
