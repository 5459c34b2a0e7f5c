#include "flexsc/titop/rigid_body.hpp"

#include <Eigen/Eigenvalues>
#include <set>

#include "flexsc/common/error.hpp"

namespace flexsc {

Matrix6d rigid_mass_at(const RigidBodySpec& spec, const Vector3d& at) {
  return rigid_mass_matrix(spec.mass, spec.com - at, spec.inertia);
}

StateSpace rigid_multiport(const RigidBodySpec& spec, const Vector3d& b) {
  const std::string who = "rigid body '" + spec.name + "': ";
  if (!(spec.mass > 0.0)) throw ValidationError(who + "mass must be positive");
  if ((spec.inertia - spec.inertia.transpose()).cwiseAbs().maxCoeff() > 1e-9 * spec.inertia.cwiseAbs().maxCoeff())
    throw ValidationError(who + "inertia is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix3d> es(spec.inertia);
  if (!(es.eigenvalues().minCoeff() > 0.0)) throw ValidationError(who + "inertia is not positive definite");
  std::set<std::string> names;
  for (std::size_t i = 0; i < spec.points.size(); ++i) {
    if (!names.insert(spec.points[i].name).second)
      throw ValidationError(who + "duplicate connection point '" + spec.points[i].name + "'");
    if (spec.points[i].name == "B" || spec.points[i].name == "ext")
      throw ValidationError(who + "connection point name '" + spec.points[i].name + "' is reserved");
    for (std::size_t j = 0; j < i; ++j)
      if ((spec.points[i].position - spec.points[j].position).norm() < 1e-12)
        throw ValidationError(who + "connection points '" + spec.points[j].name + "' and '" + spec.points[i].name +
                              "' coincide");
  }

  const Index np = static_cast<Index>(spec.points.size());
  const Matrix6d minv = rigid_mass_at(spec, b).inverse();
  // rows: acc at each point then B; cols: wrench at each point then at B
  std::vector<Matrix6d> tau;
  for (const auto& p : spec.points) tau.push_back(twist_transport(b - p.position));
  tau.push_back(Matrix6d::Identity());
  MatrixXd d(6 * (np + 1), 6 * (np + 1));
  for (Index i = 0; i <= np; ++i)
    for (Index j = 0; j <= np; ++j)
      d.block(6 * i, 6 * j, 6, 6) =
          tau[static_cast<std::size_t>(i)] * minv * tau[static_cast<std::size_t>(j)].transpose();
  std::vector<PortGroup> in, out;
  for (const auto& p : spec.points) {
    in.push_back({"W_" + p.name, 6});
    out.push_back({"acc_" + p.name, 6});
  }
  in.push_back({"W_ext", 6});
  out.push_back({"acc_B", 6});
  return StateSpace::gain(d, in, out);
}

}  // namespace flexsc
