#include "flexsc/titop/titop.hpp"

namespace flexsc {

TitopModel titop_from_modal(const ModalAppendageData& data) {
  validate(data);
  const Index n = data.n_modes();
  const Index np = static_cast<Index>(data.ports.size());
  const Index nin = 6 * np + 6;

  const VectorXd k = data.freq.array().square();
  const VectorXd c = 2.0 * data.damping.array() * data.freq.array();

  MatrixXd a = MatrixXd::Zero(2 * n, 2 * n);
  a.topRightCorner(n, n).setIdentity();
  a.bottomLeftCorner(n, n) = -k.asDiagonal().toDenseMatrix();
  a.bottomRightCorner(n, n) = -c.asDiagonal().toDenseMatrix();

  MatrixXd b = MatrixXd::Zero(2 * n, nin);
  MatrixXd cm = MatrixXd::Zero(nin, 2 * n);
  MatrixXd d = MatrixXd::Zero(nin, nin);
  std::vector<PortGroup> inputs, outputs;

  for (Index i = 0; i < np; ++i) {
    const auto& port = data.ports[static_cast<std::size_t>(i)];
    const MatrixXd& phi = port.phi_c;
    b.block(n, 6 * i, n, 6) = phi.transpose();
    cm.block(6 * i, 0, 6, n) = -phi * k.asDiagonal();
    cm.block(6 * i, n, 6, n) = -phi * c.asDiagonal();
    for (Index j = 0; j < np; ++j)
      d.block(6 * i, 6 * j, 6, 6) = phi * data.ports[static_cast<std::size_t>(j)].phi_c.transpose();
    const Matrix6d coupling = twist_transport(port.cp) - phi * data.lp;
    d.block(6 * i, 6 * np, 6, 6) = coupling;
    d.block(6 * np, 6 * i, 6, 6) = coupling.transpose();
    inputs.push_back({"W_" + port.name, 6});
    outputs.push_back({"acc_" + port.name, 6});
  }
  b.block(n, 6 * np, n, 6) = -data.lp;
  cm.block(6 * np, 0, 6, n) = data.lp.transpose() * k.asDiagonal();
  cm.block(6 * np, n, 6, n) = data.lp.transpose() * c.asDiagonal();
  d.block(6 * np, 6 * np, 6, 6) = -data.residual_mass();
  inputs.push_back({"acc_P", 6});
  outputs.push_back({"W_P", 6});

  // exact symmetry of the feedthrough
  d = 0.5 * (d + d.transpose()).eval();

  std::vector<PortGroup> states;
  if (n > 0) states = {{"eta", n}, {"eta_dot", n}};
  TitopModel model;
  model.name = data.name;
  model.system = StateSpace(a, b, cm, d, inputs, outputs, states);
  return model;
}

}  // namespace flexsc
