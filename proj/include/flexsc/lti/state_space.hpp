#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace flexsc {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Named contiguous group of channels (inputs, outputs or states).
struct PortGroup {
  std::string name;
  Index width = 0;
  bool operator==(const PortGroup&) const = default;
};

struct PortRange {
  Index offset = 0;
  Index width = 0;
};

/// Continuous-time LTI system dx = Ax + Bu, y = Cx + Du with named ports.
/// Immutable after construction.
class StateSpace {
 public:
  StateSpace() = default;
  StateSpace(MatrixXd a, MatrixXd b, MatrixXd c, MatrixXd d, std::vector<PortGroup> inputs,
             std::vector<PortGroup> outputs, std::vector<PortGroup> states = {});

  /// State-free system y = D u.
  static StateSpace gain(MatrixXd d, std::vector<PortGroup> inputs, std::vector<PortGroup> outputs);

  const MatrixXd& a() const { return a_; }
  const MatrixXd& b() const { return b_; }
  const MatrixXd& c() const { return c_; }
  const MatrixXd& d() const { return d_; }

  Index order() const { return a_.rows(); }
  Index n_inputs() const { return d_.cols(); }
  Index n_outputs() const { return d_.rows(); }

  const std::vector<PortGroup>& inputs() const { return inputs_; }
  const std::vector<PortGroup>& outputs() const { return outputs_; }
  const std::vector<PortGroup>& states() const { return states_; }

  bool has_input(const std::string& name) const;
  bool has_output(const std::string& name) const;
  PortRange input(const std::string& name) const;
  PortRange output(const std::string& name) const;
  PortRange state_group(const std::string& name) const;

  /// Subsystem keeping the listed ports, in the listed order.
  StateSpace select(const std::vector<std::string>& inputs, const std::vector<std::string>& outputs) const;

  /// Same dynamics with every port (and state group) name prefixed.
  StateSpace prefixed(const std::string& prefix) const;

  /// Renames a single input or output port.
  StateSpace renamed_input(const std::string& from, const std::string& to) const;
  StateSpace renamed_output(const std::string& from, const std::string& to) const;

  /// alpha * G (output scaling).
  StateSpace scaled(double alpha) const;

 private:
  MatrixXd a_, b_, c_, d_;
  std::vector<PortGroup> inputs_, outputs_, states_;
};

/// Total width of a port list.
Index total_width(const std::vector<PortGroup>& ports);

/// Series connection: all outputs of `first` feed all inputs of `second`.
/// The result inherits the inputs of `first` and the outputs of `second`.
StateSpace series(const StateSpace& first, const StateSpace& second);

/// Block-diagonal stacking of independent systems; port names must not collide.
StateSpace append(const std::vector<StateSpace>& systems);

/// Copies a system `copies` times on the diagonal. Every port of width w becomes
/// a port of width w*copies, ordered copy-major inside the port.
StateSpace replicate_diagonal(const StateSpace& g, int copies);

bool stable(const StateSpace& g);

}  // namespace flexsc
