#pragma once

#include <string>
#include <vector>

#include "flexsc/lti/state_space.hpp"

namespace flexsc {

struct Block {
  std::string name;
  StateSpace system;
};

/// Signal path "block.port" -> "block.port". An empty gain means identity and
/// requires equal widths; otherwise gain is (sink width x source width).
/// Several links into the same sink are summed.
struct Link {
  std::string from;
  std::string to;
  MatrixXd gain = MatrixXd();
};

/// External input fanned out (identity) to one or more "block.port" sinks.
struct ExternalInput {
  std::string name;
  std::vector<std::string> sinks;
};

/// External output exposing a "block.port" source.
struct ExternalOutput {
  std::string name;
  std::string source;
};

struct InterconnectOptions {
  bool auto_reduce = true;
  Index auto_reduce_order = 200;
  double reduce_tol = 1e-8;
};

/// Closes all links with u = (I - L D)^{-1} (L C x + E w).
/// State ordering follows block order; state groups are prefixed "block.".
StateSpace interconnect(const std::vector<Block>& blocks, const std::vector<Link>& links,
                        const std::vector<ExternalInput>& ext_in, const std::vector<ExternalOutput>& ext_out,
                        const InterconnectOptions& options = {});

/// Static feedback u = K y around G (inputs "u", outputs "y" chosen by name).
/// Remaining ports are kept.
StateSpace close_static_feedback(const StateSpace& g, const std::string& u_port, const std::string& y_port,
                                 const MatrixXd& k);

}  // namespace flexsc
