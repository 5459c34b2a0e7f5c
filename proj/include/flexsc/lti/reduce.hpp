#pragma once

#include <string>

#include "flexsc/lti/state_space.hpp"

namespace flexsc {

struct Reduction {
  StateSpace system;
  bool passthrough = false;  ///< unstable input returned unchanged
  std::string warning;
  VectorXd hankel_singular_values;
};

/// Square-root balanced truncation dropping Hankel singular values <= tol.
Reduction reduce_minimal(const StateSpace& g, double tol = 1e-8);

/// Reachable and observable part by orthogonal Krylov staircases; valid for
/// unstable systems. `tol` is relative to the Krylov step norms.
StateSpace kalman_minimal(const StateSpace& g, double tol = 1e-9);

}  // namespace flexsc
