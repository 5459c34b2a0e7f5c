#pragma once

#include "flexsc/lti/state_space.hpp"

namespace flexsc {

/// Solves A X + X A^T + Q = 0 by complex Schur reduction and triangular
/// back-substitution. A must have no pair of eigenvalues with
/// lambda_i + conj(lambda_j) = 0.
MatrixXd lyapunov(const MatrixXd& a, const MatrixXd& q);

/// Controllability Gramian, A Wc + Wc A^T + B B^T = 0.
MatrixXd controllability_gramian(const StateSpace& g);
/// Observability Gramian, A^T Wo + Wo A + C^T C = 0.
MatrixXd observability_gramian(const StateSpace& g);

}  // namespace flexsc
