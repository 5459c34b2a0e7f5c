#pragma once

#include <functional>

#include "flexsc/lti/frequency.hpp"
#include "flexsc/lti/state_space.hpp"

namespace flexsc {

struct PeakGain {
  double value = 0.0;
  double omega = 0.0;  ///< +inf when the peak is the feedthrough
};

/// Lower bound of the peak gain from DC, infinity, a logarithmic grid and the
/// pole frequencies, with golden-section refinement of the largest local maxima.
/// `sigma` evaluates sigma_max at omega; `poles` are the eigenvalues of A.
PeakGain peak_gain_search(const std::function<double(double)>& sigma, const Eigen::VectorXcd& poles,
                          double sigma_infinity);

/// Fast estimate on one channel of a shared modal basis (lower bound).
PeakGain peak_gain_estimate(const ModalBasis& basis, const ModalChannel& channel);

/// Fast estimate (lower bound) for a stable system.
PeakGain peak_gain_estimate(const StateSpace& g);

/// H-infinity norm certified with the Hamiltonian imaginary-axis test.
/// Throws UnstableSystemError for non-Hurwitz A, ValidationError for rel_tol <= 0.
double hinf_norm(const StateSpace& g, double rel_tol = 1e-6);

/// Certifies a known lower bound (value attained at lb.omega) to rel_tol.
double hinf_certify(const StateSpace& g, PeakGain lb, double rel_tol = 1e-6);

/// sqrt(trace(C Wc C^T)); requires D = 0 and a Hurwitz A.
double h2_norm(const StateSpace& g);

/// sqrt(trace(B^T Wo B)); same preconditions as h2_norm.
double h2_norm_observability(const StateSpace& g);

}  // namespace flexsc
