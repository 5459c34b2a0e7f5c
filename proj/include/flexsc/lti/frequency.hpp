#pragma once

#include <complex>
#include <iosfwd>
#include <optional>
#include <vector>

#include "flexsc/lti/state_space.hpp"

namespace flexsc {

using cdouble = std::complex<double>;

/// Largest singular value of a complex matrix.
double max_singular_value(const MatrixXcd& g);

/// Diagonal similarity (powers of two) balancing A; returns the scaled system.
StateSpace balanced_realization(const StateSpace& g);

/// G(s) evaluation through a Hessenberg reduction of A, O(n^2 m) per point.
class HessenbergEvaluator {
 public:
  explicit HessenbergEvaluator(const StateSpace& g);
  MatrixXcd at(cdouble s) const;
  double sigma_max(double omega) const { return max_singular_value(at({0.0, omega})); }

 private:
  MatrixXd h_, bt_, ct_, d_;
};

/// Eigendecomposition of A shared by several channels (B, C, D) of one loop.
class ModalBasis {
 public:
  explicit ModalBasis(const MatrixXd& a);

  Index order() const { return lambda_.size(); }
  const Eigen::VectorXcd& eigenvalues() const { return lambda_; }
  const MatrixXcd& vectors() const { return v_; }
  /// Eigenvector matrix conditioning good enough for modal evaluation.
  bool reliable() const { return reliable_; }
  bool stable() const;
  /// V^{-1} X
  MatrixXcd solve(const MatrixXd& x) const;

 private:
  Eigen::VectorXcd lambda_;
  MatrixXcd v_;
  Eigen::PartialPivLU<MatrixXcd> lu_;
  bool reliable_ = false;
};

/// Channel G(s) = C (sI - A)^{-1} B + D in modal coordinates.
class ModalChannel {
 public:
  ModalChannel(const ModalBasis& basis, const MatrixXd& b, const MatrixXd& c, const MatrixXd& d);
  MatrixXcd at(cdouble s) const;
  double sigma_max(double omega) const { return max_singular_value(at({0.0, omega})); }
  /// sqrt(trace(C Wc C^T)) from the modal Gramian; requires D = 0 and stable A.
  double h2() const;
  const MatrixXd& d() const { return d_; }

 private:
  const ModalBasis* basis_;
  MatrixXcd bt_, ct_;
  MatrixXd d_;
};

struct FrequencyResponse {
  std::vector<double> omega;
  std::vector<MatrixXcd> response;
  std::vector<double> sigma_max;
};

FrequencyResponse frequency_response(const StateSpace& g, const std::vector<double>& omega_grid);

/// Columns: omega, sigma_max, then |G_ij| and phase_deg_ij for every (i, j), row-major.
void write_frequency_csv(std::ostream& os, const FrequencyResponse& fr);

std::vector<double> logspace(double lo_exp, double hi_exp, std::size_t n);

/// -C A^{-1} B + D, or |G(j omega0)| elementwise when omega0 is given.
MatrixXd dc_gain(const StateSpace& g, std::optional<double> omega0 = std::nullopt);

}  // namespace flexsc
