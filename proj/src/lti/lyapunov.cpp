#include "flexsc/lti/lyapunov.hpp"

#include <Eigen/Eigenvalues>

#include "flexsc/common/error.hpp"

namespace flexsc {

MatrixXd lyapunov(const MatrixXd& a, const MatrixXd& q) {
  const Index n = a.rows();
  if (a.cols() != n || q.rows() != n || q.cols() != n) throw ValidationError("lyapunov: dimension mismatch");
  if (n == 0) return MatrixXd(0, 0);
  Eigen::ComplexSchur<MatrixXd> schur(a);
  if (schur.info() != Eigen::Success) throw NumericalError("lyapunov: Schur decomposition failed");
  const MatrixXcd& t = schur.matrixT();
  const MatrixXcd& u = schur.matrixU();
  const MatrixXcd qt = u.adjoint() * q.cast<std::complex<double>>() * u;
  MatrixXcd y = MatrixXcd::Zero(n, n);
  // T Y + Y T^H = -Qt, columns right to left, rows bottom to top.
  for (Index j = n - 1; j >= 0; --j) {
    for (Index i = n - 1; i >= 0; --i) {
      std::complex<double> rhs = -qt(i, j);
      for (Index k = i + 1; k < n; ++k) rhs -= t(i, k) * y(k, j);
      for (Index k = j + 1; k < n; ++k) rhs -= y(i, k) * std::conj(t(j, k));
      const std::complex<double> den = t(i, i) + std::conj(t(j, j));
      if (std::abs(den) < 1e-300) throw NumericalError("lyapunov: singular Sylvester operator");
      y(i, j) = rhs / den;
    }
  }
  MatrixXd x = (u * y * u.adjoint()).real();
  return 0.5 * (x + x.transpose());
}

MatrixXd controllability_gramian(const StateSpace& g) {
  return lyapunov(g.a(), g.b() * g.b().transpose());
}

MatrixXd observability_gramian(const StateSpace& g) {
  return lyapunov(g.a().transpose(), g.c().transpose() * g.c());
}

}  // namespace flexsc
