#include "flexsc/lti/frequency.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <ostream>

#include "flexsc/common/error.hpp"

namespace flexsc {

double max_singular_value(const MatrixXcd& g) {
  if (g.size() == 0) return 0.0;
  if (g.size() == 1) return std::abs(g(0, 0));
  if (g.rows() == 1 || g.cols() == 1) return g.norm();
  Eigen::JacobiSVD<MatrixXcd> svd(g);
  return svd.singularValues()(0);
}


StateSpace balanced_realization(const StateSpace& g) {
  const Index n = g.order();
  if (n == 0) return g;
  MatrixXd a = g.a();
  VectorXd scale = VectorXd::Ones(n);
  bool converged = false;
  for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
    converged = true;
    for (Index i = 0; i < n; ++i) {
      double c = a.col(i).lpNorm<1>() - std::abs(a(i, i));
      double r = a.row(i).lpNorm<1>() - std::abs(a(i, i));
      if (c == 0.0 || r == 0.0) continue;
      const double s = c + r;
      double f = 1.0;
      while (c < r / 2.0) {
        c *= 2.0;
        r /= 2.0;
        f *= 2.0;
      }
      while (c >= r * 2.0) {
        c /= 2.0;
        r *= 2.0;
        f /= 2.0;
      }
      if (c + r < 0.95 * s) {
        converged = false;
        scale(i) *= f;
        a.col(i) *= f;
        a.row(i) /= f;
      }
    }
  }
  MatrixXd b = scale.cwiseInverse().asDiagonal() * g.b();
  MatrixXd c = g.c() * scale.asDiagonal();
  return StateSpace(a, b, c, g.d(), g.inputs(), g.outputs(), g.states());
}

HessenbergEvaluator::HessenbergEvaluator(const StateSpace& g) : d_(g.d()) {
  const Index n = g.order();
  if (n == 0) {
    h_ = MatrixXd(0, 0);
    bt_ = MatrixXd(0, g.n_inputs());
    ct_ = MatrixXd(g.n_outputs(), 0);
    return;
  }
  const StateSpace gb = balanced_realization(g);
  Eigen::HessenbergDecomposition<MatrixXd> hd(gb.a());
  h_ = hd.matrixH();
  const MatrixXd q = hd.matrixQ();
  bt_ = q.transpose() * gb.b();
  ct_ = gb.c() * q;
}

MatrixXcd HessenbergEvaluator::at(cdouble s) const {
  const Index n = h_.rows();
  MatrixXcd out = d_.cast<cdouble>();
  if (n == 0) return out;
  MatrixXcd m = -h_.cast<cdouble>();
  m.diagonal().array() += s;
  MatrixXcd x = bt_.cast<cdouble>();
  for (Index k = 0; k + 1 < n; ++k) {
    if (std::abs(m(k + 1, k)) > std::abs(m(k, k))) {
      m.row(k).tail(n - k).swap(m.row(k + 1).tail(n - k));
      x.row(k).swap(x.row(k + 1));
    }
    if (m(k + 1, k) == cdouble(0.0)) continue;
    const cdouble f = m(k + 1, k) / m(k, k);
    m.row(k + 1).tail(n - k) -= f * m.row(k).tail(n - k);
    x.row(k + 1) -= f * x.row(k);
  }
  for (Index k = n - 1; k >= 0; --k) {
    if (m(k, k) == cdouble(0.0)) throw NumericalError("frequency evaluation at a pole");
    if (k + 1 < n) x.row(k) -= m.row(k).tail(n - k - 1) * x.bottomRows(n - k - 1);
    x.row(k) /= m(k, k);
  }
  out += ct_.cast<cdouble>() * x;
  return out;
}

ModalBasis::ModalBasis(const MatrixXd& a) {
  const Index n = a.rows();
  if (n == 0) {
    reliable_ = true;
    return;
  }
  Eigen::EigenSolver<MatrixXd> es(a, true);
  if (es.info() != Eigen::Success) {
    reliable_ = false;
    lambda_ = Eigen::VectorXcd::Zero(n);
    return;
  }
  lambda_ = es.eigenvalues();
  v_ = es.eigenvectors();
  lu_.compute(v_);
  reliable_ = lu_.rcond() > 1e-11;
}

bool ModalBasis::stable() const {
  for (Index i = 0; i < lambda_.size(); ++i)
    if (!(lambda_(i).real() < -1e-12 * (1.0 + std::abs(lambda_(i))))) return false;
  return true;
}

MatrixXcd ModalBasis::solve(const MatrixXd& x) const { return lu_.solve(x.cast<cdouble>()); }

ModalChannel::ModalChannel(const ModalBasis& basis, const MatrixXd& b, const MatrixXd& c, const MatrixXd& d)
    : basis_(&basis), d_(d) {
  if (basis.order() > 0) {
    bt_ = basis.solve(b);
    ct_ = c.cast<cdouble>() * basis.vectors();
  } else {
    bt_ = MatrixXcd(0, b.cols());
    ct_ = MatrixXcd(c.rows(), 0);
  }
}

MatrixXcd ModalChannel::at(cdouble s) const {
  MatrixXcd out = d_.cast<cdouble>();
  const auto& lam = basis_->eigenvalues();
  const Index n = lam.size();
  if (n == 0) return out;
  Eigen::VectorXcd w(n);
  for (Index i = 0; i < n; ++i) w(i) = 1.0 / (s - lam(i));
  out.noalias() += ct_ * w.asDiagonal() * bt_;
  return out;
}

double ModalChannel::h2() const {
  const auto& lam = basis_->eigenvalues();
  const Index n = lam.size();
  if (n == 0) return 0.0;
  const MatrixXcd bb = bt_ * bt_.adjoint();
  const MatrixXcd cc = ct_.adjoint() * ct_;
  cdouble acc = 0.0;
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) acc += -bb(i, j) / (lam(i) + std::conj(lam(j))) * cc(j, i);
  return std::sqrt(std::max(0.0, acc.real()));
}

FrequencyResponse frequency_response(const StateSpace& g, const std::vector<double>& omega_grid) {
  for (std::size_t i = 0; i < omega_grid.size(); ++i) {
    if (!(omega_grid[i] > 0.0)) throw ValidationError("frequency grid must be strictly positive");
    if (i > 0 && !(omega_grid[i] > omega_grid[i - 1])) throw ValidationError("frequency grid must be sorted");
  }
  HessenbergEvaluator ev(g);
  FrequencyResponse fr;
  fr.omega = omega_grid;
  for (double w : omega_grid) {
    fr.response.push_back(ev.at({0.0, w}));
    fr.sigma_max.push_back(max_singular_value(fr.response.back()));
  }
  return fr;
}

void write_frequency_csv(std::ostream& os, const FrequencyResponse& fr) {
  os.precision(17);
  os << "omega,sigma_max";
  if (!fr.response.empty()) {
    const auto& g0 = fr.response.front();
    for (Index i = 0; i < g0.rows(); ++i)
      for (Index j = 0; j < g0.cols(); ++j) os << ",mag_" << i << "_" << j << ",phase_deg_" << i << "_" << j;
  }
  os << "\n";
  for (std::size_t k = 0; k < fr.omega.size(); ++k) {
    os << fr.omega[k] << "," << fr.sigma_max[k];
    const auto& g = fr.response[k];
    for (Index i = 0; i < g.rows(); ++i)
      for (Index j = 0; j < g.cols(); ++j) os << "," << std::abs(g(i, j)) << "," << std::arg(g(i, j)) * 180.0 / M_PI;
    os << "\n";
  }
}

std::vector<double> logspace(double lo_exp, double hi_exp, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    out[i] = std::pow(10.0, lo_exp + t * (hi_exp - lo_exp));
  }
  return out;
}

MatrixXd dc_gain(const StateSpace& g, std::optional<double> omega0) {
  if (omega0) {
    if (!(*omega0 > 0.0)) throw ValidationError("dc_gain: omega0 must be positive");
    HessenbergEvaluator ev(g);
    return ev.at({0.0, *omega0}).cwiseAbs();
  }
  if (g.order() == 0) return g.d();
  Eigen::FullPivLU<MatrixXd> lu(g.a());
  if (!lu.isInvertible() || lu.rcond() < 1e-13)
    throw ValidationError("dc_gain: A is singular (free-floating modes); evaluate at a small omega0 instead");
  return g.d() - g.c() * lu.solve(g.b());
}

}  // namespace flexsc
