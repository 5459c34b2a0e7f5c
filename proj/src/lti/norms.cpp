#include "flexsc/lti/norms.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "flexsc/common/error.hpp"
#include "flexsc/lti/lyapunov.hpp"

namespace flexsc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double golden_max(const std::function<double(double)>& f, double lo, double hi, double& arg, int iters) {
  // maximize over log(omega) in [lo, hi]
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = std::log(lo), b = std::log(hi);
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = f(std::exp(x1)), f2 = f(std::exp(x2));
  for (int k = 0; k < iters && (b - a) > 1e-13 * (1.0 + std::abs(a)); ++k) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(std::exp(x1));
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(std::exp(x2));
    }
  }
  if (f1 >= f2) {
    arg = std::exp(x1);
    return f1;
  }
  arg = std::exp(x2);
  return f2;
}

void require_stable(const Eigen::VectorXcd& lam) {
  for (Index i = 0; i < lam.size(); ++i)
    if (!(lam(i).real() < -1e-12 * (1.0 + std::abs(lam(i)))))
      throw UnstableSystemError("unbounded norm: system has a pole at " + std::to_string(lam(i).real()) + " + " +
                                std::to_string(lam(i).imag()) + "j");
}

}  // namespace

PeakGain peak_gain_search(const std::function<double(double)>& sigma, const Eigen::VectorXcd& poles,
                          double sigma_infinity) {
  PeakGain best{sigma_infinity, kInf};
  std::vector<double> w;
  double wmin = kInf, wmax = 0.0;
  for (Index i = 0; i < poles.size(); ++i) {
    const double mag = std::abs(poles(i));
    if (mag > 0.0) {
      w.push_back(mag);
      wmin = std::min(wmin, mag);
      wmax = std::max(wmax, mag);
    }
    const double im = std::abs(poles(i).imag());
    if (im > 0.0) w.push_back(im);
  }
  if (w.empty()) {
    wmin = 1.0;
    wmax = 1.0;
  }
  const double lo = std::log10(wmin) - 2.0, hi = std::log10(wmax) + 2.0;
  const int n = std::clamp(static_cast<int>(std::ceil((hi - lo) * 16.0)), 32, 480);
  for (int k = 0; k <= n; ++k) w.push_back(std::pow(10.0, lo + (hi - lo) * k / n));
  std::sort(w.begin(), w.end());
  w.erase(std::unique(w.begin(), w.end()), w.end());

  std::vector<double> v(w.size());
  const double v0 = sigma(0.0);
  if (v0 > best.value) best = {v0, 0.0};
  for (std::size_t i = 0; i < w.size(); ++i) {
    v[i] = sigma(w[i]);
    if (v[i] > best.value) best = {v[i], w[i]};
  }
  // local maxima, largest first
  std::vector<std::size_t> peaks;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double left = i == 0 ? v0 : v[i - 1];
    const double right = i + 1 == w.size() ? sigma_infinity : v[i + 1];
    if (v[i] >= left && v[i] >= right) peaks.push_back(i);
  }
  std::sort(peaks.begin(), peaks.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  const std::size_t limit = std::min<std::size_t>(peaks.size(), 6);
  for (std::size_t k = 0; k < limit; ++k) {
    const std::size_t i = peaks[k];
    if (v[i] < 0.5 * best.value) break;
    const double a = i == 0 ? 0.5 * w[0] : w[i - 1];
    const double b = i + 1 == w.size() ? 2.0 * w[i] : w[i + 1];
    double arg = w[i];
    const double val = golden_max(sigma, a, b, arg, 70);
    if (val > best.value) best = {val, arg};
  }
  return best;
}

PeakGain peak_gain_estimate(const ModalBasis& basis, const ModalChannel& channel) {
  require_stable(basis.eigenvalues());
  const double sinf = max_singular_value(channel.d().cast<cdouble>());
  return peak_gain_search([&](double w) { return channel.sigma_max(w); }, basis.eigenvalues(), sinf);
}

PeakGain peak_gain_estimate(const StateSpace& g) {
  const StateSpace gb = balanced_realization(g);
  ModalBasis basis(gb.a());
  require_stable(basis.eigenvalues());
  const double sinf = max_singular_value(g.d().cast<cdouble>());
  if (basis.reliable()) {
    ModalChannel ch(basis, gb.b(), gb.c(), gb.d());
    return peak_gain_search([&](double w) { return ch.sigma_max(w); }, basis.eigenvalues(), sinf);
  }
  HessenbergEvaluator ev(gb);
  return peak_gain_search([&](double w) { return ev.sigma_max(w); }, basis.eigenvalues(), sinf);
}

double hinf_certify(const StateSpace& g0, PeakGain lb, double rel_tol) {
  if (!(rel_tol > 0.0)) throw ValidationError("hinf_norm: rel_tol must be positive");
  const StateSpace g = balanced_realization(g0);
  const Index n = g.order(), m = g.n_inputs(), p = g.n_outputs();
  HessenbergEvaluator ev(g);
  const double sinf = max_singular_value(g.d().cast<cdouble>());
  double low = std::max(lb.value, sinf);
  if (std::isfinite(lb.omega) && lb.omega >= 0.0) low = std::max(low, ev.sigma_max(lb.omega));
  if (n == 0) return sinf;
  if (low == 0.0) {
    if (g.b().isZero(0.0) || g.c().isZero(0.0)) return 0.0;
    low = std::numeric_limits<double>::min();
  }
  const MatrixXd& A = g.a();
  const MatrixXd& B = g.b();
  const MatrixXd& C = g.c();
  const MatrixXd& D = g.d();
  for (int iter = 0; iter < 80; ++iter) {
    const double gam = low * (1.0 + rel_tol);
    const MatrixXd R = D.transpose() * D - gam * gam * MatrixXd::Identity(m, m);
    const MatrixXd S = D * D.transpose() - gam * gam * MatrixXd::Identity(p, p);
    const Eigen::LDLT<MatrixXd> rl(R), sl(S);
    const MatrixXd rdc = rl.solve(D.transpose() * C);
    MatrixXd H(2 * n, 2 * n);
    H.topLeftCorner(n, n) = A - B * rdc;
    H.topRightCorner(n, n) = -gam * B * rl.solve(B.transpose());
    H.bottomLeftCorner(n, n) = gam * C.transpose() * sl.solve(C);
    H.bottomRightCorner(n, n) = -A.transpose() + rdc.transpose() * B.transpose();
    Eigen::EigenSolver<MatrixXd> es(H, false);
    if (es.info() != Eigen::Success) throw NumericalError("hinf_norm: Hamiltonian eigenvalues failed");
    std::vector<double> cand;
    for (Index i = 0; i < 2 * n; ++i) {
      const auto lam = es.eigenvalues()(i);
      if (std::abs(lam.real()) <= 1e-6 * (1.0 + std::abs(lam)) && lam.imag() >= 0.0) cand.push_back(lam.imag());
    }
    if (cand.empty()) return low;
    std::sort(cand.begin(), cand.end());
    std::vector<double> pts = cand;
    for (std::size_t i = 0; i + 1 < cand.size(); ++i) pts.push_back(0.5 * (cand[i] + cand[i + 1]));
    double best = 0.0;
    for (double w : pts) best = std::max(best, ev.sigma_max(w));
    if (best > low) {
      low = best;
      continue;
    }
    return low;
  }
  return low;
}

double hinf_norm(const StateSpace& g, double rel_tol) {
  if (!(rel_tol > 0.0)) throw ValidationError("hinf_norm: rel_tol must be positive");
  if (g.order() == 0) return max_singular_value(g.d().cast<cdouble>());
  const PeakGain lb = peak_gain_estimate(g);
  return hinf_certify(g, lb, rel_tol);
}

double h2_norm(const StateSpace& g) {
  if (!g.d().isZero(0.0)) throw ValidationError("infinite H2 norm: D is nonzero");
  if (g.order() == 0) return 0.0;
  if (!stable(g)) throw UnstableSystemError("unbounded norm: H2 of an unstable system");
  const MatrixXd w = controllability_gramian(g);
  return std::sqrt(std::max(0.0, (g.c() * w * g.c().transpose()).trace()));
}

double h2_norm_observability(const StateSpace& g) {
  if (!g.d().isZero(0.0)) throw ValidationError("infinite H2 norm: D is nonzero");
  if (g.order() == 0) return 0.0;
  if (!stable(g)) throw UnstableSystemError("unbounded norm: H2 of an unstable system");
  const MatrixXd w = observability_gramian(g);
  return std::sqrt(std::max(0.0, (g.b().transpose() * w * g.b()).trace()));
}

}  // namespace flexsc
