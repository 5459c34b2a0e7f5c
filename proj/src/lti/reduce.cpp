#include "flexsc/lti/reduce.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>

#include "flexsc/lti/frequency.hpp"
#include "flexsc/lti/lyapunov.hpp"

namespace flexsc {

namespace {

// Symmetric PSD square root factor L with W = L L^T.
MatrixXd psd_factor(const MatrixXd& w) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (w + w.transpose()));
  VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal();
}

// Orthonormal basis of the Krylov space of (a, b).
MatrixXd krylov_basis(const MatrixXd& a, const MatrixXd& b, double tol) {
  const Index n = a.rows();
  MatrixXd basis(n, 0);
  MatrixXd block = b;
  double scale = b.norm();
  while (block.cols() > 0 && basis.cols() < n) {
    if (basis.cols() > 0) {
      block -= basis * (basis.transpose() * block);
      block -= basis * (basis.transpose() * block);
    }
    Eigen::JacobiSVD<MatrixXd> svd(block, Eigen::ComputeThinU);
    const VectorXd sv = svd.singularValues();
    Index r = 0;
    while (r < sv.size() && sv(r) > tol * scale) ++r;
    r = std::min(r, n - basis.cols());
    if (r == 0) break;
    MatrixXd next(n, basis.cols() + r);
    next << basis, svd.matrixU().leftCols(r);
    basis = next;
    block = a * svd.matrixU().leftCols(r);
    scale = std::max(block.norm(), 1e-300);
  }
  return basis;
}

}  // namespace

StateSpace kalman_minimal(const StateSpace& g0, double tol) {
  if (g0.order() == 0) return g0;
  const StateSpace g = balanced_realization(g0);
  const MatrixXd qc = krylov_basis(g.a(), g.b(), tol);
  const MatrixXd ac = qc.transpose() * g.a() * qc, bc = qc.transpose() * g.b(), cc = g.c() * qc;
  const MatrixXd qo = krylov_basis(ac.transpose(), cc.transpose(), tol);
  const Index r = qo.cols();
  return StateSpace(qo.transpose() * ac * qo, qo.transpose() * bc, cc * qo, g.d(), g.inputs(), g.outputs(),
                    r > 0 ? std::vector<PortGroup>{{"minimal", r}} : std::vector<PortGroup>{});
}

Reduction reduce_minimal(const StateSpace& g, double tol) {
  Reduction out{g, false, {}, {}};
  if (g.order() == 0) return out;
  if (!stable(g)) {
    out.passthrough = true;
    out.warning = "reduce_minimal: unstable system passed through unchanged";
    return out;
  }
  const MatrixXd lc = psd_factor(controllability_gramian(g));
  const MatrixXd lo = psd_factor(observability_gramian(g));
  Eigen::JacobiSVD<MatrixXd> svd(lo.transpose() * lc, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd hsv = svd.singularValues();
  out.hankel_singular_values = hsv;
  Index r = 0;
  while (r < hsv.size() && hsv(r) > tol) ++r;
  if (r == g.order()) return out;
  const VectorXd sinv = hsv.head(r).cwiseSqrt().cwiseInverse();
  const MatrixXd t = lc * svd.matrixV().leftCols(r) * sinv.asDiagonal();
  const MatrixXd ti = sinv.asDiagonal() * svd.matrixU().leftCols(r).transpose() * lo.transpose();
  out.system = StateSpace(ti * g.a() * t, ti * g.b(), g.c() * t, g.d(), g.inputs(), g.outputs(),
                          r > 0 ? std::vector<PortGroup>{{"reduced", r}} : std::vector<PortGroup>{});
  return out;
}

}  // namespace flexsc
