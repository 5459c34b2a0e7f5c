#pragma once

#include <Eigen/Eigenvalues>
#include <random>

#include "flexsc/lti/state_space.hpp"

namespace flexsc::testing {

inline StateSpace random_stable(Index n, Index m, Index p, unsigned seed, bool with_d = true) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  auto rnd = [&](Index r, Index c) {
    MatrixXd x(r, c);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) x(i, j) = nd(rng);
    return x;
  };
  MatrixXd a = rnd(n, n);
  Eigen::EigenSolver<MatrixXd> es(a, false);
  double maxre = -1e300;
  for (Index i = 0; i < n; ++i) maxre = std::max(maxre, es.eigenvalues()(i).real());
  a -= (maxre + 0.1 + 0.5 * std::abs(nd(rng))) * MatrixXd::Identity(n, n);
  MatrixXd d = with_d ? MatrixXd(rnd(p, m) * 0.3) : MatrixXd(MatrixXd::Zero(p, m));
  return StateSpace(a, rnd(n, m), rnd(p, n), d, {{"u", m}}, {{"y", p}});
}

inline StateSpace siso(double a, double b, double c, double d) {
  MatrixXd A(1, 1), B(1, 1), C(1, 1), D(1, 1);
  A << a;
  B << b;
  C << c;
  D << d;
  return StateSpace(A, B, C, D, {{"in", 1}}, {{"out", 1}});
}

}  // namespace flexsc::testing
