#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "flexsc/common/error.hpp"
#include "flexsc/lti/frequency.hpp"
#include "flexsc/lti/lyapunov.hpp"
#include "flexsc/lti/norms.hpp"
#include "flexsc/lti/transfer.hpp"
#include "test_util.hpp"

using namespace flexsc;
using flexsc::testing::random_stable;
using flexsc::testing::siso;

TEST(HinfNorm, FirstOrderLag) { EXPECT_NEAR(hinf_norm(siso(-1.0, 1.0, 1.0, 0.0)), 1.0, 1e-6); }

TEST(HinfNorm, LightlyDampedResonance) {
  const double z = 0.1, w = 2.0;
  auto g = transfer_function({w * w}, {1.0, 2.0 * z * w, w * w});
  EXPECT_NEAR(hinf_norm(g), 1.0 / (2.0 * z * std::sqrt(1.0 - z * z)), 1e-6 * 5.0252);
}

TEST(HinfNorm, VeryLightDamping) {
  const double z = 1e-4, w = 37.0;
  auto g = transfer_function({w * w}, {1.0, 2.0 * z * w, w * w});
  const double ref = 1.0 / (2.0 * z * std::sqrt(1.0 - z * z));
  EXPECT_NEAR(hinf_norm(g) / ref, 1.0, 1e-6);
}

TEST(HinfNorm, DenseGridOracle) {
  for (unsigned seed = 1; seed <= 5; ++seed) {
    auto g = random_stable(4, 2, 2, seed);
    const double tol = 1e-6;
    const double hn = hinf_norm(g, tol);
    HessenbergEvaluator ev(g);
    double grid_max = max_singular_value(g.d().cast<cdouble>());
    const auto grid = logspace(-4, 4, 1000000);
    for (double w : grid) grid_max = std::max(grid_max, ev.sigma_max(w));
    grid_max = std::max(grid_max, ev.sigma_max(0.0));
    EXPECT_LE(grid_max, (1.0 + tol) * hn) << "seed " << seed;
    EXPECT_NEAR(hn / grid_max, 1.0, 1e-5) << "seed " << seed;
  }
}

TEST(HinfNorm, LowerBoundsEveryGridPoint) {
  for (unsigned seed = 20; seed < 30; ++seed) {
    auto g = random_stable(6, 3, 2, seed);
    const double hn = hinf_norm(g);
    HessenbergEvaluator ev(g);
    for (double w : logspace(-3, 3, 2000)) EXPECT_LE(ev.sigma_max(w), (1.0 + 1e-6) * hn);
  }
}

TEST(HinfNorm, Scaling) {
  auto g = random_stable(5, 2, 2, 3);
  const double h = hinf_norm(g);
  for (double a : {-3.0, 0.25, 7.0}) EXPECT_NEAR(hinf_norm(g.scaled(a)) / (std::abs(a) * h), 1.0, 1e-9);
}

TEST(HinfNorm, Submultiplicative) {
  for (unsigned seed = 40; seed < 46; ++seed) {
    auto g1 = random_stable(3, 2, 2, seed);
    auto g2 = random_stable(4, 2, 2, seed + 100);
    EXPECT_LE(hinf_norm(series(g2, g1)), hinf_norm(g1) * hinf_norm(g2) * (1.0 + 1e-6));
  }
}

TEST(HinfNorm, Errors) {
  EXPECT_THROW(hinf_norm(siso(1.0, 1.0, 1.0, 0.0)), UnstableSystemError);
  EXPECT_THROW(hinf_norm(siso(-1.0, 1.0, 1.0, 0.0), 0.0), ValidationError);
  EXPECT_THROW(hinf_norm(siso(-1.0, 1.0, 1.0, 0.0), -1.0), ValidationError);
}

TEST(HinfNorm, StaticAndFeedthroughPeak) {
  // (s+10)/(s+1): peak 10 at DC; (s+1)/(s+10) with large D: peak D at infinity
  EXPECT_NEAR(hinf_norm(transfer_function({1.0, 10.0}, {1.0, 1.0})), 10.0, 1e-5);
  EXPECT_NEAR(hinf_norm(transfer_function({1.0, 1.0}, {1.0, 10.0})), 1.0, 1e-6);
}

TEST(HinfNorm, EstimateIsLowerBound) {
  for (unsigned seed = 60; seed < 70; ++seed) {
    auto g = random_stable(8, 3, 3, seed);
    const auto est = peak_gain_estimate(g);
    const double hn = hinf_norm(g);
    EXPECT_LE(est.value, hn * (1.0 + 1e-9));
    EXPECT_GT(est.value, hn * (1.0 - 1e-6));
  }
}

TEST(H2Norm, Analytic) {
  EXPECT_NEAR(h2_norm(siso(-1.0, 1.0, 1.0, 0.0)), std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(h2_norm(siso(-4.0, 1.0, 1.0, 0.0)), 1.0 / std::sqrt(8.0), 1e-12);
}

TEST(H2Norm, GramianDuality) {
  for (unsigned seed = 1; seed <= 10; ++seed) {
    auto g = random_stable(7, 2, 3, seed, false);
    const double c = h2_norm(g), o = h2_norm_observability(g);
    EXPECT_NEAR(c / o, 1.0, 1e-10);
  }
}

TEST(H2Norm, ModalGramianMatches) {
  for (unsigned seed = 1; seed <= 5; ++seed) {
    auto g = random_stable(9, 2, 2, seed, false);
    ModalBasis basis(g.a());
    ModalChannel ch(basis, g.b(), g.c(), g.d());
    EXPECT_NEAR(ch.h2() / h2_norm(g), 1.0, 1e-9);
  }
}

TEST(H2Norm, Scaling) {
  auto g = random_stable(5, 2, 2, 9, false);
  EXPECT_NEAR(h2_norm(g.scaled(-2.5)) / h2_norm(g), 2.5, 1e-9);
}

TEST(H2Norm, Errors) {
  EXPECT_THROW(h2_norm(siso(-1.0, 1.0, 1.0, 0.5)), ValidationError);
  EXPECT_THROW(h2_norm(siso(1.0, 1.0, 1.0, 0.0)), UnstableSystemError);
}

TEST(Lyapunov, ResidualIsSmall) {
  auto g = random_stable(12, 3, 1, 5, false);
  const MatrixXd q = g.b() * g.b().transpose();
  const MatrixXd x = lyapunov(g.a(), q);
  EXPECT_LT((g.a() * x + x * g.a().transpose() + q).norm(), 1e-10 * q.norm());
}
