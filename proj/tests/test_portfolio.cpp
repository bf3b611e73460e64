#include "covfilt/portfolio.hpp"
#include "covfilt/random.hpp"

#include <gtest/gtest.h>

using namespace covfilt;

namespace {

Matrix random_spd(Index n, Rng& rng) {
  const Matrix g = standard_normal(n + 2, n, rng);
  return g.transpose() * g / static_cast<double>(n + 2) + 0.05 * Matrix::Identity(n, n);
}

// Budget-constrained 3-asset minimum by a grid over (w1, w2) that zooms onto
// the best cell until the spacing is below 1e-9.
Vector grid_minimum_3(const Matrix& c) {
  Vector centre = Vector::Constant(3, 1.0 / 3.0);
  double half = 20.0;
  const int steps = 40;
  while (half > 1e-10) {
    double best = std::numeric_limits<double>::infinity();
    Vector arg = centre;
    for (int i = -steps; i <= steps; ++i)
      for (int j = -steps; j <= steps; ++j) {
        Vector w(3);
        w(0) = centre(0) + half * i / steps;
        w(1) = centre(1) + half * j / steps;
        w(2) = 1.0 - w(0) - w(1);
        const double v = w.dot(c * w);
        if (v < best) {
          best = v;
          arg = w;
        }
      }
    centre = arg;
    half *= 4.0 / steps;
  }
  return centre;
}

}  // namespace

TEST(GmvLongShort, IdentityGivesEqualWeights) {
  const auto w = gmv_long_short(Matrix::Identity(4, 4));
  EXPECT_LT((w.weights.array() - 0.25).abs().maxCoeff(), 1e-15);
  EXPECT_EQ(w.assets, (std::vector<Index>{0, 1, 2, 3}));
}

TEST(GmvLongShort, DiagonalHandCase) {
  Matrix c = Matrix::Zero(2, 2);
  c.diagonal() << 1.0, 4.0;
  const auto w = gmv_long_short(c);
  EXPECT_NEAR(w.weights(0), 0.8, 1e-15);
  EXPECT_NEAR(w.weights(1), 0.2, 1e-15);
}

TEST(GmvLongShort, MatchesGridOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 25; ++trial) {
    const Matrix c = random_spd(3, rng);
    const auto w = gmv_long_short(c);
    EXPECT_LT((w.weights - grid_minimum_3(c)).cwiseAbs().maxCoeff(), 1e-6) << "trial " << trial;
    EXPECT_NEAR(w.weights.sum(), 1.0, 1e-14);
  }
}

TEST(GmvLongShort, ScaleInvariant) {
  Rng rng(2);
  const Matrix c = random_spd(6, rng);
  const auto a = gmv_long_short(c);
  const auto b = gmv_long_short(1e-4 * c);
  EXPECT_LT((a.weights - b.weights).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GmvLongShort, SingularMatrixGetsRidge) {
  const Matrix c = Matrix::Ones(3, 3);  // rank one
  const auto w = gmv_long_short(c);
  EXPECT_GT(w.ridge, 0.0);
  EXPECT_NEAR(w.weights.sum(), 1.0, 1e-12);
  EXPECT_TRUE(w.weights.allFinite());
}

TEST(GmvLongShort, ZeroMatrixRejected) {
  EXPECT_THROW(gmv_long_short(Matrix::Zero(3, 3)), std::invalid_argument);
  EXPECT_THROW(gmv_long_short(Matrix::Identity(3, 3), {0, 1}), std::invalid_argument);
}

TEST(GmvLongOnly, CornerSolution) {
  Matrix c(2, 2);
  c << 1.0, 0.9, 0.9, 0.5;
  const auto w = gmv_long_only(c);
  EXPECT_NEAR(w.weights(0), 0.0, 1e-12);
  EXPECT_NEAR(w.weights(1), 1.0, 1e-12);
  EXPECT_EQ(w.side, Side::long_only);
}

TEST(GmvLongOnly, EqualsLongShortWhenInterior) {
  Matrix c = Matrix::Zero(3, 3);
  c.diagonal() << 1.0, 2.0, 3.0;
  const auto a = gmv_long_short(c);
  const auto b = gmv_long_only(c);
  EXPECT_LT((a.weights - b.weights).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GmvLongOnly, KktResidualSmall) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix g = standard_normal(5, 10, rng);  // rank 5: many zero weights
    const Matrix c = g.transpose() * g + 0.01 * Matrix::Identity(10, 10);
    const auto w = gmv_long_only(c);
    EXPECT_GE(w.weights.minCoeff(), 0.0);
    EXPECT_NEAR(w.weights.sum(), 1.0, 1e-12);
    EXPECT_LT(long_only_kkt_residual(c, w.weights), 1e-8 * c.trace() / 10.0) << "trial " << trial;
  }
}

TEST(GmvLongOnly, IndefiniteInputStillKkt) {
  Matrix c(3, 3);
  c << 1.0, 2.0, 0.0, 2.0, 1.0, 0.0, 0.0, 0.0, 1.0;  // eigenvalue -1
  const auto w = gmv_long_only(c);
  EXPECT_GE(w.weights.minCoeff(), 0.0);
  EXPECT_LT(long_only_kkt_residual(c, w.weights), 1e-10);
  const double equal = Vector::Constant(3, 1.0 / 3.0).dot(c * Vector::Constant(3, 1.0 / 3.0));
  EXPECT_LE(w.weights.dot(c * w.weights), equal + 1e-15);
}

TEST(KktResidual, DetectsNonOptimalPoint) {
  Matrix c = Matrix::Zero(2, 2);
  c.diagonal() << 1.0, 4.0;
  Vector w(2);
  w << 0.5, 0.5;
  EXPECT_NEAR(long_only_kkt_residual(c, w), 0.75, 1e-15);  // gradients 0.5 and 2 around their mean 1.25
}

TEST(EqualWeight, Basic) {
  const auto w = equal_weight(4);
  EXPECT_LT((w.weights.array() - 0.25).abs().maxCoeff(), 1e-16);
  EXPECT_THROW(equal_weight(0), std::invalid_argument);
}

TEST(CapGross, HandExample) {
  WeightVector t;
  t.assets = {0, 1};
  t.weights = Vector(2);
  t.weights << 1.5, -0.5;
  const auto w = cap_gross_leverage(t, 1.4);
  EXPECT_NEAR(w.weights(0), 1.2, 1e-9);
  EXPECT_NEAR(w.weights(1), -0.2, 1e-9);
  EXPECT_LE(w.gross_leverage(), 1.4 + 1e-9);
  EXPECT_NEAR(w.weights.sum(), 1.0, 1e-14);
}

TEST(CapGross, NoOpWhenSlack) {
  WeightVector t = equal_weight(3);
  t.weights << 0.6, 0.5, -0.1;
  const auto w = cap_gross_leverage(t, 1.5);
  EXPECT_EQ(w.weights, t.weights);
  EXPECT_THROW(cap_gross_leverage(t, 0.9), std::invalid_argument);
}

TEST(CapTurnover, BindsExactlyAtBudget) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    WeightVector t = equal_weight(5), d = equal_weight(5);
    t.weights = standard_normal(5, 1, rng).col(0);
    t.weights /= t.weights.sum();
    d.weights = standard_normal(5, 1, rng).col(0).cwiseAbs();
    d.weights /= d.weights.sum();
    const double tau = 0.1;
    const auto w = cap_turnover(t, d, tau);
    const double gap = (t.weights - d.weights).cwiseAbs().sum();
    EXPECT_LE((w.weights - d.weights).cwiseAbs().sum(), tau + 1e-12);
    if (gap > tau) {
      EXPECT_NEAR((w.weights - d.weights).cwiseAbs().sum(), tau, 1e-12);
    }
    EXPECT_NEAR(w.weights.sum(), 1.0, 1e-12);
  }
}

TEST(CapTurnover, NoOpWhenSlackAndMismatchRejected) {
  WeightVector t = equal_weight(2), d = equal_weight(2);
  t.weights << 0.6, 0.4;
  EXPECT_EQ(cap_turnover(t, d, 0.5).weights, t.weights);
  WeightVector other = equal_weight(2, {3, 4});
  EXPECT_THROW(cap_turnover(t, other, 0.5), std::invalid_argument);
  EXPECT_THROW(cap_turnover(t, d, -0.1), std::invalid_argument);
}
