#include "covfilt/synth.hpp"
#include "covfilt/estimators.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace covfilt;

TEST(Synth, ZeroLoadingsGiveUncorrelatedAssets) {
  SynthSpec spec;
  spec.loading_mean = {0.0, 0.0, 0.0};
  spec.loading_sd = {0.0, 0.0, 0.0};
  spec.drift = 0.0;
  const Index days = 2000;
  const auto m = synth_market(spec, days, 30, 1);
  const Matrix r = sample_correlation(m.panel.returns);
  const double bound = 3.0 / std::sqrt(static_cast<double>(days));
  int inside = 0, pairs = 0;
  for (Index i = 0; i < 30; ++i)
    for (Index j = i + 1; j < 30; ++j, ++pairs)
      if (std::abs(r(i, j)) < bound) ++inside;
  EXPECT_GE(inside, static_cast<int>(0.99 * pairs));
}

TEST(Synth, SampleCovarianceConvergesToTruth) {
  SynthSpec spec;
  spec.drift = 0.0;
  const auto m = synth_market(spec, 20000, 6, 2);
  const Matrix& truth = m.covariances.front();
  const Matrix c = sample_cov(m.panel.returns).matrix;
  // entrywise standard error of a sample covariance is about sqrt((s_ii s_jj + s_ij^2) / T)
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 6; ++j) {
      const double se = std::sqrt((truth(i, i) * truth(j, j) + truth(i, j) * truth(i, j)) / 20000.0);
      EXPECT_NEAR(c(i, j), truth(i, j), 4.5 * se);
    }
}

TEST(Synth, RegimesSwitchAndStatesAreValid) {
  SynthSpec spec;
  spec.regimes = 3;
  spec.vol_scale = {1.0, 2.0, 0.7};
  const auto m = synth_market(spec, 3000, 20, 3);
  ASSERT_EQ(m.covariances.size(), 3u);
  const std::set<Index> seen(m.state.begin(), m.state.end());
  EXPECT_EQ(seen.size(), 3u);
  Index switches = 0;
  for (std::size_t d = 1; d < m.state.size(); ++d) switches += m.state[d] != m.state[d - 1];
  // mean duration 120 days: about 25 switches expected
  EXPECT_GT(switches, 10);
  EXPECT_LT(switches, 50);
  for (const auto& c : m.covariances) {
    CovEstimate e;
    e.matrix = c;
    EXPECT_NO_THROW(check_cov_estimate(e));
  }
}

TEST(Synth, SameSeedSameMarket) {
  SynthSpec spec;
  spec.regimes = 2;
  const auto a = synth_market(spec, 300, 10, 4);
  const auto b = synth_market(spec, 300, 10, 4);
  const auto c = synth_market(spec, 300, 10, 5);
  EXPECT_EQ(a.panel.returns, b.panel.returns);
  EXPECT_EQ(a.panel.caps, b.panel.caps);
  EXPECT_NE(a.panel.returns, c.panel.returns);
}

TEST(Synth, PanelIsWellFormed) {
  const auto m = synth_market(SynthSpec{}, 50, 5, 6);
  EXPECT_NO_THROW(m.panel.validate());
  EXPECT_EQ(m.panel.dates.front(), "2000-01-03");
  EXPECT_EQ(m.panel.dates[5], "2000-01-10");  // skips the weekend
  EXPECT_EQ(m.panel.asset_ids.front(), "S0001");
  EXPECT_GT(m.panel.returns.minCoeff(), -1.0);
  EXPECT_GT(m.panel.caps.minCoeff(), 0.0);
}

TEST(Synth, ExplicitNonPsdStateRejected) {
  SynthSpec spec;
  Matrix bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  spec.covariances = {bad};
  EXPECT_THROW(synth_market(spec, 10, 2, 7), std::invalid_argument);
  spec.covariances = {Matrix::Identity(3, 3)};
  EXPECT_THROW(synth_market(spec, 10, 2, 7), std::invalid_argument);
}

TEST(Synth, ExplicitStatesUsed) {
  SynthSpec spec;
  Matrix c = 1e-4 * Matrix::Identity(2, 2);
  c(0, 1) = c(1, 0) = 0.9e-4;
  spec.covariances = {c};
  spec.drift = 0.0;
  const auto m = synth_market(spec, 5000, 2, 8);
  EXPECT_NEAR(sample_correlation(m.panel.returns)(0, 1), 0.9, 0.02);
}

TEST(WeekdayDates, CrossesMonthAndYear) {
  const auto d = weekday_dates(300);
  EXPECT_EQ(d[20], "2000-01-31");
  EXPECT_EQ(d[21], "2000-02-01");
  for (std::size_t k = 1; k < d.size(); ++k) EXPECT_LT(d[k - 1], d[k]);
}
