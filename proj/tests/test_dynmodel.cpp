#include "covfilt/dynmodel.hpp"
#include "covfilt/random.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <sstream>

using namespace covfilt;

namespace {

Matrix random_cov(Index n, Rng& rng) {
  const Matrix g = standard_normal(2 * n, n, rng);
  return g.transpose() * g / static_cast<double>(2 * n);
}

Vector spike_spectrum(Index n, double spike) {
  Vector v = Vector::Ones(n);
  v(0) = spike;
  return v;
}

}  // namespace

TEST(RegimeWorld, SingleStateRotationIsIdentity) {
  Rng rng(1);
  const auto world = make_world({random_cov(5, rng)}, Matrix::Ones(1, 1), 50);
  EXPECT_LT((world.rotation(0, 0) - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(world.stationary(0), 1.0, 1e-15);
}

TEST(Rotation, ZeroAngleIsIdentity) {
  const Matrix g = rotation_matrix(6, spike_planes(3, 0.0));
  EXPECT_EQ(g, Matrix::Identity(6, 6));
}

TEST(Rotation, QuarterTurnSwapsPlaneAxes) {
  RotationSpec spec;
  spec.planes = {{0, 2}};
  spec.angle = std::numbers::pi / 2.0;
  const Matrix g = rotation_matrix(3, spec);
  EXPECT_LT(orthonormality_error(g), 1e-12);
  EXPECT_NEAR(std::abs(g(2, 0)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(g(0, 2)), 1.0, 1e-15);
  EXPECT_NEAR(g(1, 1), 1.0, 1e-15);
}

TEST(Rotation, InvalidSpecsRejected) {
  RotationSpec overlap;
  overlap.planes = {{0, 1}, {1, 2}};
  overlap.angle = 0.1;
  EXPECT_THROW(rotation_matrix(4, overlap), std::invalid_argument);
  RotationSpec range;
  range.planes = {{0, 4}};
  EXPECT_THROW(rotation_matrix(4, range), std::invalid_argument);
  RotationSpec same;
  same.planes = {{1, 1}};
  EXPECT_THROW(rotation_matrix(4, same), std::invalid_argument);
  EXPECT_THROW(rotation_matrix(4, spike_planes(1, 4.0)), std::invalid_argument);
  EXPECT_THROW(rotation_matrix(4, spike_planes(1, std::nan(""))), std::invalid_argument);
}

TEST(RegimeWorld, CyclicWorldStatesAreRotations) {
  const auto world = build_cyclic_world(12, 3, {default_spectrum(12)}, spike_planes(3, 0.3), 100, 2);
  ASSERT_EQ(world.states(), 3);
  for (Index s = 0; s < 3; ++s) {
    EXPECT_LT(orthonormality_error(world.eigenvectors[static_cast<std::size_t>(s)]), 1e-10);
    EXPECT_LT(orthonormality_error(world.rotation(s, (s + 1) % 3)), 1e-10);
    EXPECT_NEAR(world.covariances[static_cast<std::size_t>(s)].trace(), default_spectrum(12).sum(), 1e-9);
  }
  EXPECT_NEAR(world.transition(0, 1), 1.0, 0.0);
  EXPECT_LT((world.stationary.array() - 1.0 / 3.0).abs().maxCoeff(), 1e-12);
}

TEST(Oracle, HadamardFormMatchesDirect) {
  Rng rng(3);
  const Matrix v_hat = random_orthogonal(7, rng);
  const Matrix v = random_orthogonal(7, rng);
  const Vector lambda = Vector::LinSpaced(7, 9.0, 1.0);
  const Matrix c = v * lambda.asDiagonal() * v.transpose();
  EXPECT_LT((oracle_eigs(v_hat, c) - oracle_eigs_hadamard(v_hat, v, lambda)).cwiseAbs().maxCoeff(), 1e-12);
  // doubly stochastic overlap keeps the trace
  EXPECT_NEAR(oracle_eigs(v_hat, c).sum(), c.trace(), 1e-12);
  const Matrix o = squared_overlap(v_hat, v);
  EXPECT_LT((o.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-10);
}

TEST(Oracle, NlsOracleIsFrobeniusOptimal) {
  Rng rng(4);
  const Matrix v_hat = random_orthogonal(5, rng);
  const Matrix v = random_orthogonal(5, rng);
  Vector lambda(5);
  lambda << 5.0, 3.0, 2.0, 1.0, 0.5;
  const Matrix c = v * lambda.asDiagonal() * v.transpose();
  const Vector d = nls_oracle_eigs(v_hat, v, lambda);
  const double best = frobenius_distance(reassemble(v_hat, d), c);
  for (Index k = 0; k < 5; ++k)
    for (const double step : {-0.01, 0.01}) {
      Vector e = d;
      e(k) += step;
      EXPECT_GT(frobenius_distance(reassemble(v_hat, e), c), best);
    }
}

TEST(Slices, SampleCovarianceWithinNoiseScale) {
  const auto world = build_cyclic_world(20, 2, {default_spectrum(20)}, spike_planes(5, 0.2), 400, 5);
  for (Index s = 0; s < 2; ++s) {
    const Matrix& c = world.covariances[static_cast<std::size_t>(s)];
    const Matrix est = slice_covariance(simulate_slice(world, s, child_seed(6, static_cast<std::uint64_t>(s))));
    // E|S - C|_F^2 = ((tr C)^2 + tr C^2) / T for Gaussian data with known mean
    const double scale = std::sqrt((c.trace() * c.trace() + (c * c).trace()) / 400.0);
    EXPECT_LT(frobenius_distance(est, c), 3.0 * scale);
  }
}

TEST(Slices, SlicesAreDeterministic) {
  const auto world = build_cyclic_world(6, 2, {default_spectrum(6)}, spike_planes(2, 0.2), 30, 7);
  EXPECT_EQ(simulate_slice(world, 1, 99), simulate_slice(world, 1, 99));
  const auto path = simulate_path(world, 4, 8);
  ASSERT_EQ(path.size(), 4u);
  EXPECT_EQ(path[2].state, 0);
  EXPECT_EQ(path[3].state, 1);
}

TEST(AverageOracle, QuarterTurnMovesSpikeOffTopRank) {
  // spike 5 on eigenvector 0 of state 0 and on eigenvector 1 direction in state 1:
  // the top sample eigenvector of one state sees only bulk variance in the next.
  const Index n = 10;
  const auto world = build_cyclic_world(n, 2, {spike_spectrum(n, 5.0)}, spike_planes(1, std::numbers::pi / 2.0),
                                        2000, 9);
  const Vector ao = ao_regime_eigs(world, 60, 10);
  EXPECT_NEAR(ao(0), 1.0, 0.15);
  EXPECT_NEAR(ao.sum(), 14.0, 0.5);
  // the spike variance moves to the bulk ranks
  EXPECT_NEAR(ao.segment(1, n - 1).sum(), 13.0, 0.5);
}

TEST(AverageOracle, ZeroAngleRecoversSpectrum) {
  const auto world = build_cyclic_world(10, 2, {default_spectrum(10)}, spike_planes(5, 0.0), 3000, 11);
  const Vector ao = ao_regime_eigs(world, 40, 12);
  EXPECT_LT((ao - default_spectrum(10)).cwiseAbs().maxCoeff(), 0.1 * default_spectrum(10).maxCoeff());
}

TEST(Compare, SingleStateRejected) {
  Rng rng(13);
  const auto world = make_world({random_cov(4, rng)}, Matrix::Ones(1, 1), 50);
  EXPECT_THROW(frobenius_compare(world, {}, 1), std::invalid_argument);
}

TEST(Compare, ZeroAngleLossesClose) {
  // Identical states: AO sits between the per-slice oracle (a lower bound) and
  // the analytic shrinkage it approximates, a few percent from each.
  const auto world = build_cyclic_world(50, 2, {default_spectrum(50)}, spike_planes(10, 0.0), 200, 14);
  CompareOptions opt;
  opt.n_slices = 100;
  const auto oracle = frobenius_compare(world, opt, 15);
  opt.nls = NlsTarget::analytic;
  const auto analytic = frobenius_compare(world, opt, 15);
  EXPECT_EQ(oracle.ao_loss.size(), oracle.nls_loss.size());
  EXPECT_EQ(oracle.ao_mean, analytic.ao_mean);
  EXPECT_GE(oracle.ao_mean, oracle.nls_mean);
  EXPECT_LE(oracle.ao_mean, analytic.nls_mean);
  EXPECT_LT(oracle.ao_mean / oracle.nls_mean - 1.0, 0.06);
  EXPECT_LT(analytic.nls_mean / analytic.ao_mean - 1.0, 0.06);
}

TEST(Independence, IndependentInputsGiveSmallGap) {
  Rng rng(16);
  std::uniform_real_distribution<double> u(1.0, 10.0);
  std::vector<Matrix> overlaps;
  std::vector<Vector> lambdas;
  for (int k = 0; k < 3000; ++k) {
    const Matrix q = random_orthogonal(4, rng);
    overlaps.push_back(q.cwiseAbs2());
    Vector l(4);
    for (Index i = 0; i < 4; ++i) l(i) = u(rng);
    lambdas.push_back(l);
  }
  EXPECT_LT(independence_gap(overlaps, lambdas), 0.05);
}

TEST(Independence, DependentInputsHandCase) {
  // R = I with lambda (2, 1), R = swap with lambda (1, 2): mean(R∘2 lambda) = (2, 1),
  // mean(R∘2) mean(lambda) = (1.5, 1.5), gap |(0.5, -0.5)| / |(2, 1)|
  const Matrix id = Matrix::Identity(2, 2);
  Matrix swap(2, 2);
  swap << 0, 1, 1, 0;
  Vector a(2), b(2);
  a << 2, 1;
  b << 1, 2;
  EXPECT_NEAR(independence_gap({id, swap}, {a, b}), std::sqrt(0.5) / std::sqrt(5.0), 1e-14);
  // grouping by transition type removes the dependence
  EXPECT_NEAR(independence_gap({id, swap}, {a, b}, {0, 1}), 0.0, 1e-14);
}

TEST(Stationary, TwoStateChain) {
  Matrix w(2, 2);
  w << 0.9, 0.1, 0.2, 0.8;
  const Vector p = stationary_distribution(w);
  EXPECT_NEAR(p(0), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(p(1), 1.0 / 3.0, 1e-12);
  Matrix bad = w;
  bad(0, 0) = 0.5;
  EXPECT_THROW(stationary_distribution(bad), std::invalid_argument);
}

TEST(Persistence, TransitionAndPathFrequencies) {
  const auto base = build_cyclic_world(6, 3, {default_spectrum(6)}, spike_planes(2, 0.2), 50, 17);
  const auto world = with_persistence(base, 0.95);
  EXPECT_FALSE(world.cyclic);
  EXPECT_NEAR(world.transition(1, 1), 0.95, 1e-15);
  EXPECT_NEAR(world.transition(1, 0), 0.025, 1e-15);
  const auto path = state_path(world, 20000, 18);
  Index stays = 0;
  for (std::size_t k = 1; k < path.size(); ++k) stays += path[k] == path[k - 1];
  EXPECT_NEAR(static_cast<double>(stays) / 19999.0, 0.95, 0.01);
}

TEST(Sweep, DeterministicAndWritesHeader) {
  SweepConfig cfg;
  cfg.n = 16;
  cfg.planes = 4;
  cfg.T = {60, 120};
  cfg.angles = {0.2};
  cfg.compare.n_slices = 20;
  cfg.seed = 19;
  const auto a = run_sweep(cfg);
  const auto b = run_sweep(cfg);
  ASSERT_EQ(a.rows.size(), 2u);
  EXPECT_EQ(a.rows[1].ao_loss_mean, b.rows[1].ao_loss_mean);
  std::ostringstream os;
  write_sweep(os, a.rows);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "angle,T,n,ao_loss_mean,nls_loss_mean,ao_win_rate");
}
