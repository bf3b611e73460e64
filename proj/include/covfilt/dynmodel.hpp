#pragma once

#include "covfilt/linalg.hpp"

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

namespace covfilt {

/// Piecewise-constant covariance world: the true covariance is fixed within a
/// slice of T observations and jumps between S states at slice boundaries.
struct RegimeWorld {
  Index n = 0;
  Index T = 0;
  std::vector<Matrix> covariances;  // C_s
  std::vector<Vector> eigenvalues;  // lambda_s, descending
  std::vector<Matrix> eigenvectors; // V_s, column k pairs with lambda_s(k)
  Matrix transition;                // W, row-stochastic
  Vector stationary;                // P
  bool cyclic = false;              // s(k) = k mod S instead of a Markov draw

  Index states() const { return static_cast<Index>(covariances.size()); }
  /// R_{i->j} = V_j V_i^T
  Matrix rotation(Index from, Index to) const;
};

/// Stationary distribution of a row-stochastic matrix (least-squares solve of
/// P^T (W - I) = 0 with sum P = 1).
Vector stationary_distribution(const Eigen::Ref<const Matrix>& transition);

/// World from explicit states. Eigensystems are computed with descending
/// eigenvalues and sign-fixed eigenvectors.
RegimeWorld make_world(const std::vector<Matrix>& covariances, const Eigen::Ref<const Matrix>& transition,
                       Index T, bool cyclic = false);

/// Disjoint coordinate planes in eigen-index space sharing one angle.
struct RotationSpec {
  std::vector<std::pair<Index, Index>> planes;
  double angle = 0.0;
};

/// Planes (k, count + k) for k < count: each of the leading `count` eigenvectors
/// turns toward one of the next `count`.
RotationSpec spike_planes(Index count, double angle);

/// Product of the planar rotations of `spec` as an n x n orthogonal matrix.
/// Throws on a non-finite angle, |angle| > pi, or overlapping / out-of-range planes.
Matrix rotation_matrix(Index n, const RotationSpec& spec);

/// Cyclic S-state world: V_1 Haar-random, V_{s+1} = V_s G with G from `spec`
/// (the rotation acts on eigen indices, so for plane (i, j) column i of
/// V_{s+1} mixes columns i and j of V_s). `spectra` holds one eigenvalue vector shared by all
/// states, or one per state.
RegimeWorld build_cyclic_world(Index n, Index S, const std::vector<Vector>& spectra, const RotationSpec& spec,
                               Index T, std::uint64_t seed);

/// Same states as `world` but Markov switching that stays with probability
/// `stay` and otherwise moves uniformly to another state.
RegimeWorld with_persistence(const RegimeWorld& world, double stay);

/// State of each of `n_slices` slices. Cyclic worlds ignore the seed.
std::vector<Index> state_path(const RegimeWorld& world, Index n_slices, std::uint64_t seed);

/// T x n i.i.d. N(0, C_state) draws.
Matrix simulate_slice(const RegimeWorld& world, Index state, std::uint64_t seed);

/// X^T X / T; the zero mean is known.
Matrix slice_covariance(const Eigen::Ref<const Matrix>& slice);

/// diag(V^T C V)
Vector oracle_eigs(const Eigen::Ref<const Matrix>& v_hat, const Eigen::Ref<const Matrix>& c_next);
/// (V_hat^T V_next)∘2 lambda_next; equal to oracle_eigs for C_next = V_next diag(lambda_next) V_next^T.
Vector oracle_eigs_hadamard(const Eigen::Ref<const Matrix>& v_hat, const Eigen::Ref<const Matrix>& v_next,
                            const Eigen::Ref<const Vector>& lambda_next);
/// (V_hat^T V_true)∘2 lambda: the same-state target nonlinear shrinkage approaches.
Vector nls_oracle_eigs(const Eigen::Ref<const Matrix>& v_hat, const Eigen::Ref<const Matrix>& v_true,
                       const Eigen::Ref<const Vector>& lambda);

struct SliceEstimate {
  Index state = 0;
  Matrix covariance;       // slice_covariance of the draw
  SymEigen<double> eigen;  // of `covariance`
};

/// Slice k drawn from child_seed(seed, k) along state_path(world, n_slices, seed).
std::vector<SliceEstimate> simulate_path(const RegimeWorld& world, Index n_slices, std::uint64_t seed);

/// Mean over consecutive pairs (k, k+1) of oracle_eigs(V_hat_k, C_hat_{k+1}).
Vector ao_from_slices(const std::vector<SliceEstimate>& slices);
Vector ao_regime_eigs(const RegimeWorld& world, Index n_slices, std::uint64_t seed);

/// Eigenvalues fed to the NLS side of a comparison.
enum class NlsTarget {
  true_eigenvalues,    // (V_hat^T V)∘2 lambda, the Frobenius-optimal same-state choice
  sample_eigenvalues,  // (V_hat^T V)∘2 lambda_hat
  analytic,            // nonlinear_shrink(lambda_hat, n/T)
};

struct CompareOptions {
  Index n_slices = 200;
  Index calibration_slices = 0;  // independent AO calibration stream; 0 = n_slices
  NlsTarget nls = NlsTarget::true_eigenvalues;
};

struct CompareResult {
  std::vector<double> ao_loss;   // ||C_AO - C_{s(k+1)}||_F per slice
  std::vector<double> nls_loss;
  Vector ao_eigenvalues;
  double ao_mean = 0.0;
  double nls_mean = 0.0;
  double ao_win_rate = 0.0;  // share of slices with ao_loss < nls_loss
};

/// Throws for a one-state world.
CompareResult frobenius_compare(const RegimeWorld& world, const CompareOptions& options, std::uint64_t seed);

/// Relative L2 gap between sum_g p_g mean(R∘2 lambda) and sum_g p_g mean(R∘2) mean(lambda),
/// pooled over groups g (transition types) weighted by their frequency.
double independence_gap(const std::vector<Matrix>& overlaps_sq, const std::vector<Vector>& lambdas,
                        const std::vector<Index>& groups = {});
/// Gap of consecutive-slice estimates: R_hat = V_hat_k^T V_hat_{k+1}, lambda_hat_{k+1}.
double independence_check(const RegimeWorld& world, Index n_slices, std::uint64_t seed);

struct SweepRow {
  double angle = 0.0;
  Index T = 0;
  Index n = 0;
  double ao_loss_mean = 0.0;
  double nls_loss_mean = 0.0;
  double ao_win_rate = 0.0;
};

struct SweepConfig {
  Index n = 50;
  Index states = 2;
  std::vector<Index> T = {200};
  std::vector<double> angles = {0.39269908169872414};  // pi / 8
  Index planes = 10;
  std::vector<Vector> spectra;  // empty = default_spectrum(n)
  double stay = -1.0;           // < 0: cyclic; otherwise Markov with this W_ii
  CompareOptions compare;
  std::uint64_t seed = 0;
};

/// Ten spikes 20, 18, ..., 2 over a flat bulk at 1.
Vector default_spectrum(Index n);

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<CompareResult> runs;  // per row
};

/// One world per (T, angle); child_seed(seed, row) builds it and drives the comparison.
SweepResult run_sweep(const SweepConfig& cfg);

void write_sweep(std::ostream& os, const std::vector<SweepRow>& rows, char delimiter = ',');
/// Columns row, slice, ao_loss, nls_loss.
void write_slice_losses(std::ostream& os, const SweepResult& result, char delimiter = ',');

}  // namespace covfilt
