#pragma once

#include "covfilt/linalg.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace covfilt {

enum class Side { long_short, long_only };

std::string to_string(Side side);
Side side_from_string(const std::string& name);

/// Budget-one portfolio over panel columns `assets`.
struct WeightVector {
  std::vector<Index> assets;
  Vector weights;
  Side side = Side::long_short;
  double ridge = 0.0;  // ridge eps (trace/n) I added before solving, 0 if none

  Index size() const { return weights.size(); }
  double gross_leverage() const { return weights.cwiseAbs().sum(); }
};

/// Thrown by gmv_long_only when the iteration budget runs out.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, Vector best, double kkt_residual)
      : std::runtime_error(what), best_(std::move(best)), kkt_residual_(kkt_residual) {}
  const Vector& best_iterate() const { return best_; }
  double kkt_residual() const { return kkt_residual_; }

 private:
  Vector best_;
  double kkt_residual_;
};

/// w = C^-1 1 / (1^T C^-1 1). A near-singular C (smallest eigenvalue below
/// 1e-12 trace/n) gets a ridge 1e-10 (trace/n) I, escalated by 10x until it
/// clears that threshold.
WeightVector gmv_long_short(const Eigen::Ref<const Matrix>& cov, std::vector<Index> assets = {});

/// argmin w^T C w subject to sum w = 1, w >= 0, by a primal active-set method
/// that follows negative-curvature directions to the boundary, so indefinite
/// input still ends at a KKT point. Starts from equal weights and never
/// increases the objective.
WeightVector gmv_long_only(const Eigen::Ref<const Matrix>& cov, std::vector<Index> assets = {});

/// Largest violation of the long-only KKT conditions: with mu the mean of
/// (Cw)_i over held assets, max of |(Cw)_i - mu| over held assets and of
/// mu - (Cw)_i over assets at zero. Assets count as held above `zero_tol`.
double long_only_kkt_residual(const Eigen::Ref<const Matrix>& cov, const Eigen::Ref<const Vector>& w,
                              double zero_tol = 1e-14);

WeightVector equal_weight(Index n, std::vector<Index> assets = {});

/// lambda target + (1 - lambda) drifted with lambda = min(1, tau / |target - drifted|_1).
WeightVector cap_turnover(const WeightVector& target, const WeightVector& drifted, double tau);

/// Blend toward equal weights with the largest lambda in [0, 1] keeping the
/// gross leverage within `cap` (bisection to 1e-10 in lambda).
WeightVector cap_gross_leverage(const WeightVector& target, double cap);

}  // namespace covfilt
