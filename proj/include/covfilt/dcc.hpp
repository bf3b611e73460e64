#pragma once

#include "covfilt/estimators.hpp"

#include <functional>
#include <vector>

namespace covfilt {

/// sigma2_t = omega + a r_{t-1}^2 + b sigma2_{t-1}
struct GarchParams {
  double omega = 0.0;
  double a = 0.0;
  double b = 0.0;
};

struct GarchFit {
  GarchParams params;
  Vector variance;          // in-sample conditional variances sigma2_0..sigma2_{T-1}
  double next_variance = 0.0;  // one-step forecast sigma2_T
  double neg_log_likelihood = 0.0;
  bool converged = false;
};

/// Gaussian quasi-likelihood GARCH(1,1) on a demeaned series with variance
/// targeting (omega = var (1 - a - b)) and sigma2_0 = sample variance.
GarchFit garch_fit(const Eigen::Ref<const Vector>& demeaned);

/// Maps a descending eigenvalue vector at concentration c = n/T to a filtered one.
using EigenvalueShrink = std::function<Vector(const Vector& eigs, double concentration)>;

inline Vector identity_shrink(const Vector& eigs, double) { return eigs; }
inline Vector nls_shrink(const Vector& eigs, double c) { return nonlinear_shrink(eigs, c); }

struct DccFit {
  std::vector<GarchParams> garch;
  double alpha = 0.0;
  double beta = 0.0;
  Matrix target;      // unit-diagonal unconditional correlation target
  Matrix q_terminal;  // pseudo-correlation Q_{T+1}
  bool fallback = false;  // (alpha, beta) optimizer failed; fixed at (0.01, 0.97)
};

struct DccResult {
  DccFit fit;
  CovEstimate forecast;  // H_{T+1} = D_{T+1} R_{T+1} D_{T+1}
};

inline constexpr Index kDccMinRows = 250;

/// DCC(1,1) with a shrunk correlation target. (alpha, beta) maximize the
/// composite likelihood over contiguous asset pairs (1,2), (2,3), ...
DccResult dcc_fit_forecast(const Eigen::Ref<const Matrix>& window, const EigenvalueShrink& shrink = nls_shrink);

}  // namespace covfilt
