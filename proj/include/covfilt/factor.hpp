#pragma once

#include "covfilt/linalg.hpp"

namespace covfilt {

struct ReturnPanel;

struct FactorFit {
  Vector betas;            // per-asset OLS slope on the factor
  Matrix residuals;        // returns - factor * beta^T
  double factor_variance;  // population variance of the factor
};

/// Single-factor OLS decomposition. Residuals have zero in-sample covariance
/// with the factor. Throws on a length mismatch or a constant factor.
FactorFit factor_residualize(const Eigen::Ref<const Matrix>& window, const Eigen::Ref<const Vector>& factor);

/// beta beta^T Var(f) + residual covariance.
Matrix factor_reassemble(const FactorFit& fit, const Eigen::Ref<const Matrix>& residual_cov);

/// Equal-weighted cross-sectional mean of the available returns on each day;
/// days with no observation get 0.
Vector market_factor(const ReturnPanel& panel);

}  // namespace covfilt
