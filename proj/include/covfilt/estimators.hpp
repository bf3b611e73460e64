#pragma once

#include "covfilt/linalg.hpp"

#include <map>
#include <string>

namespace covfilt {

/// Symmetric PSD covariance (daily return^2) with provenance.
struct CovEstimate {
  Matrix matrix;
  std::string method;
  Index anchor = -1;  // panel row of the window end, -1 when not panel-bound
  Index window = 0;   // number of rows used
  std::map<std::string, double> params;
};

/// Throws std::logic_error when the estimate is not symmetric to 1e-12
/// relative or has an eigenvalue below -1e-10 trace/n.
void check_cov_estimate(const CovEstimate& est);

/// Population moments per column (divisor T).
struct Moments {
  Vector mean;
  Vector stdev;
};

Moments column_moments(const Eigen::Ref<const Matrix>& window);

/// (x - mean) / stdev per column; zero-variance columns are only centred.
Matrix standardize(const Eigen::Ref<const Matrix>& x, const Moments& moments);

/// C = (1/T) sum_t (r_t - rbar)(r_t - rbar)^T.
CovEstimate sample_cov(const Eigen::Ref<const Matrix>& window);

/// Pearson correlation with population moments; zero-variance columns get a
/// unit diagonal and zero off-diagonal entries.
Matrix sample_correlation(const Eigen::Ref<const Matrix>& window);

/// Analytic nonlinear shrinkage of a descending sample spectrum at
/// concentration c = n/T.
///
/// The sample spectral density f and its Hilbert transform H are estimated
/// with an Epanechnikov kernel whose width at eigenvalue j is lambda_j T^(-1/3);
/// each eigenvalue then maps to
///
///   lambda_j / ((pi c lambda_j f_j)^2 + (1 - c - pi c lambda_j H_j)^2),
///
/// and the result is rescaled to the input trace. Requires 0 < c < 1.
Vector nonlinear_shrink(const Eigen::Ref<const Vector>& eigs, double concentration);

/// Sample covariance with its spectrum replaced by nonlinear_shrink. `variant`
/// is recorded as the method tag (nls, qis, quest all share one kernel).
CovEstimate nls_cov(const Eigen::Ref<const Matrix>& window, const std::string& variant = "nls");

}  // namespace covfilt
