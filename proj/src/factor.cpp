#include "covfilt/factor.hpp"

#include "covfilt/panel.hpp"

#include <stdexcept>

namespace covfilt {

FactorFit factor_residualize(const Eigen::Ref<const Matrix>& window, const Eigen::Ref<const Vector>& factor) {
  if (factor.size() != window.rows())
    throw std::invalid_argument("factor_residualize: factor length differs from window rows");
  const auto t = static_cast<double>(window.rows());
  const Vector f = factor.array() - factor.mean();
  const double var = f.squaredNorm() / t;
  if (!(var > 0.0)) throw std::invalid_argument("factor_residualize: factor has zero variance");

  const Matrix centered = window.rowwise() - window.colwise().mean();
  FactorFit fit;
  fit.factor_variance = var;
  fit.betas = centered.transpose() * f / (t * var);
  fit.residuals = window - factor * fit.betas.transpose();
  return fit;
}

Matrix factor_reassemble(const FactorFit& fit, const Eigen::Ref<const Matrix>& residual_cov) {
  if (residual_cov.rows() != fit.betas.size() || residual_cov.cols() != fit.betas.size())
    throw std::invalid_argument("factor_reassemble: dimension mismatch");
  Matrix c = fit.betas * fit.betas.transpose() * fit.factor_variance + residual_cov;
  return (c + c.transpose()) / 2.0;
}

Vector market_factor(const ReturnPanel& panel) {
  Vector f = Vector::Zero(panel.days());
  for (Index i = 0; i < panel.days(); ++i) {
    double sum = 0.0;
    Index count = 0;
    for (Index j = 0; j < panel.assets(); ++j) {
      const double v = panel.returns(i, j);
      if (is_missing(v)) continue;
      sum += v;
      ++count;
    }
    if (count > 0) f(i) = sum / static_cast<double>(count);
  }
  return f;
}

}  // namespace covfilt
