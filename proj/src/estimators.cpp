#include "covfilt/estimators.hpp"

#include <numbers>
#include <stdexcept>

namespace covfilt {
namespace {

constexpr double kPi = std::numbers::pi;
const double kSqrt5 = std::sqrt(5.0);

// Hilbert transform, at offset x from its centre, of an Epanechnikov kernel
// with half-support a = sqrt(5) h. Outside 4a the closed form cancels
// catastrophically, so the tail uses its expansion in (a/x)^2:
//   H(x) = -(3/pi) sum_k a^(2k) / ((2k+1)(2k+3) x^(2k+1)).
double epanechnikov_hilbert(double x, double h) {
  const double a = kSqrt5 * h;
  if (std::abs(x) > 4.0 * a) {
    const double r2 = (a / x) * (a / x);
    double term = 1.0 / x;
    double sum = 0.0;
    for (int k = 0; k < 40; ++k) {
      const double add = term / ((2.0 * k + 1.0) * (2.0 * k + 3.0));
      sum += add;
      if (std::abs(add) < 1e-17 * std::abs(sum)) break;
      term *= r2;
    }
    return -3.0 / kPi * sum;
  }
  const double u = x * x / (5.0 * h * h);
  double out = -3.0 * x / (10.0 * kPi * h * h);
  const double ratio = std::abs((a - x) / (a + x));
  if (u != 1.0 && ratio > 0.0 && std::isfinite(ratio))
    out += 3.0 / (4.0 * kSqrt5 * kPi * h) * (1.0 - u) * std::log(ratio);
  return out;
}

}  // namespace

void check_cov_estimate(const CovEstimate& est) {
  const Matrix& c = est.matrix;
  if (c.rows() != c.cols()) throw std::logic_error(est.method + ": covariance not square");
  if (!c.allFinite()) throw std::logic_error(est.method + ": covariance has non-finite entries");
  if (asymmetry(c) > 1e-12) throw std::logic_error(est.method + ": covariance not symmetric");
  const Index n = c.rows();
  if (n == 0) return;
  const double trace = c.trace();
  const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(c, Eigen::EigenvaluesOnly)
                             .eigenvalues()
                             .minCoeff();
  if (min_eig < -1e-10 * std::abs(trace) / static_cast<double>(n))
    throw std::logic_error(est.method + ": covariance not positive semidefinite");
}

Moments column_moments(const Eigen::Ref<const Matrix>& window) {
  const auto t = static_cast<double>(window.rows());
  Moments m;
  m.mean = window.colwise().mean().transpose();
  m.stdev = ((window.rowwise() - m.mean.transpose()).colwise().squaredNorm().transpose() / t)
                .cwiseSqrt();
  return m;
}

Matrix standardize(const Eigen::Ref<const Matrix>& x, const Moments& moments) {
  Matrix z = x.rowwise() - moments.mean.transpose();
  for (Index j = 0; j < z.cols(); ++j)
    if (moments.stdev(j) > 0.0) z.col(j) /= moments.stdev(j);
  return z;
}

CovEstimate sample_cov(const Eigen::Ref<const Matrix>& window) {
  if (window.rows() < 2) throw std::invalid_argument("sample_cov: need at least 2 rows");
  if (window.cols() < 1) throw std::invalid_argument("sample_cov: need at least 1 column");
  const Matrix centered = window.rowwise() - window.colwise().mean();
  Matrix c = centered.transpose() * centered / static_cast<double>(window.rows());
  c = (c + c.transpose()) / 2.0;
  CovEstimate est;
  est.matrix = std::move(c);
  est.method = "sample";
  est.window = window.rows();
  return est;
}

Matrix sample_correlation(const Eigen::Ref<const Matrix>& window) {
  if (window.rows() < 2) throw std::invalid_argument("sample_correlation: need at least 2 rows");
  const Moments m = column_moments(window);
  const Matrix z = standardize(window, m);
  Matrix r = z.transpose() * z / static_cast<double>(window.rows());
  r = (r + r.transpose()) / 2.0;
  for (Index j = 0; j < r.cols(); ++j) {
    if (m.stdev(j) > 0.0) continue;
    r.row(j).setZero();
    r.col(j).setZero();
  }
  r.diagonal().setOnes();
  return r;
}

Vector nonlinear_shrink(const Eigen::Ref<const Vector>& eigs, double concentration) {
  if (!(concentration > 0.0 && concentration < 1.0))
    throw std::invalid_argument("nonlinear_shrink: concentration n/T must lie in (0, 1)");
  const Index p = eigs.size();
  if (p == 0) return {};
  if (eigs.minCoeff() < -1e-10)
    throw std::invalid_argument("nonlinear_shrink: negative eigenvalue");
  const Vector lambda = eigs.cwiseMax(0.0);
  const double c = concentration;
  const double t = static_cast<double>(p) / c;
  const double h = std::pow(t, -1.0 / 3.0);

  Vector shrunk(p);
  for (Index i = 0; i < p; ++i) {
    double f = 0.0;
    double hilbert = 0.0;
    for (Index j = 0; j < p; ++j) {
      const double x = lambda(i) - lambda(j);
      const double hj = lambda(j) * h;
      if (hj == 0.0) {
        if (x != 0.0) hilbert += -1.0 / (kPi * x);
        continue;
      }
      const double u = x * x / (5.0 * hj * hj);
      if (u < 1.0) f += 3.0 / (4.0 * kSqrt5 * hj) * (1.0 - u);
      hilbert += epanechnikov_hilbert(x, hj);
    }
    f /= static_cast<double>(p);
    hilbert /= static_cast<double>(p);
    const double a = kPi * c * lambda(i) * f;
    const double b = 1.0 - c - kPi * c * lambda(i) * hilbert;
    shrunk(i) = lambda(i) / (a * a + b * b);
  }
  const double target = lambda.sum();
  const double total = shrunk.sum();
  if (total > 0.0) shrunk *= target / total;
  return shrunk;
}

CovEstimate nls_cov(const Eigen::Ref<const Matrix>& window, const std::string& variant) {
  CovEstimate est = sample_cov(window);
  const auto n = static_cast<double>(window.cols());
  const auto t = static_cast<double>(window.rows());
  const auto eig = sym_eigen_desc(est.matrix);
  const Vector shrunk = nonlinear_shrink(eig.values.cwiseMax(0.0), n / t);
  est.matrix = reassemble(eig.vectors, shrunk);
  est.method = variant;
  est.params["concentration"] = n / t;
  return est;
}

}  // namespace covfilt
