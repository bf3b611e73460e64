#include "covfilt/dcc.hpp"

#include "covfilt/nelder_mead.hpp"

#include <stdexcept>

namespace covfilt {
namespace {

constexpr double kPersistenceCap = 0.9999;
constexpr double kLikelihoodTol = 1e-6;
constexpr int kMaxEvals = 4000;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

// (x1, x2) -> (first, second) with first, second >= 0 and first + second < 1.
std::pair<double, double> to_simplex(const Vector& x) {
  const double total = kPersistenceCap * logistic(x(0));
  const double first = total * logistic(x(1));
  return {first, total - first};
}

Vector from_simplex(double first, double second) {
  const double total = first + second;
  Vector x(2);
  x << logit(total / kPersistenceCap), logit(first / total);
  return x;
}

double garch_nll(const Vector& r, double var, double a, double b, Vector* variance) {
  const double omega = var * (1.0 - a - b);
  double s2 = var;
  double nll = 0.0;
  for (Index t = 0; t < r.size(); ++t) {
    if (t > 0) s2 = omega + a * r(t - 1) * r(t - 1) + b * s2;
    if (variance != nullptr) (*variance)(t) = s2;
    nll += 0.5 * (std::log(s2) + r(t) * r(t) / s2);
  }
  return nll;
}

// Negative composite log-likelihood of the correlation recursion over
// contiguous pairs.
double dcc_composite_nll(const Matrix& s, const Matrix& target, double alpha, double beta) {
  const Index t_len = s.rows();
  const double w = 1.0 - alpha - beta;
  double nll = 0.0;
  for (Index i = 0; i + 1 < s.cols(); ++i) {
    const Index j = i + 1;
    const double t11 = target(i, i), t22 = target(j, j), t12 = target(i, j);
    double q11 = t11, q22 = t22, q12 = t12;
    for (Index t = 0; t < t_len; ++t) {
      if (t > 0) {
        const double a = s(t - 1, i), b = s(t - 1, j);
        q11 = w * t11 + alpha * a * a + beta * q11;
        q22 = w * t22 + alpha * b * b + beta * q22;
        q12 = w * t12 + alpha * a * b + beta * q12;
      }
      const double rho = q12 / std::sqrt(q11 * q22);
      const double det = 1.0 - rho * rho;
      if (!(det > 0.0)) return std::numeric_limits<double>::infinity();
      const double x = s(t, i), y = s(t, j);
      nll += 0.5 * (std::log(det) + (x * x + y * y - 2.0 * rho * x * y) / det);
    }
  }
  return nll;
}

Matrix unit_diagonal(const Matrix& q) {
  const Vector d = q.diagonal().cwiseSqrt().cwiseInverse();
  Matrix r = d.asDiagonal() * q * d.asDiagonal();
  r = (r + r.transpose()) / 2.0;
  r.diagonal().setOnes();
  return r;
}

}  // namespace

GarchFit garch_fit(const Eigen::Ref<const Vector>& demeaned) {
  const Vector r = demeaned;
  if (r.size() < 2) throw std::invalid_argument("garch_fit: need at least 2 observations");
  const double var = r.squaredNorm() / static_cast<double>(r.size());
  if (!(var > 0.0)) throw std::invalid_argument("garch_fit: constant series");

  const auto objective = [&](const Vector& x) {
    const auto [a, b] = to_simplex(x);
    return garch_nll(r, var, a, b, nullptr);
  };
  const auto res = detail::nelder_mead(objective, from_simplex(0.05, 0.90), 0.5, kLikelihoodTol, kMaxEvals);
  const auto [a, b] = to_simplex(res.x);

  GarchFit fit;
  fit.params = {var * (1.0 - a - b), a, b};
  fit.variance.resize(r.size());
  fit.neg_log_likelihood = garch_nll(r, var, a, b, &fit.variance);
  const Index last = r.size() - 1;
  fit.next_variance = fit.params.omega + a * r(last) * r(last) + b * fit.variance(last);
  fit.converged = res.converged;
  return fit;
}

DccResult dcc_fit_forecast(const Eigen::Ref<const Matrix>& window, const EigenvalueShrink& shrink) {
  const Index t_len = window.rows();
  const Index n = window.cols();
  if (t_len < kDccMinRows)
    throw std::invalid_argument("dcc_fit_forecast: need at least " + std::to_string(kDccMinRows) +
                                " rows, got " + std::to_string(t_len));
  if (n < 1) throw std::invalid_argument("dcc_fit_forecast: no assets");

  const Matrix r = window.rowwise() - window.colwise().mean();
  DccResult out;
  DccFit& fit = out.fit;
  Matrix s(t_len, n);
  Vector next_sd(n);
  for (Index j = 0; j < n; ++j) {
    const GarchFit g = garch_fit(r.col(j));
    fit.garch.push_back(g.params);
    s.col(j) = r.col(j).cwiseQuotient(g.variance.cwiseSqrt());
    next_sd(j) = std::sqrt(g.next_variance);
  }

  const auto eig = sym_eigen_desc(sample_correlation(s));
  const Vector filtered = shrink(eig.values.cwiseMax(0.0), static_cast<double>(n) / static_cast<double>(t_len));
  fit.target = unit_diagonal(reassemble(eig.vectors, filtered));
  const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(fit.target, Eigen::EigenvaluesOnly).eigenvalues()(0);
  if (!(min_eig > 1e-12)) throw std::invalid_argument("dcc_fit_forecast: singular correlation target");

  if (n > 1) {
    const auto objective = [&](const Vector& x) {
      const auto [alpha, beta] = to_simplex(x);
      return dcc_composite_nll(s, fit.target, alpha, beta);
    };
    const auto res = detail::nelder_mead(objective, from_simplex(0.01, 0.97), 0.5, kLikelihoodTol, kMaxEvals);
    if (res.converged && std::isfinite(res.value)) {
      std::tie(fit.alpha, fit.beta) = to_simplex(res.x);
    } else {
      fit.alpha = 0.01;
      fit.beta = 0.97;
      fit.fallback = true;
    }
  }

  const double w = 1.0 - fit.alpha - fit.beta;
  Matrix q = fit.target;
  for (Index t = 1; t <= t_len; ++t) {
    const Vector prev = s.row(t - 1).transpose();
    q = w * fit.target + fit.alpha * prev * prev.transpose() + fit.beta * q;
  }
  fit.q_terminal = q;
  const Matrix r_next = unit_diagonal(q);

  out.forecast.matrix = next_sd.asDiagonal() * r_next * next_sd.asDiagonal();
  out.forecast.matrix = (out.forecast.matrix + out.forecast.matrix.transpose()) / 2.0;
  out.forecast.method = "dcc";
  out.forecast.window = t_len;
  out.forecast.params["alpha"] = fit.alpha;
  out.forecast.params["beta"] = fit.beta;
  out.forecast.params["fallback"] = fit.fallback ? 1.0 : 0.0;
  return out;
}

}  // namespace covfilt
