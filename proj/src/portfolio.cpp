#include "covfilt/portfolio.hpp"

#include <numeric>

namespace covfilt {
namespace {

constexpr int kMaxIterations = 10000;

std::vector<Index> default_assets(std::vector<Index> assets, Index n) {
  if (assets.empty()) {
    assets.resize(static_cast<std::size_t>(n));
    std::iota(assets.begin(), assets.end(), Index{0});
  }
  if (static_cast<Index>(assets.size()) != n)
    throw std::invalid_argument("portfolio: asset list length differs from covariance dimension");
  return assets;
}

double checked_scale(const Eigen::Ref<const Matrix>& cov, const char* who) {
  if (cov.rows() != cov.cols() || cov.rows() == 0)
    throw std::invalid_argument(std::string(who) + ": covariance must be square and non-empty");
  if (!cov.allFinite()) throw std::invalid_argument(std::string(who) + ": non-finite covariance");
  return cov.trace() / static_cast<double>(cov.rows());
}

// Orthonormal basis of {x : 1^T x = 0} in R^m.
Matrix budget_null_space(Index m) {
  Eigen::HouseholderQR<Matrix> qr(Matrix::Ones(m, 1));
  const Matrix q = qr.householderQ();
  return q.rightCols(m - 1);
}

}  // namespace

std::string to_string(Side side) { return side == Side::long_only ? "long_only" : "long_short"; }

Side side_from_string(const std::string& name) {
  if (name == "long_only") return Side::long_only;
  if (name == "long_short") return Side::long_short;
  throw std::invalid_argument("unknown side '" + name + "' (long_short | long_only)");
}

WeightVector gmv_long_short(const Eigen::Ref<const Matrix>& cov, std::vector<Index> assets) {
  const double scale = checked_scale(cov, "gmv_long_short");
  const Index n = cov.rows();
  if (!(scale > 0.0))
    throw std::invalid_argument("gmv_long_short: non-positive budget curvature (zero trace)");

  const Matrix sym = (cov + cov.transpose()) / 2.0;
  const double min_eig =
      Eigen::SelfAdjointEigenSolver<Matrix>(sym, Eigen::EigenvaluesOnly).eigenvalues()(0);
  double ridge = 0.0;
  if (!(min_eig > 1e-12 * scale)) {
    double eps = 1e-10;
    while (!(min_eig + eps * scale > 1e-12 * scale)) eps *= 10.0;
    ridge = eps * scale;
  }
  const Matrix repaired = sym + ridge * Matrix::Identity(n, n);
  const Vector x = repaired.llt().solve(Vector::Ones(n));
  const double curvature = x.sum();
  if (!(curvature > 0.0) || !x.allFinite())
    throw std::invalid_argument("gmv_long_short: non-positive budget curvature");

  WeightVector w;
  w.assets = default_assets(std::move(assets), n);
  w.weights = x / curvature;
  w.side = Side::long_short;
  w.ridge = ridge;
  return w;
}

double long_only_kkt_residual(const Eigen::Ref<const Matrix>& cov, const Eigen::Ref<const Vector>& w,
                              double zero_tol) {
  const Vector g = cov * w;
  double mu = 0.0;
  Index held = 0;
  for (Index i = 0; i < w.size(); ++i) {
    if (w(i) > zero_tol) {
      mu += g(i);
      ++held;
    }
  }
  if (held == 0) return std::numeric_limits<double>::infinity();
  mu /= static_cast<double>(held);
  double worst = 0.0;
  for (Index i = 0; i < w.size(); ++i) {
    if (w(i) > zero_tol)
      worst = std::max(worst, std::abs(g(i) - mu));
    else
      worst = std::max(worst, mu - g(i));
    if (w(i) < -zero_tol) worst = std::max(worst, -w(i));
  }
  return worst;
}

WeightVector gmv_long_only(const Eigen::Ref<const Matrix>& cov, std::vector<Index> assets) {
  const double trace_scale = checked_scale(cov, "gmv_long_only");
  const Index n = cov.rows();
  const Matrix c = (cov + cov.transpose()) / 2.0;
  const double scale = trace_scale > 0.0 ? trace_scale : c.cwiseAbs().maxCoeff();

  WeightVector out;
  out.assets = default_assets(std::move(assets), n);
  out.side = Side::long_only;
  Vector w = Vector::Constant(n, 1.0 / static_cast<double>(n));
  if (!(scale > 0.0)) {
    out.weights = w;
    return out;
  }

  const double curv_tol = 1e-12 * scale;
  const double grad_tol = 1e-13 * scale;
  const double release_tol = 1e-12 * scale;
  std::vector<bool> free(static_cast<std::size_t>(n), true);

  // Moves w along d until the first free weight hits zero; that weight leaves
  // the free set.
  const auto ray_to_bound = [&](const std::vector<Index>& f, const Vector& d) {
    double step = std::numeric_limits<double>::infinity();
    Index block = -1;
    for (Index k = 0; k < d.size(); ++k) {
      if (d(k) < 0.0) {
        const double s = -w(f[static_cast<std::size_t>(k)]) / d(k);
        if (s < step) {
          step = s;
          block = k;
        }
      }
    }
    if (block < 0) return;
    for (Index k = 0; k < d.size(); ++k) w(f[static_cast<std::size_t>(k)]) += step * d(k);
    const Index i = f[static_cast<std::size_t>(block)];
    w(i) = 0.0;
    free[static_cast<std::size_t>(i)] = false;
  };

  for (int iter = 0; iter < kMaxIterations; ++iter) {
    std::vector<Index> f;
    for (Index i = 0; i < n; ++i)
      if (free[static_cast<std::size_t>(i)]) f.push_back(i);
    const auto m = static_cast<Index>(f.size());
    const Vector g = c * w;

    bool stationary = true;
    if (m > 1) {
      const Matrix z = budget_null_space(m);
      Matrix c_ff(m, m);
      Vector g_f(m);
      for (Index a = 0; a < m; ++a) {
        g_f(a) = g(f[static_cast<std::size_t>(a)]);
        for (Index b = 0; b < m; ++b) c_ff(a, b) = c(f[static_cast<std::size_t>(a)], f[static_cast<std::size_t>(b)]);
      }
      const Matrix h = z.transpose() * c_ff * z;
      const Vector gr = z.transpose() * g_f;
      Eigen::SelfAdjointEigenSolver<Matrix> es((h + h.transpose()) / 2.0);
      const Vector& lam = es.eigenvalues();
      const Matrix& u = es.eigenvectors();

      Index descent = -1;
      if (lam(0) < -curv_tol) {
        descent = 0;
      } else {
        for (Index k = 0; k < lam.size() && lam(k) <= curv_tol; ++k) {
          if (std::abs(u.col(k).dot(gr)) > grad_tol) {
            descent = k;
            break;
          }
        }
      }
      if (descent >= 0) {
        Vector d = z * u.col(descent);
        if (d.dot(g_f) > 0.0) d = -d;
        ray_to_bound(f, d);
        continue;
      }

      Vector coef = Vector::Zero(lam.size());
      for (Index k = 0; k < lam.size(); ++k)
        if (lam(k) > curv_tol) coef(k) = -u.col(k).dot(gr) / lam(k);
      const Vector p = z * (u * coef);
      if (p.cwiseAbs().maxCoeff() > 1e-13) {
        stationary = false;
        double step = 1.0;
        Index block = -1;
        for (Index k = 0; k < m; ++k) {
          if (p(k) < 0.0) {
            const double s = -w(f[static_cast<std::size_t>(k)]) / p(k);
            if (s < step) {
              step = s;
              block = k;
            }
          }
        }
        for (Index k = 0; k < m; ++k) w(f[static_cast<std::size_t>(k)]) += step * p(k);
        if (block >= 0) {
          const Index i = f[static_cast<std::size_t>(block)];
          w(i) = 0.0;
          free[static_cast<std::size_t>(i)] = false;
        }
      }
    }
    if (!stationary) continue;

    double mu = 0.0;
    for (const Index i : f) mu += g(i);
    mu /= static_cast<double>(m);
    Index release = -1;
    double worst = -release_tol;
    for (Index i = 0; i < n; ++i) {
      if (free[static_cast<std::size_t>(i)]) continue;
      if (g(i) - mu < worst) {
        worst = g(i) - mu;
        release = i;
      }
    }
    if (release < 0) {
      w = w.cwiseMax(0.0);
      out.weights = w / w.sum();
      return out;
    }
    free[static_cast<std::size_t>(release)] = true;
  }
  w = w.cwiseMax(0.0);
  w /= w.sum();
  throw SolverError("gmv_long_only: no KKT point within " + std::to_string(kMaxIterations) + " iterations",
                    w, long_only_kkt_residual(c, w));
}

WeightVector equal_weight(Index n, std::vector<Index> assets) {
  if (n < 1) throw std::invalid_argument("equal_weight: need n >= 1");
  WeightVector w;
  w.assets = default_assets(std::move(assets), n);
  w.weights = Vector::Constant(n, 1.0 / static_cast<double>(n));
  w.side = Side::long_only;
  return w;
}

WeightVector cap_turnover(const WeightVector& target, const WeightVector& drifted, double tau) {
  if (target.assets != drifted.assets || target.size() != drifted.size())
    throw std::invalid_argument("cap_turnover: target and drifted hold different assets");
  if (!(tau >= 0.0)) throw std::invalid_argument("cap_turnover: negative turnover budget");
  const double gap = (target.weights - drifted.weights).cwiseAbs().sum();
  if (gap <= tau) return target;
  const double lambda = tau / gap;
  WeightVector w = target;
  w.weights = lambda * target.weights + (1.0 - lambda) * drifted.weights;
  return w;
}

WeightVector cap_gross_leverage(const WeightVector& target, double cap) {
  if (!(cap >= 1.0)) throw std::invalid_argument("cap_gross_leverage: cap must be >= 1");
  if (target.gross_leverage() <= cap) return target;
  const Vector anchor = Vector::Constant(target.size(), 1.0 / static_cast<double>(target.size()));
  const auto blend = [&](double lambda) { return Vector(lambda * target.weights + (1.0 - lambda) * anchor); };
  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (blend(mid).cwiseAbs().sum() <= cap)
      lo = mid;
    else
      hi = mid;
  }
  WeightVector w = target;
  w.weights = blend(lo);
  return w;
}

}  // namespace covfilt
