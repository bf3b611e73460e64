#pragma once

#include "covfilt/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace covfilt::detail {

struct SimplexResult {
  Vector x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

/// Nelder-Mead minimization. Stops when the spread of simplex values falls
/// below `ftol` (absolute) or after `max_evals` evaluations.
inline SimplexResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& start,
                                 double step, double ftol, int max_evals) {
  const Index d = start.size();
  std::vector<Vector> pts(static_cast<std::size_t>(d + 1), start);
  std::vector<double> val(static_cast<std::size_t>(d + 1));
  for (Index k = 0; k < d; ++k) pts[static_cast<std::size_t>(k + 1)](k) += step;
  SimplexResult res;
  auto eval = [&](const Vector& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  for (std::size_t k = 0; k < pts.size(); ++k) val[k] = eval(pts[k]);

  std::vector<std::size_t> idx(pts.size());
  while (true) {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return val[a] < val[b]; });
    const std::size_t best = idx.front();
    const std::size_t worst = idx.back();
    const std::size_t second = idx[idx.size() - 2];
    if (std::abs(val[worst] - val[best]) <= ftol) {
      res.converged = true;
      break;
    }
    if (res.evaluations >= max_evals) break;

    Vector centroid = Vector::Zero(d);
    for (std::size_t k = 0; k < pts.size(); ++k)
      if (k != worst) centroid += pts[k];
    centroid /= static_cast<double>(d);

    const Vector reflected = centroid + (centroid - pts[worst]);
    const double fr = eval(reflected);
    if (fr < val[best]) {
      const Vector expanded = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = eval(expanded);
      if (fe < fr) {
        pts[worst] = expanded;
        val[worst] = fe;
      } else {
        pts[worst] = reflected;
        val[worst] = fr;
      }
      continue;
    }
    if (fr < val[second]) {
      pts[worst] = reflected;
      val[worst] = fr;
      continue;
    }
    const bool outside = fr < val[worst];
    const Vector contracted = outside ? Vector(centroid + 0.5 * (reflected - centroid))
                                      : Vector(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = eval(contracted);
    if (fc < std::min(fr, val[worst])) {
      pts[worst] = contracted;
      val[worst] = fc;
      continue;
    }
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (k == best) continue;
      pts[k] = pts[best] + 0.5 * (pts[k] - pts[best]);
      val[k] = eval(pts[k]);
    }
  }
  const auto it = std::min_element(val.begin(), val.end());
  res.x = pts[static_cast<std::size_t>(it - val.begin())];
  res.value = *it;
  return res;
}

}  // namespace covfilt::detail
