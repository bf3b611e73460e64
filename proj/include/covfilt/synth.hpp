#pragma once

#include "covfilt/panel.hpp"

#include <cstdint>
#include <vector>

namespace covfilt {

/// Gaussian factor market with a piecewise-constant true covariance.
///
/// Each regime r has loadings B_r = mu + rho (B_0 - mu) + sqrt(1 - rho^2) sd z, factor
/// volatilities scaled by vol_scale[r], and diagonal idiosyncratic variance, so
/// C_r = B_r diag(f_r^2) B_r^T + diag(idio^2). Regimes switch at geometric
/// durations with mean `mean_regime_days`. `covariances`, when non-empty,
/// replaces the factor model with explicit states.
struct SynthSpec {
  std::vector<double> factor_vol = {0.010, 0.006, 0.004};  // daily
  std::vector<double> loading_mean = {1.0, 0.0, 0.0};
  std::vector<double> loading_sd = {0.3, 0.5, 0.5};
  double idio_vol_low = 0.010;
  double idio_vol_high = 0.025;
  double drift = 2e-4;  // daily mean return, every asset
  Index regimes = 1;
  double loading_persistence = 0.7;  // rho between regime loadings and the base draw
  std::vector<double> vol_scale;     // per regime factor-vol multiplier; empty = all 1
  double mean_regime_days = 120.0;
  std::vector<Matrix> covariances;  // explicit states; must be PSD and n_assets square
  double start_cap_low = 1.0;       // caps start log-uniform in [low, high]
  double start_cap_high = 100.0;

  /// Throws std::invalid_argument on inconsistent sizes or a non-PSD state.
  void validate(Index n_assets) const;
};

struct SynthMarket {
  ReturnPanel panel;
  std::vector<Index> state;         // regime per day
  std::vector<Matrix> covariances;  // true covariance per regime
  Vector drift;

  const Matrix& true_covariance(Index day) const {
    return covariances[static_cast<std::size_t>(state[static_cast<std::size_t>(day)])];
  }
};

SynthMarket synth_market(const SynthSpec& spec, Index days, Index n_assets, std::uint64_t seed);

/// Consecutive weekdays starting at 2000-01-03, ISO formatted.
std::vector<std::string> weekday_dates(Index count);

}  // namespace covfilt
