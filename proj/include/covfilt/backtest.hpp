#pragma once

#include "covfilt/average_oracle.hpp"
#include "covfilt/panel.hpp"
#include "covfilt/portfolio.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace covfilt {

enum class Estimator { sample, nls, average_oracle, dcc, equal_weight };

/// One covariance filtering method as it enters a backtest.
struct MethodSpec {
  std::string label;
  Estimator estimator = Estimator::sample;
  std::string variant;          // tag recorded on the estimate (qis, quest, nls, ...)
  bool single_factor = false;   // estimate on market-factor residuals, add the factor back
  Index delta_t_in = 0;         // estimation window; 0 = the backtest's delta_t_in
  std::shared_ptr<const AOProfile> profile;  // required for average_oracle
};

/// Parses labels such as NotFilt240, QIS1200, QuEST240, AO1200, DCC-QIS,
/// DCC-QuEST-1F, 1AFM-DCC-QIS, EQ (case-insensitive). Trailing digits set
/// the estimation window.
MethodSpec parse_method(const std::string& label);

struct CapSpec {
  std::optional<double> turnover;        // L1 budget per rebalance
  std::optional<double> gross_leverage;  // bound on sum |w|
};

struct BacktestConfig {
  Index delta_t_in = 240;
  Index delta_t_out = 5;        // rebalancing interval
  Index universe_refresh = 240;
  Index horizon = 240;          // days simulated after the start day
  Index n = 50;                 // portfolio size
  Index pool = 150;             // eligible pool size N
  double cost_rate = 5e-4;      // per unit of L1 traded
  Side side = Side::long_short;
  MethodSpec method;
  CapSpec caps;
  std::uint64_t seed = 0;
  UniverseFilter filter;
  std::shared_ptr<const Vector> factor;  // per panel day; market_factor(panel) when null

  /// Throws std::invalid_argument on a broken invariant.
  void validate() const;
  Index estimation_window() const { return method.delta_t_in > 0 ? method.delta_t_in : delta_t_in; }
};

struct MetricsReport {
  std::optional<double> sr;  // empty when VOL is zero
  double mean = 0.0;         // annualized (x240)
  double vol = 0.0;          // annualized (x sqrt 240), population std
  double turnover = 0.0;     // mean per rebalance, between consecutive targets
  double turnover_drift = 0.0;  // mean per rebalance, target vs drifted holdings
  double gross_lev = 0.0;
  double n_eff = 0.0;
};

struct LedgerRow {
  Index day = 0;
  std::string date;
  std::string method;
  double turnover = 0.0;
  double turnover_drift = 0.0;
  double cost = 0.0;
  double gross_lev = 0.0;
  double n_eff = 0.0;
  bool initial = false;  // portfolio set up from cash; free and excluded from turnover means
};

struct BacktestResult {
  std::vector<Index> days;          // panel rows of the daily series
  std::vector<double> net_returns;  // gross portfolio return minus cost
  std::vector<LedgerRow> ledger;
  std::vector<WeightVector> targets;
  MetricsReport metrics;
  double final_wealth = 1.0;
};

inline constexpr double kTradingDaysPerYear = 240.0;

/// w'_i = w_i (1 + r_i) / (1 + w^T r). Throws when 1 + w^T r <= 0.
WeightVector drift_weights(const WeightVector& w, const Eigen::Ref<const Vector>& r);

/// Inverse Herfindahl of normalized absolute weights.
double effective_assets(const Eigen::Ref<const Vector>& w);

/// Covariance of `window` (rows x assets) for a method; `factor` is the
/// matching factor window when the method uses one.
CovEstimate estimate_covariance(const MethodSpec& method, const Eigen::Ref<const Matrix>& window,
                                const Vector* factor);

/// Rebalancing backtest starting at panel row `start`. The first rebalance
/// trades at the close of `start`; returns accrue from start + 1 through
/// start + horizon. `initial_assets` overrides the seeded draw of the first
/// portfolio.
BacktestResult run_backtest(const ReturnPanel& panel, const BacktestConfig& cfg, Index start,
                            const std::optional<std::vector<Index>>& initial_assets = std::nullopt);

MetricsReport compute_metrics(const std::vector<double>& daily, const std::vector<LedgerRow>& ledger);

void write_ledger(std::ostream& os, const std::vector<LedgerRow>& ledger, char delimiter = ',');
void write_daily(std::ostream& os, const ReturnPanel& panel, const BacktestResult& result, char delimiter = ',');

}  // namespace covfilt
