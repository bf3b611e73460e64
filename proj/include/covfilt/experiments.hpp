#pragma once

#include "covfilt/backtest.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace covfilt {

enum class Metric { sr, mean, vol, turnover, turnover_drift, gross_lev, n_eff };

inline constexpr std::array<Metric, 7> kMetrics = {Metric::sr,       Metric::mean,           Metric::vol,
                                                   Metric::turnover, Metric::turnover_drift, Metric::gross_lev,
                                                   Metric::n_eff};

/// Column header as printed in reports (SR, MEAN, VOL, Turnover, ...).
std::string_view metric_name(Metric m);
bool higher_is_better(Metric m);
/// NaN for an undefined Sharpe ratio.
double metric_value(const MetricsReport& report, Metric m);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Percentile bootstrap of the mean: `n_boot` resamples with replacement,
/// interval at the (1-level)/2 and (1+level)/2 quantiles (linear interpolation).
Interval bootstrap_ci(std::span<const double> samples, double level, Index n_boot, std::uint64_t seed);

/// Flags the best mean and every method whose interval overlaps the best
/// method's interval. Overlaps are not chained.
std::vector<bool> mark_best(std::span<const double> means, std::span<const Interval> intervals,
                            bool higher_better);

struct ExperimentConfig {
  Index n = 50;
  Index pool = 150;
  Index sims = 200;
  Index first_start = -1;  // start-day sampling range (panel rows), -1 = widest admissible
  Index last_start = -1;
  std::vector<MethodSpec> methods;
  BacktestConfig backtest;  // template; method, n and pool are overridden
  std::uint64_t seed = 0;
  Index n_boot = 1000;
  double level = 0.95;
  unsigned threads = 1;

  void validate() const;
};

struct MethodSummary {
  std::string label;
  std::array<double, 7> mean{};
  std::array<Interval, 7> interval{};
  std::array<bool, 7> flagged{};
};

struct ExperimentReport {
  std::vector<MethodSummary> methods;
  Index simulations = 0;  // kept draws
  Index dropped = 0;      // draws where some method aborted
  std::vector<Index> starts;  // start row of each kept draw
  std::vector<std::vector<MetricsReport>> runs;  // [method][kept draw]
};

/// Paired randomized design: every draw (start day, initial assets) comes from
/// the draw's child seed and is replayed for every method.
ExperimentReport run_randomized_experiment(const ReturnPanel& panel, const ExperimentConfig& cfg);

/// Table-1 layout: method,SR,MEAN,VOL,Turnover,Turnover+drift,GrossLev,N_eff with
/// a trailing * on flagged cells.
void write_report_table(std::ostream& os, const ExperimentReport& report, char delimiter = ',');
std::string report_json(const ExperimentReport& report);

}  // namespace covfilt
