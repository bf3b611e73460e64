#include "covfilt/experiments.hpp"

#include "covfilt/factor.hpp"
#include "covfilt/json_io.hpp"
#include "covfilt/random.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <thread>

namespace covfilt {
namespace {

constexpr std::uint64_t kBootstrapStream = 0xB007'5712'AB00'0001ULL;

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::size_t metric_slot(Metric m) { return static_cast<std::size_t>(m); }

}  // namespace

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::sr: return "SR";
    case Metric::mean: return "MEAN";
    case Metric::vol: return "VOL";
    case Metric::turnover: return "Turnover";
    case Metric::turnover_drift: return "Turnover+drift";
    case Metric::gross_lev: return "GrossLev";
    case Metric::n_eff: return "N_eff";
  }
  return "?";
}

bool higher_is_better(Metric m) { return m == Metric::sr || m == Metric::mean || m == Metric::n_eff; }

double metric_value(const MetricsReport& r, Metric m) {
  switch (m) {
    case Metric::sr: return r.sr.value_or(std::numeric_limits<double>::quiet_NaN());
    case Metric::mean: return r.mean;
    case Metric::vol: return r.vol;
    case Metric::turnover: return r.turnover;
    case Metric::turnover_drift: return r.turnover_drift;
    case Metric::gross_lev: return r.gross_lev;
    case Metric::n_eff: return r.n_eff;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

Interval bootstrap_ci(std::span<const double> samples, double level, Index n_boot, std::uint64_t seed) {
  if (samples.size() < 2) throw std::invalid_argument("bootstrap_ci: need at least 2 samples");
  if (n_boot < 100) throw std::invalid_argument("bootstrap_ci: need n_boot >= 100");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("bootstrap_ci: level must lie in (0, 1)");
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  if (*lo_it == *hi_it) return {*lo_it, *lo_it};

  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
  std::vector<double> means(static_cast<std::size_t>(n_boot));
  for (auto& m : means) {
    double sum = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k) sum += samples[pick(rng)];
    m = sum / static_cast<double>(samples.size());
  }
  std::sort(means.begin(), means.end());
  const double tail = (1.0 - level) / 2.0;
  return {quantile_sorted(means, tail), quantile_sorted(means, 1.0 - tail)};
}

std::vector<bool> mark_best(std::span<const double> means, std::span<const Interval> intervals,
                            bool higher_better) {
  if (means.size() != intervals.size()) throw std::invalid_argument("mark_best: size mismatch");
  std::vector<bool> flags(means.size(), false);
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < means.size(); ++k) {
    if (std::isnan(means[k])) continue;
    if (!best || (higher_better ? means[k] > means[*best] : means[k] < means[*best])) best = k;
  }
  if (!best) return flags;
  const Interval& b = intervals[*best];
  for (std::size_t k = 0; k < means.size(); ++k) {
    if (std::isnan(means[k])) continue;
    const Interval& i = intervals[k];
    flags[k] = k == *best || (i.low <= b.high && b.low <= i.high);
  }
  return flags;
}

void ExperimentConfig::validate() const {
  if (n < 1 || pool < n) throw std::invalid_argument("experiment: need 1 <= n <= pool");
  if (sims < 1) throw std::invalid_argument("experiment: need sims >= 1");
  if (methods.empty()) throw std::invalid_argument("experiment: no methods");
  if (n_boot < 100) throw std::invalid_argument("experiment: n_boot must be >= 100");
}

ExperimentReport run_randomized_experiment(const ReturnPanel& panel, const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<BacktestConfig> configs;
  Index lookback = cfg.backtest.delta_t_in;
  bool needs_factor = false;
  for (const auto& m : cfg.methods) {
    BacktestConfig c = cfg.backtest;
    c.method = m;
    c.n = cfg.n;
    c.pool = cfg.pool;
    c.validate();
    lookback = std::max(lookback, c.estimation_window());
    needs_factor = needs_factor || m.single_factor;
    configs.push_back(std::move(c));
  }
  if (needs_factor && !cfg.backtest.factor) {
    const auto factor = std::make_shared<const Vector>(market_factor(panel));
    for (auto& c : configs) c.factor = factor;
  }

  const Index horizon = cfg.backtest.horizon;
  Index first = lookback - 1;
  Index last = panel.days() - 1 - horizon;
  if (cfg.first_start >= 0) first = std::max(first, cfg.first_start);
  if (cfg.last_start >= 0) last = std::min(last, cfg.last_start);
  if (last < first) throw std::invalid_argument("experiment: panel too short for the start-day range");

  struct Draw {
    Index start = -1;
    std::vector<MetricsReport> metrics;  // per method; empty when dropped
  };
  std::vector<Draw> draws(static_cast<std::size_t>(cfg.sims));

  const auto simulate = [&](Index i) {
    const std::uint64_t seed = child_seed(cfg.seed, static_cast<std::uint64_t>(i));
    Rng rng(seed);
    Draw& d = draws[static_cast<std::size_t>(i)];
    d.start = std::uniform_int_distribution<Index>(first, last)(rng);
    try {
      const Index out = std::min(cfg.backtest.universe_refresh, horizon);
      const auto snap = select_universe(panel, d.start, cfg.backtest.delta_t_in, out, cfg.pool, cfg.backtest.filter);
      if (static_cast<Index>(snap.eligible.size()) < cfg.n) return;
      const auto ids = sample_universe(snap, cfg.n, child_seed(seed, 1));
      std::vector<MetricsReport> metrics;
      for (auto c : configs) {
        c.seed = seed;
        metrics.push_back(run_backtest(panel, c, d.start, ids).metrics);
      }
      d.metrics = std::move(metrics);
    } catch (const std::exception&) {
      d.metrics.clear();
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(cfg.sims)));
  if (workers == 1) {
    for (Index i = 0; i < cfg.sims; ++i) simulate(i);
  } else {
    std::atomic<Index> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (Index i = next++; i < cfg.sims; i = next++) simulate(i);
      });
  }

  ExperimentReport report;
  report.runs.resize(cfg.methods.size());
  for (const auto& d : draws) {
    if (d.metrics.empty()) {
      ++report.dropped;
      continue;
    }
    ++report.simulations;
    report.starts.push_back(d.start);
    for (std::size_t m = 0; m < cfg.methods.size(); ++m) report.runs[m].push_back(d.metrics[m]);
  }
  for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
    MethodSummary s;
    s.label = cfg.methods[m].label;
    for (const Metric metric : kMetrics) {
      std::vector<double> values;
      for (const auto& r : report.runs[m]) {
        const double v = metric_value(r, metric);
        if (!std::isnan(v)) values.push_back(v);
      }
      const std::size_t slot = metric_slot(metric);
      if (values.empty()) {
        s.mean[slot] = std::numeric_limits<double>::quiet_NaN();
        s.interval[slot] = {s.mean[slot], s.mean[slot]};
        continue;
      }
      double sum = 0.0;
      for (const double v : values) sum += v;
      s.mean[slot] = sum / static_cast<double>(values.size());
      if (values.size() < 2) {
        s.interval[slot] = {s.mean[slot], s.mean[slot]};
      } else {
        const std::uint64_t stream = child_seed(cfg.seed ^ kBootstrapStream, m * kMetrics.size() + slot);
        s.interval[slot] = bootstrap_ci(values, cfg.level, cfg.n_boot, stream);
      }
    }
    report.methods.push_back(std::move(s));
  }
  for (const Metric metric : kMetrics) {
    const std::size_t slot = metric_slot(metric);
    std::vector<double> means;
    std::vector<Interval> intervals;
    for (const auto& s : report.methods) {
      means.push_back(s.mean[slot]);
      intervals.push_back(s.interval[slot]);
    }
    const auto flags = mark_best(means, intervals, higher_is_better(metric));
    for (std::size_t m = 0; m < flags.size(); ++m) report.methods[m].flagged[slot] = flags[m];
  }
  return report;
}

void write_report_table(std::ostream& os, const ExperimentReport& report, char d) {
  os << "method";
  for (const Metric m : kMetrics) os << d << metric_name(m);
  os << '\n';
  char buf[32];
  for (const auto& s : report.methods) {
    os << s.label;
    for (const Metric m : kMetrics) {
      const std::size_t slot = metric_slot(m);
      if (std::isnan(s.mean[slot]))
        std::snprintf(buf, sizeof buf, "nan");
      else
        std::snprintf(buf, sizeof buf, "%.3f", s.mean[slot]);
      os << d << buf << (s.flagged[slot] ? "*" : "");
    }
    os << '\n';
  }
}

std::string report_json(const ExperimentReport& report) {
  Json j;
  j["simulations"] = report.simulations;
  j["dropped"] = report.dropped;
  j["starts"] = report.starts;
  Json methods = Json::array();
  for (std::size_t m = 0; m < report.methods.size(); ++m) {
    const auto& s = report.methods[m];
    Json entry;
    entry["label"] = s.label;
    Json metrics;
    for (const Metric metric : kMetrics) {
      const std::size_t slot = metric_slot(metric);
      Json cell;
      cell["mean"] = s.mean[slot];
      cell["ci_low"] = s.interval[slot].low;
      cell["ci_high"] = s.interval[slot].high;
      cell["flagged"] = s.flagged[slot];
      metrics[std::string(metric_name(metric))] = std::move(cell);
    }
    entry["metrics"] = std::move(metrics);
    Json runs = Json::array();
    for (const auto& r : report.runs[m]) {
      Json run;
      for (const Metric metric : kMetrics) run[std::string(metric_name(metric))] = metric_value(r, metric);
      runs.push_back(std::move(run));
    }
    entry["runs"] = std::move(runs);
    methods.push_back(std::move(entry));
  }
  j["methods"] = std::move(methods);
  return dump_json(j);
}

}  // namespace covfilt
