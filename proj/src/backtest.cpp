#include "covfilt/backtest.hpp"

#include "covfilt/dcc.hpp"
#include "covfilt/factor.hpp"
#include "covfilt/json_io.hpp"
#include "covfilt/random.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <ostream>
#include <set>

namespace covfilt {
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return s;
}

bool strip_prefix(std::string& s, std::string_view prefix) {
  if (s.rfind(prefix, 0) != 0) return false;
  s.erase(0, prefix.size());
  return true;
}

bool strip_suffix(std::string& s, std::string_view suffix) {
  if (s.size() < suffix.size() || s.compare(s.size() - suffix.size(), suffix.size(), suffix) != 0)
    return false;
  s.erase(s.size() - suffix.size());
  return true;
}

std::string format_fixed(double v) {
  if (!std::isfinite(v)) return "nan";
  return format_number(v);
}

}  // namespace

MethodSpec parse_method(const std::string& label) {
  MethodSpec spec;
  spec.label = label;
  std::string s = lower(label);
  if (strip_suffix(s, "-1f") || strip_prefix(s, "1afm-") || strip_prefix(s, "afm1-")) spec.single_factor = true;

  std::size_t digits = s.size();
  while (digits > 0 && std::isdigit(static_cast<unsigned char>(s[digits - 1]))) --digits;
  if (digits < s.size()) {
    spec.delta_t_in = std::stol(s.substr(digits));
    s.erase(digits);
    strip_suffix(s, "-");
  }

  if (s == "eq" || s == "equal") {
    spec.estimator = Estimator::equal_weight;
  } else if (s == "notfilt" || s == "sample") {
    spec.estimator = Estimator::sample;
  } else if (s == "nls" || s == "qis" || s == "quest") {
    spec.estimator = Estimator::nls;
    spec.variant = s;
  } else if (s == "ao") {
    spec.estimator = Estimator::average_oracle;
  } else if (s == "dcc" || s == "dcc-qis" || s == "dcc-quest" || s == "dcc-nls") {
    spec.estimator = Estimator::dcc;
    spec.variant = s == "dcc" ? "nls" : s.substr(4);
  } else if (s == "dcc-notfilt" || s == "dcc-sample") {
    spec.estimator = Estimator::dcc;
    spec.variant = "sample";
  } else {
    throw std::invalid_argument("unknown method '" + label + "'");
  }
  if (spec.estimator == Estimator::equal_weight && spec.single_factor)
    throw std::invalid_argument("method '" + label + "': EQ takes no factor");
  return spec;
}

void BacktestConfig::validate() const {
  if (delta_t_out < 1) throw std::invalid_argument("backtest: delta_t_out must be >= 1");
  if (delta_t_in < 2 || estimation_window() < 2) throw std::invalid_argument("backtest: delta_t_in must be >= 2");
  if (!(cost_rate >= 0.0)) throw std::invalid_argument("backtest: cost_rate must be >= 0");
  if (universe_refresh < 1 || universe_refresh % delta_t_out != 0)
    throw std::invalid_argument("backtest: universe_refresh must be a positive multiple of delta_t_out");
  if (horizon < 1) throw std::invalid_argument("backtest: horizon must be >= 1");
  if (n < 1 || pool < n) throw std::invalid_argument("backtest: need 1 <= n <= pool");
  if (method.estimator == Estimator::average_oracle && !method.profile)
    throw std::invalid_argument("backtest: method " + method.label + " needs an AO profile");
  if (caps.turnover && !(*caps.turnover >= 0.0)) throw std::invalid_argument("backtest: negative turnover cap");
  if (caps.gross_leverage && !(*caps.gross_leverage >= 1.0))
    throw std::invalid_argument("backtest: gross leverage cap must be >= 1");
}

WeightVector drift_weights(const WeightVector& w, const Eigen::Ref<const Vector>& r) {
  if (r.size() != w.size()) throw std::invalid_argument("drift_weights: return vector size mismatch");
  const double growth = 1.0 + w.weights.dot(r);
  if (!(growth > 0.0)) throw std::runtime_error("drift_weights: portfolio bankrupt");
  WeightVector out = w;
  out.weights = w.weights.cwiseProduct((Vector::Ones(r.size()) + r)) / growth;
  return out;
}

double effective_assets(const Eigen::Ref<const Vector>& w) {
  const double gross = w.cwiseAbs().sum();
  if (!(gross > 0.0)) return 0.0;
  return 1.0 / (w.cwiseAbs() / gross).squaredNorm();
}

CovEstimate estimate_covariance(const MethodSpec& method, const Eigen::Ref<const Matrix>& window,
                                const Vector* factor) {
  const auto plain = [&](const Eigen::Ref<const Matrix>& x) -> CovEstimate {
    switch (method.estimator) {
      case Estimator::sample:
        return sample_cov(x);
      case Estimator::nls:
        return nls_cov(x, method.variant.empty() ? "nls" : method.variant);
      case Estimator::average_oracle:
        if (!method.profile) throw std::invalid_argument(method.label + ": no AO profile");
        return ao_apply(x, *method.profile);
      case Estimator::dcc: {
        const bool raw = method.variant == "sample";
        auto res = dcc_fit_forecast(x, raw ? EigenvalueShrink(identity_shrink) : EigenvalueShrink(nls_shrink));
        res.forecast.method = "dcc-" + (method.variant.empty() ? std::string("nls") : method.variant);
        return std::move(res.forecast);
      }
      case Estimator::equal_weight:
        break;
    }
    throw std::invalid_argument(method.label + ": method has no covariance estimate");
  };
  if (!method.single_factor) return plain(window);
  if (factor == nullptr) throw std::invalid_argument(method.label + ": factor series missing");
  const FactorFit fit = factor_residualize(window, *factor);
  CovEstimate est = plain(fit.residuals);
  est.matrix = factor_reassemble(fit, est.matrix);
  est.method += "-1f";
  est.params["factor_variance"] = fit.factor_variance;
  return est;
}

BacktestResult run_backtest(const ReturnPanel& panel, const BacktestConfig& cfg, Index start,
                            const std::optional<std::vector<Index>>& initial_assets) {
  cfg.validate();
  const Index lookback = std::max(cfg.delta_t_in, cfg.estimation_window());
  if (start - lookback + 1 < 0 || start + cfg.horizon >= panel.days())
    throw std::invalid_argument("run_backtest: panel does not cover [start - delta_t_in, start + horizon]");

  const MethodSpec& method = cfg.method;
  std::shared_ptr<const Vector> factor = cfg.factor;
  if (method.single_factor && !factor) factor = std::make_shared<const Vector>(market_factor(panel));

  const Index end = start + cfg.horizon;
  const auto universe_at = [&](Index day) {
    const Index out = std::min(cfg.universe_refresh, end - day);
    return select_universe(panel, day, cfg.delta_t_in, out, cfg.pool, cfg.filter);
  };

  std::vector<Index> ids;
  if (initial_assets) {
    ids = *initial_assets;
    if (static_cast<Index>(ids.size()) != cfg.n)
      throw std::invalid_argument("run_backtest: initial asset list has the wrong size");
  } else {
    const auto snap = universe_at(start);
    if (static_cast<Index>(snap.eligible.size()) < cfg.n)
      throw std::runtime_error("run_backtest: only " + std::to_string(snap.eligible.size()) +
                               " eligible assets at " + panel.dates[static_cast<std::size_t>(start)]);
    ids = sample_universe(snap, cfg.n, child_seed(cfg.seed, 0));
  }

  BacktestResult result;
  std::map<Index, double> held;         // drifted weights by panel column
  std::map<Index, double> prev_target;  // last target by panel column
  WeightVector current;
  double pending_cost = 0.0;
  Index rebalance = 0;

  for (Index day = start; day < end; day += cfg.delta_t_out, ++rebalance) {
    const Index offset = day - start;
    if (offset > 0 && offset % cfg.universe_refresh == 0) {
      const auto snap = universe_at(day);
      const std::set<Index> eligible(snap.eligible.begin(), snap.eligible.end());
      std::vector<Index> pool;
      const std::set<Index> mine(ids.begin(), ids.end());
      for (const Index e : snap.eligible)
        if (!mine.count(e)) pool.push_back(e);
      Rng rng(child_seed(cfg.seed, static_cast<std::uint64_t>(offset)));
      for (auto& id : ids) {
        if (eligible.count(id)) continue;
        if (pool.empty())
          throw std::runtime_error("run_backtest: substitution pool empty on " +
                                   panel.dates[static_cast<std::size_t>(day)]);
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        const std::size_t k = pick(rng);
        id = pool[k];
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(k));
      }
    }

    WeightVector target;
    try {
      if (method.estimator == Estimator::equal_weight) {
        target = equal_weight(cfg.n, ids);
      } else {
        const Index window = cfg.estimation_window();
        const Matrix x = window_returns(panel, day, window, ids);
        Vector f;
        if (factor) f = factor->segment(day - window + 1, window);
        const CovEstimate est = estimate_covariance(method, x, factor ? &f : nullptr);
        target = cfg.side == Side::long_only ? gmv_long_only(est.matrix, ids) : gmv_long_short(est.matrix, ids);
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("run_backtest: " + method.label + " failed on " +
                               panel.dates[static_cast<std::size_t>(day)] + ": " + e.what());
    }

    const bool initial = rebalance == 0;
    if (!initial) {
      // Holdings that left the universe are sold; the caps only act on the rest.
      WeightVector anchor = target;
      double exited = 0.0;
      const std::set<Index> mine(ids.begin(), ids.end());
      for (const auto& [id, w] : held)
        if (!mine.count(id)) exited += w;
      for (Index k = 0; k < anchor.size(); ++k) {
        const auto it = held.find(ids[static_cast<std::size_t>(k)]);
        anchor.weights(k) = (it == held.end() ? 0.0 : it->second) + exited * target.weights(k);
      }
      if (cfg.caps.turnover) target = cap_turnover(target, anchor, *cfg.caps.turnover);
    }
    if (cfg.caps.gross_leverage) target = cap_gross_leverage(target, *cfg.caps.gross_leverage);

    std::map<Index, double> next;
    for (Index k = 0; k < target.size(); ++k) next[ids[static_cast<std::size_t>(k)]] = target.weights(k);
    const auto l1 = [](const std::map<Index, double>& a, const std::map<Index, double>& b) {
      double sum = 0.0;
      for (const auto& [id, w] : a) {
        const auto it = b.find(id);
        sum += std::abs(w - (it == b.end() ? 0.0 : it->second));
      }
      for (const auto& [id, w] : b)
        if (!a.count(id)) sum += std::abs(w);
      return sum;
    };

    LedgerRow row;
    row.day = day;
    row.date = panel.dates[static_cast<std::size_t>(day)];
    row.method = method.label;
    row.turnover = l1(next, prev_target);
    row.turnover_drift = l1(next, held);
    row.cost = initial ? 0.0 : cfg.cost_rate * row.turnover_drift;
    row.gross_lev = target.gross_leverage();
    row.n_eff = effective_assets(target.weights);
    row.initial = initial;
    result.ledger.push_back(row);
    result.targets.push_back(target);
    pending_cost = row.cost;
    prev_target = next;
    current = target;

    const Index period_end = std::min(day + cfg.delta_t_out, end);
    for (Index t = day + 1; t <= period_end; ++t) {
      Vector r(cfg.n);
      for (Index k = 0; k < cfg.n; ++k) {
        const double v = panel.returns(t, ids[static_cast<std::size_t>(k)]);
        r(k) = is_missing(v) ? 0.0 : v;
      }
      const double gross = current.weights.dot(r);
      result.days.push_back(t);
      result.net_returns.push_back(gross - pending_cost);
      pending_cost = 0.0;
      current = drift_weights(current, r);
    }
    held.clear();
    for (Index k = 0; k < current.size(); ++k) held[ids[static_cast<std::size_t>(k)]] = current.weights(k);
  }

  for (const double r : result.net_returns) result.final_wealth *= 1.0 + r;
  result.metrics = compute_metrics(result.net_returns, result.ledger);
  return result;
}

MetricsReport compute_metrics(const std::vector<double>& daily, const std::vector<LedgerRow>& ledger) {
  if (daily.size() < 2) throw std::invalid_argument("compute_metrics: need at least 2 daily returns");
  if (ledger.empty()) throw std::invalid_argument("compute_metrics: need at least 1 rebalance");
  const Eigen::Map<const Vector> x(daily.data(), static_cast<Index>(daily.size()));
  const double mean = x.mean();
  const double sd = std::sqrt((x.array() - mean).square().mean());

  MetricsReport m;
  m.mean = kTradingDaysPerYear * mean;
  m.vol = std::sqrt(kTradingDaysPerYear) * sd;
  if (m.vol > 1e-12) m.sr = m.mean / m.vol;

  double turnover = 0.0, drift = 0.0, gross = 0.0, neff = 0.0;
  Index moves = 0;
  for (const auto& row : ledger) {
    gross += row.gross_lev;
    neff += row.n_eff;
    if (row.initial) continue;
    turnover += row.turnover;
    drift += row.turnover_drift;
    ++moves;
  }
  if (moves > 0) {
    m.turnover = turnover / static_cast<double>(moves);
    m.turnover_drift = drift / static_cast<double>(moves);
  }
  m.gross_lev = gross / static_cast<double>(ledger.size());
  m.n_eff = neff / static_cast<double>(ledger.size());
  return m;
}

void write_ledger(std::ostream& os, const std::vector<LedgerRow>& ledger, char d) {
  os << "date" << d << "method" << d << "turnover" << d << "turnover_drift" << d << "cost" << d << "gross_lev"
     << d << "n_eff\n";
  for (const auto& r : ledger) {
    os << r.date << d << r.method << d << format_fixed(r.turnover) << d << format_fixed(r.turnover_drift) << d
       << format_fixed(r.cost) << d << format_fixed(r.gross_lev) << d << format_fixed(r.n_eff) << '\n';
  }
}

void write_daily(std::ostream& os, const ReturnPanel& panel, const BacktestResult& result, char d) {
  os << "date" << d << "net_return\n";
  for (std::size_t k = 0; k < result.days.size(); ++k)
    os << panel.dates[static_cast<std::size_t>(result.days[k])] << d << format_fixed(result.net_returns[k]) << '\n';
}

}  // namespace covfilt
