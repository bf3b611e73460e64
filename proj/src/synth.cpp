#include "covfilt/synth.hpp"

#include "covfilt/random.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace covfilt {
namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("synth_market: ") + what);
}

}  // namespace

void SynthSpec::validate(Index n_assets) const {
  require(n_assets >= 1, "need n_assets >= 1");
  require(regimes >= 1, "need regimes >= 1");
  require(mean_regime_days >= 1.0, "mean_regime_days must be >= 1");
  require(start_cap_low > 0.0 && start_cap_high >= start_cap_low, "bad starting cap range");
  if (!covariances.empty()) {
    for (const auto& c : covariances) {
      require(c.rows() == n_assets && c.cols() == n_assets, "explicit covariance has the wrong shape");
      require(c.allFinite() && asymmetry(c) <= 1e-12,
              "explicit covariance is not symmetric");
      const double scale = std::max(c.trace() / static_cast<double>(n_assets), 1e-300);
      const double low = Eigen::SelfAdjointEigenSolver<Matrix>(c, Eigen::EigenvaluesOnly).eigenvalues()(0);
      require(low >= -1e-10 * scale, "explicit covariance is not positive semidefinite");
    }
    return;
  }
  require(factor_vol.size() == loading_mean.size() && factor_vol.size() == loading_sd.size(),
          "factor_vol, loading_mean and loading_sd differ in length");
  for (const double v : factor_vol) require(v >= 0.0, "negative factor volatility");
  for (const double v : loading_sd) require(v >= 0.0, "negative loading sd");
  require(idio_vol_low >= 0.0 && idio_vol_high >= idio_vol_low, "bad idiosyncratic vol range");
  require(loading_persistence >= 0.0 && loading_persistence <= 1.0, "loading_persistence outside [0, 1]");
  require(vol_scale.empty() || static_cast<Index>(vol_scale.size()) == regimes,
          "vol_scale needs one entry per regime");
  for (const double v : vol_scale) require(v >= 0.0, "negative vol_scale");
}

std::vector<std::string> weekday_dates(Index count) {
  using namespace std::chrono;
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(count));
  sys_days day = sys_days{year{2000} / January / 3};
  while (static_cast<Index>(out.size()) < count) {
    const weekday wd{day};
    if (wd != Saturday && wd != Sunday) {
      const year_month_day ymd{day};
      char buf[24];
      std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                    static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
      out.emplace_back(buf);
    }
    day += days{1};
  }
  return out;
}

SynthMarket synth_market(const SynthSpec& spec, Index days, Index n_assets, std::uint64_t seed) {
  require(days >= 1, "need days >= 1");
  spec.validate(n_assets);
  SynthMarket m;

  // Separate streams: structure, regime path, returns, caps.
  Rng structure(child_seed(seed, 0));
  Rng path(child_seed(seed, 1));
  Rng noise(child_seed(seed, 2));
  Rng caps_rng(child_seed(seed, 3));

  const bool explicit_states = !spec.covariances.empty();
  const Index regimes = explicit_states ? static_cast<Index>(spec.covariances.size()) : spec.regimes;
  if (explicit_states) {
    m.covariances = spec.covariances;
  } else {
    const auto k = static_cast<Index>(spec.factor_vol.size());
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> idio(spec.idio_vol_low, spec.idio_vol_high);
    Matrix base(n_assets, k);
    for (Index i = 0; i < n_assets; ++i)
      for (Index f = 0; f < k; ++f) base(i, f) = spec.loading_mean[f] + spec.loading_sd[f] * gauss(structure);
    Vector idio_var(n_assets);
    for (Index i = 0; i < n_assets; ++i) idio_var(i) = std::pow(idio(structure), 2);
    const double rho = spec.loading_persistence;
    for (Index r = 0; r < regimes; ++r) {
      Matrix b = base;
      if (r > 0) {
        for (Index i = 0; i < n_assets; ++i)
          for (Index f = 0; f < k; ++f) {
            // same marginal law as the base draw, correlation rho with it
            const double mu = spec.loading_mean[f];
            const double fresh = spec.loading_sd[f] * gauss(structure);
            b(i, f) = mu + rho * (base(i, f) - mu) + std::sqrt(1.0 - rho * rho) * fresh;
          }
      }
      const double scale = spec.vol_scale.empty() ? 1.0 : spec.vol_scale[static_cast<std::size_t>(r)];
      Vector fvar(k);
      for (Index f = 0; f < k; ++f) fvar(f) = std::pow(scale * spec.factor_vol[f], 2);
      Matrix c = b * fvar.asDiagonal() * b.transpose();
      c.diagonal() += idio_var;
      m.covariances.push_back((c + c.transpose()) / 2.0);
    }
  }

  m.state.resize(static_cast<std::size_t>(days));
  {
    const double p_switch = regimes > 1 ? 1.0 / spec.mean_regime_days : 0.0;
    std::bernoulli_distribution switch_now(p_switch);
    std::uniform_int_distribution<Index> other(1, std::max<Index>(1, regimes - 1));
    Index s = 0;
    for (Index t = 0; t < days; ++t) {
      if (t > 0 && regimes > 1 && switch_now(path)) s = (s + other(path)) % regimes;
      m.state[static_cast<std::size_t>(t)] = s;
    }
  }

  // Factor per regime via symmetric square root, so rank-deficient states work.
  std::vector<Matrix> roots;
  for (const auto& c : m.covariances) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(c);
    roots.push_back(es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                    es.eigenvectors().transpose());
  }
  m.drift = Vector::Constant(n_assets, spec.drift);
  const Matrix z = standard_normal(days, n_assets, noise);

  m.panel.dates = weekday_dates(days);
  m.panel.asset_ids.reserve(static_cast<std::size_t>(n_assets));
  for (Index i = 0; i < n_assets; ++i) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "S%04lld", static_cast<long long>(i + 1));
    m.panel.asset_ids.emplace_back(buf);
  }
  m.panel.returns.resize(days, n_assets);
  for (Index t = 0; t < days; ++t) {
    const Matrix& root = roots[static_cast<std::size_t>(m.state[static_cast<std::size_t>(t)])];
    m.panel.returns.row(t) = (root * z.row(t).transpose() + m.drift).transpose().cwiseMax(-0.99);
  }

  std::uniform_real_distribution<double> log_cap(std::log(spec.start_cap_low), std::log(spec.start_cap_high));
  m.panel.caps.resize(days, n_assets);
  for (Index i = 0; i < n_assets; ++i) {
    double cap = std::exp(log_cap(caps_rng));
    for (Index t = 0; t < days; ++t) {
      cap *= 1.0 + m.panel.returns(t, i);
      m.panel.caps(t, i) = cap;
    }
  }
  return m;
}

}  // namespace covfilt
