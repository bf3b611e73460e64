// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any FAIL.
#include "covfilt/average_oracle.hpp"
#include "covfilt/backtest.hpp"
#include "covfilt/cli.hpp"
#include "covfilt/dynmodel.hpp"
#include "covfilt/experiments.hpp"
#include "covfilt/portfolio.hpp"
#include "covfilt/random.hpp"
#include "covfilt/synth.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>

using namespace covfilt;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// 1. cyclic two-state world, AO against the same-state NLS oracle
Outcome cyclic_inequality() {
  const auto t0 = Clock::now();
  SweepConfig cfg;
  cfg.n = 50;
  cfg.states = 2;
  cfg.T = {200};
  cfg.angles = {std::numbers::pi / 8.0};
  cfg.planes = 10;
  cfg.compare.n_slices = 200;
  cfg.seed = 1;
  const auto res = run_sweep(cfg);
  const auto& row = res.rows.front();
  const double secs = seconds_since(t0);
  return {row.ao_loss_mean <= row.nls_loss_mean && row.ao_win_rate >= 0.80 && secs < 60.0,
          fmt("ao_loss=%.4f nls_loss=%.4f win_rate=%.3f time=%.1fs", row.ao_loss_mean, row.nls_loss_mean,
              row.ao_win_rate, secs)};
}

// 2. sticky Markov switching: NLS should win somewhere in the sweep
Outcome persistence_regression() {
  SweepConfig cfg;
  cfg.n = 50;
  cfg.states = 2;
  cfg.T = {100, 200, 400};
  cfg.angles = {std::numbers::pi / 16.0, std::numbers::pi / 8.0, std::numbers::pi / 4.0};
  cfg.planes = 10;
  cfg.stay = 0.95;
  cfg.compare.n_slices = 200;
  cfg.seed = 2;
  const auto res = run_sweep(cfg);
  int nls_wins = 0;
  double best_margin = -std::numeric_limits<double>::infinity();
  for (const auto& r : res.rows) {
    if (r.nls_loss_mean <= r.ao_loss_mean) ++nls_wins;
    best_margin = std::max(best_margin, r.ao_loss_mean - r.nls_loss_mean);
  }
  return {nls_wins > 0, fmt("configs=%zu nls_better=%d max(ao-nls)=%.4f", res.rows.size(), nls_wins, best_margin)};
}

// 3. independence of overlaps and eigenvalues in world-driven estimates
Outcome independence() {
  const auto world = build_cyclic_world(50, 2, {default_spectrum(50)}, spike_planes(10, std::numbers::pi / 8.0),
                                        200, child_seed(3, 0));
  const double gap = independence_check(world, 1000, child_seed(3, 1));
  return {gap < 0.1, fmt("gap=%.5f", gap)};
}

// 4. synthetic regime market: AO trades less and diversifies more than the sample covariance
Outcome synthetic_ordering() {
  const auto t0 = Clock::now();
  SynthSpec spec;
  spec.regimes = 4;
  spec.vol_scale = {1.0, 1.6, 0.8, 2.2};
  // idiosyncratic vols from about 8% to 63% a year, a stock-like spread
  spec.idio_vol_low = 0.005;
  spec.idio_vol_high = 0.04;
  const Index calib_days = 1500;
  const auto market = synth_market(spec, 2700, 200, 4);

  AOCalibrationOptions cal;
  cal.n = 50;
  cal.delta_t_in = 240;
  cal.delta_t_out = 5;
  cal.pairs = 1000;
  cal.pool = 150;
  cal.seed = 41;
  cal.last_anchor = calib_days - 1 - cal.delta_t_out;
  const auto profile = std::make_shared<const AOProfile>(ao_calibrate(market.panel, cal));

  ExperimentConfig ex;
  ex.n = 50;
  ex.pool = 150;
  ex.sims = 200;
  ex.seed = 42;
  ex.first_start = calib_days;
  ex.backtest.delta_t_in = 240;
  ex.backtest.delta_t_out = 5;
  ex.backtest.universe_refresh = 240;
  ex.backtest.horizon = 240;
  ex.backtest.cost_rate = 5e-4;
  auto ao = parse_method("AO240");
  ao.profile = profile;
  ex.methods = {ao, parse_method("NotFilt240")};
  const auto rep = run_randomized_experiment(market.panel, ex);
  const double secs = seconds_since(t0);
  const auto slot = [](Metric m) { return static_cast<std::size_t>(m); };
  const double ao_to = rep.methods[0].mean[slot(Metric::turnover)];
  const double s_to = rep.methods[1].mean[slot(Metric::turnover)];
  const double ao_ne = rep.methods[0].mean[slot(Metric::n_eff)];
  const double s_ne = rep.methods[1].mean[slot(Metric::n_eff)];
  return {ao_to < s_to && ao_ne > s_ne && rep.simulations > 0 && secs < 600.0,
          fmt("sims=%lld dropped=%lld turnover AO=%.3f Sample=%.3f  N_eff AO=%.3f Sample=%.3f time=%.1fs",
              static_cast<long long>(rep.simulations), static_cast<long long>(rep.dropped), ao_to, s_to, ao_ne,
              s_ne, secs)};
}

// 5. nonlinear shrinkage against the sample covariance under identity truth
Outcome shrinkage_sanity() {
  int wins = 0;
  double worst_trace = 0.0;
  const Matrix id = Matrix::Identity(100, 100);
  for (std::uint64_t trial = 0; trial < 200; ++trial) {
    Rng rng(child_seed(5, trial));
    const Matrix x = standard_normal(300, 100, rng);
    const auto s = sample_cov(x);
    const auto n = nls_cov(x);
    if (frobenius_distance(n.matrix, id) < frobenius_distance(s.matrix, id)) ++wins;
    worst_trace = std::max(worst_trace, std::abs(n.matrix.trace() - s.matrix.trace()) / s.matrix.trace());
  }
  return {wins >= 190 && worst_trace <= 1e-9, fmt("wins=%d/200 max_rel_trace_err=%.2e", wins, worst_trace)};
}

// budget-constrained 3-asset minimum by a zooming grid over (w1, w2)
Vector grid_minimum_3(const Matrix& c) {
  Vector centre = Vector::Constant(3, 1.0 / 3.0);
  double half = 20.0;
  const int steps = 50;
  while (half > 1e-10) {
    double best = std::numeric_limits<double>::infinity();
    Vector arg = centre;
    for (int i = -steps; i <= steps; ++i)
      for (int j = -steps; j <= steps; ++j) {
        Vector w(3);
        w(0) = centre(0) + half * i / steps;
        w(1) = centre(1) + half * j / steps;
        w(2) = 1.0 - w(0) - w(1);
        const double v = w.dot(c * w);
        if (v < best) {
          best = v;
          arg = w;
        }
      }
    centre = arg;
    half *= 4.0 / steps;
  }
  return centre;
}

// 6. GMV solvers against a grid oracle and the KKT certificate
Outcome gmv_oracles() {
  Rng rng(6);
  double worst_grid = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Matrix g = standard_normal(5, 3, rng);
    const Matrix c = g.transpose() * g / 5.0 + 0.05 * Matrix::Identity(3, 3);
    worst_grid = std::max(worst_grid, (gmv_long_short(c).weights - grid_minimum_3(c)).cwiseAbs().maxCoeff());
  }
  double worst_kkt = 0.0;
  bool all_ok = true;
  for (int k = 0; k < 100; ++k) {
    const Matrix g = standard_normal(12, 10, rng);
    const Matrix c = g.transpose() * g / 12.0;
    const auto w = gmv_long_only(c);
    const double ratio = long_only_kkt_residual(c, w.weights) / (c.trace() / 10.0);
    worst_kkt = std::max(worst_kkt, ratio);
    all_ok = all_ok && w.weights.minCoeff() >= 0.0 && std::abs(w.weights.sum() - 1.0) < 1e-12;
  }
  return {worst_grid <= 1e-6 && worst_kkt < 1e-8 && all_ok,
          fmt("max_grid_gap=%.2e max_kkt/(trace/n)=%.2e", worst_grid, worst_kkt)};
}

// 7. turnover and gross-leverage caps
Outcome caps() {
  Rng rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_turnover = -1.0, worst_gross = -1.0;
  bool slack_ok = true;
  for (int k = 0; k < 1000; ++k) {
    const Index n = 2 + static_cast<Index>(u(rng) * 20);
    WeightVector t = equal_weight(n), d = equal_weight(n);
    t.weights = standard_normal(n, 1, rng).col(0);
    t.weights /= t.weights.sum();
    d.weights = standard_normal(n, 1, rng).col(0);
    d.weights /= d.weights.sum();
    const double gap = (t.weights - d.weights).cwiseAbs().sum();
    const double tau = u(rng) * 2.0 * gap;
    const auto w = cap_turnover(t, d, tau);
    worst_turnover = std::max(worst_turnover, (w.weights - d.weights).cwiseAbs().sum() - tau);
    if (gap <= tau && w.weights != t.weights) slack_ok = false;
  }
  for (int k = 0; k < 1000; ++k) {
    const Index n = 2 + static_cast<Index>(u(rng) * 20);
    WeightVector t = equal_weight(n);
    t.weights = standard_normal(n, 1, rng).col(0) + Vector::Constant(n, 0.3);
    t.weights /= t.weights.sum();
    // an all-long target has gross leverage 1 only up to rounding
    const double cap = std::max(1.0, 1.0 + u(rng) * 2.0 * (t.gross_leverage() - 1.0));
    const auto w = cap_gross_leverage(t, cap);
    worst_gross = std::max(worst_gross, w.gross_leverage() - cap);
    if (t.gross_leverage() <= cap && w.weights != t.weights) slack_ok = false;
  }
  return {worst_turnover <= 1e-12 && worst_gross <= 1e-9 && slack_ok,
          fmt("max_turnover_excess=%.2e max_gross_excess=%.2e slack_noop=%s", worst_turnover, worst_gross,
              slack_ok ? "yes" : "no")};
}

// 8. single-rebalance, zero-cost wealth against buy-and-hold growth
Outcome accounting() {
  const auto market = synth_market(SynthSpec{}, 400, 40, 8);
  double worst = 0.0;
  for (const std::string label : {"NotFilt", "QIS", "EQ", "DCC-QIS"}) {
    BacktestConfig cfg;
    cfg.delta_t_in = 260;
    cfg.delta_t_out = 20;
    cfg.universe_refresh = 20;
    cfg.horizon = 20;
    cfg.n = 10;
    cfg.pool = 30;
    cfg.cost_rate = 0.0;
    cfg.method = parse_method(label);
    cfg.seed = 81;
    const Index start = 300;
    const auto res = run_backtest(market.panel, cfg, start);
    if (res.targets.size() != 1) return {false, label + ": more than one rebalance"};
    const auto& w = res.targets[0];
    double expected = 0.0;
    for (Index a = 0; a < w.size(); ++a) {
      double growth = 1.0;
      for (Index t = start + 1; t <= start + cfg.horizon; ++t)
        growth *= 1.0 + market.panel.returns(t, w.assets[static_cast<std::size_t>(a)]);
      expected += w.weights(a) * growth;
    }
    worst = std::max(worst, std::abs(res.final_wealth - expected) / std::abs(expected));
  }
  return {worst <= 1e-12, fmt("max_rel_err=%.2e over 4 methods", worst)};
}

// 9. percentile bootstrap coverage
Outcome bootstrap_coverage() {
  int covered = 0;
  const double truth = 0.3;
  for (std::uint64_t r = 0; r < 500; ++r) {
    Rng rng(child_seed(9, r));
    std::normal_distribution<double> z(truth, 1.0);
    std::vector<double> x(200);
    for (auto& v : x) v = z(rng);
    const auto ci = bootstrap_ci(x, 0.95, 1000, child_seed(90, r));
    if (ci.low <= truth && truth <= ci.high) ++covered;
  }
  const double rate = covered / 500.0;
  return {std::abs(rate - 0.95) <= 0.03, fmt("coverage=%.3f", rate)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "covfilt");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) std::cerr << err.str();
  return code;
}

// 10. every command re-run from its manifest reproduces its numeric artifacts byte for byte
Outcome determinism(const fs::path& work) {
  const fs::path root = work / "determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const auto write = [&](const std::string& name, const Json& j) {
    std::ofstream(root / name) << j.dump(2);
    return (root / name).string();
  };

  Json synthetic;
  synthetic["days"] = 700;
  synthetic["assets"] = 60;
  synthetic["seed"] = 10;
  synthetic["regimes"] = 2;

  Json synth;
  synth["synthetic"] = synthetic;
  Json cal;
  cal["panel"]["returns"] = "synth/returns.csv";
  cal["panel"]["caps"] = "synth/caps.csv";
  cal["n"] = 20;
  cal["delta_t_in"] = 120;
  cal["delta_t_out"] = 5;
  cal["pairs"] = 50;
  cal["seed"] = 11;
  Json bt;
  bt["synthetic"] = synthetic;
  bt["method"] = "AO120";
  bt["ao_profile"] = "cal/ao_profile.json";
  bt["start"] = 300;
  bt["n"] = 20;
  bt["pool"] = 40;
  bt["delta_t_in"] = 120;
  bt["universe_refresh"] = 60;
  bt["horizon"] = 120;
  bt["caps"]["turnover"] = 0.5;
  bt["seed"] = 12;
  Json ex;
  ex["synthetic"] = synthetic;
  ex["n"] = 20;
  ex["pool"] = 40;
  ex["sims"] = 6;
  ex["n_boot"] = 200;
  ex["methods"] = {"AO120", "QIS120", "DCC-QIS", "EQ"};
  ex["ao_profile"] = "cal/ao_profile.json";
  ex["backtest"]["delta_t_in"] = 260;
  ex["backtest"]["universe_refresh"] = 60;
  ex["backtest"]["horizon"] = 60;
  ex["seed"] = 13;
  Json dyn;
  dyn["n"] = 20;
  dyn["planes"] = 4;
  dyn["T"] = {60, 120};
  dyn["angles"] = {0.2, 0.4};
  dyn["n_slices"] = 30;
  dyn["independence_slices"] = 30;
  dyn["seed"] = 14;

  const std::vector<std::pair<std::string, std::string>> runs = {
      {"synth", write("synth.json", synth)},       {"calibrate-ao", write("cal.json", cal)},
      {"backtest", write("bt.json", bt)},          {"experiment", write("ex.json", ex)},
      {"dynmodel", write("dyn.json", dyn)},
  };
  const std::vector<std::string> dirs = {"synth", "cal", "bt", "ex", "dyn"};
  int files = 0;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const fs::path first = root / dirs[k];
    const fs::path again = root / (dirs[k] + "_rerun");
    if (cli({runs[k].first, "--config", runs[k].second, "--out", first.string(), "--threads", "2"}) != 0)
      return {false, runs[k].first + ": first run failed"};
    if (cli({runs[k].first, "--config", (first / "manifest.json").string(), "--out", again.string()}) != 0)
      return {false, runs[k].first + ": manifest re-run failed"};
    for (const auto& entry : fs::directory_iterator(first)) {
      const auto name = entry.path().filename();
      if (name == "manifest.json") continue;  // carries wall-clock duration
      if (slurp(entry.path()) != slurp(again / name))
        return {false, runs[k].first + ": " + name.string() + " differs"};
      ++files;
    }
  }
  return {true, fmt("commands=5 artifacts_compared=%d", files)};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path work = fs::temp_directory_path() / "covfilt_acceptance";
  for (int i = 1; i + 1 < argc; ++i)
    if (std::strcmp(argv[i], "--work") == 0) work = argv[i + 1];
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"cyclic world: AO loss <= NLS oracle loss, win rate >= 80%", cyclic_inequality},
      {"persistent world: NLS beats AO in some configuration", persistence_regression},
      {"independence gap < 0.1", independence},
      {"synthetic market: AO turnover lower, N_eff higher than sample", synthetic_ordering},
      {"nonlinear shrinkage beats sample >= 95%, trace kept", shrinkage_sanity},
      {"GMV grid oracle and long-only KKT", gmv_oracles},
      {"turnover and gross caps", caps},
      {"zero-cost single-rebalance wealth identity", accounting},
      {"bootstrap coverage 95% +- 3%", bootstrap_coverage},
      {"CLI manifest re-runs byte-identical", [&] { return determinism(work); }},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << (k + 1) << "] " << criteria[k].first << " | " << o.detail
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
