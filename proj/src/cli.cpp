#include "covfilt/cli.hpp"

#include "covfilt/average_oracle.hpp"
#include "covfilt/backtest.hpp"
#include "covfilt/dynmodel.hpp"
#include "covfilt/experiments.hpp"
#include "covfilt/panel.hpp"
#include "covfilt/random.hpp"
#include "covfilt/synth.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

namespace covfilt {
namespace fs = std::filesystem;
namespace {

// Reads typed fields from one config object and records the effective value
// of each (defaults included) in `resolved`.
class Fields {
 public:
  Fields(const Json& source, std::string where) : source_(source), where_(std::move(where)) {
    if (!source_.is_object()) throw ConfigError(where_.empty() ? "config" : where_, "expected an object");
  }

  bool has(const char* key) const { return source_.contains(key) && !source_.at(key).is_null(); }

  Index integer(const char* key, std::optional<Index> fallback = std::nullopt) {
    const Json* v = find(key, fallback.has_value());
    Index out = fallback.value_or(0);
    if (v) {
      if (!v->is_number_integer()) fail(key, "expected an integer");
      out = v->get<Index>();
    }
    resolved[key] = out;
    return out;
  }

  std::uint64_t seed(const char* key, std::uint64_t fallback) {
    const Json* v = find(key, true);
    std::uint64_t out = fallback;
    if (v) {
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0))
        fail(key, "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
    resolved[key] = out;
    return out;
  }

  double number(const char* key, std::optional<double> fallback = std::nullopt) {
    const Json* v = find(key, fallback.has_value());
    double out = fallback.value_or(0.0);
    if (v) {
      if (!v->is_number()) fail(key, "expected a number");
      out = v->get<double>();
    }
    resolved[key] = out;
    return out;
  }

  std::optional<double> optional_number(const char* key) {
    const Json* v = find(key, true);
    if (!v) {
      resolved[key] = nullptr;
      return std::nullopt;
    }
    if (!v->is_number()) fail(key, "expected a number or null");
    resolved[key] = v->get<double>();
    return v->get<double>();
  }

  std::string text(const char* key, std::optional<std::string> fallback = std::nullopt) {
    const Json* v = find(key, fallback.has_value());
    std::string out = fallback.value_or("");
    if (v) {
      if (!v->is_string()) fail(key, "expected a string");
      out = v->get<std::string>();
    }
    resolved[key] = out;
    return out;
  }

  /// A path resolved against the config directory and recorded absolute.
  fs::path path(const char* key, const fs::path& base, bool required = true) {
    const Json* v = find(key, !required);
    if (!v) {
      resolved[key] = nullptr;
      return {};
    }
    if (!v->is_string()) fail(key, "expected a path string");
    fs::path p = v->get<std::string>();
    if (p.is_relative()) p = base / p;
    p = p.lexically_normal();
    resolved[key] = p.string();
    return p;
  }

  template <typename T>
  std::vector<T> list(const char* key, std::optional<std::vector<T>> fallback = std::nullopt) {
    const Json* v = find(key, fallback.has_value());
    std::vector<T> out = fallback.value_or(std::vector<T>{});
    if (v) {
      if (!v->is_array()) fail(key, "expected an array");
      out.clear();
      for (const auto& item : *v) {
        if constexpr (std::is_same_v<T, std::string>) {
          if (!item.is_string()) fail(key, "expected an array of strings");
        } else if constexpr (std::is_integral_v<T>) {
          if (!item.is_number_integer()) fail(key, "expected an array of integers");
        } else {
          if (!item.is_number()) fail(key, "expected an array of numbers");
        }
        out.push_back(item.get<T>());
      }
    }
    resolved[key] = out;
    return out;
  }

  /// Day given as an ISO date or a panel row; -1 when absent.
  Index day(const char* key, const ReturnPanel& panel) {
    const Json* v = find(key, true);
    if (!v) {
      resolved[key] = -1;
      return -1;
    }
    if (v->is_number_integer()) {
      const auto row = v->get<Index>();
      if (row < -1 || row >= panel.days()) fail(key, "row outside the panel");
      resolved[key] = row;
      return row;
    }
    if (!v->is_string()) fail(key, "expected an ISO date or a row index");
    const auto row = panel.date_index(v->get<std::string>());
    if (!row) fail(key, "date '" + v->get<std::string>() + "' not in the panel");
    resolved[key] = v->get<std::string>();
    return *row;
  }

  Fields object(const char* key, bool required = false) {
    static const Json empty = Json::object();
    const Json* v = find(key, !required);
    Fields sub(v ? *v : empty, dotted(key));
    return sub;
  }

  void adopt(const char* key, Fields& sub) {
    sub.finish();
    resolved[key] = sub.resolved;
  }

  /// Rejects keys that no getter asked for.
  void finish() const {
    for (const auto& [key, value] : source_.items())
      if (!resolved.contains(key)) throw ConfigError(dotted(key.c_str()), "unknown field");
  }

  [[noreturn]] void fail(const char* key, const std::string& message) const {
    throw ConfigError(dotted(key), message);
  }

  Json resolved = Json::object();

 private:
  const Json* find(const char* key, bool optional) const {
    if (has(key)) return &source_.at(key);
    if (!optional) fail(key, "missing required field");
    return nullptr;
  }
  std::string dotted(const char* key) const { return where_.empty() ? key : where_ + "." + key; }

  const Json& source_;
  std::string where_;
};

struct PanelSource {
  ReturnPanel panel;
  std::string id;
};

SynthSpec read_synth_spec(Fields& f) {
  SynthSpec s;
  s.factor_vol = f.list<double>("factor_vol", s.factor_vol);
  s.loading_mean = f.list<double>("loading_mean", s.loading_mean);
  s.loading_sd = f.list<double>("loading_sd", s.loading_sd);
  s.idio_vol_low = f.number("idio_vol_low", s.idio_vol_low);
  s.idio_vol_high = f.number("idio_vol_high", s.idio_vol_high);
  s.drift = f.number("drift", s.drift);
  s.regimes = f.integer("regimes", s.regimes);
  s.loading_persistence = f.number("loading_persistence", s.loading_persistence);
  s.vol_scale = f.list<double>("vol_scale", s.vol_scale);
  s.mean_regime_days = f.number("mean_regime_days", s.mean_regime_days);
  s.start_cap_low = f.number("start_cap_low", s.start_cap_low);
  s.start_cap_high = f.number("start_cap_high", s.start_cap_high);
  return s;
}

// Either `panel` (files) or `synthetic` (generated in memory).
PanelSource read_panel(Fields& f, const fs::path& base) {
  const bool files = f.has("panel");
  const bool synthetic = f.has("synthetic");
  if (files == synthetic) f.fail("panel", "give exactly one of 'panel' or 'synthetic'");
  PanelSource src;
  if (files) {
    Fields p = f.object("panel", true);
    const fs::path returns = p.path("returns", base);
    const fs::path caps = p.path("caps", base, false);
    TableFormat format;
    const std::string delim = p.text("delimiter", ",");
    if (delim.size() != 1) p.fail("delimiter", "expected a single character");
    format.delimiter = delim[0];
    format.missing_token = p.text("missing", "");
    f.adopt("panel", p);
    src.panel = load_panel(returns, caps.empty() ? std::nullopt : std::optional<fs::path>(caps), format);
    src.id = returns.string();
  } else {
    Fields s = f.object("synthetic", true);
    const Index days = s.integer("days");
    const Index assets = s.integer("assets");
    const std::uint64_t seed = s.seed("seed", 0);
    const SynthSpec spec = read_synth_spec(s);
    f.adopt("synthetic", s);
    src.panel = synth_market(spec, days, assets, seed).panel;
    src.id = "synthetic:" + std::to_string(seed);
  }
  return src;
}

UniverseFilter read_filter(Fields& f) {
  Fields u = f.object("filter");
  UniverseFilter filter;
  filter.max_zero_fraction = u.number("max_zero_fraction", filter.max_zero_fraction);
  filter.max_correlation = u.number("max_correlation", filter.max_correlation);
  f.adopt("filter", u);
  return filter;
}

AOCalibrationOptions read_calibration(Fields& f, const ReturnPanel& panel, std::uint64_t seed_default) {
  AOCalibrationOptions o;
  o.n = f.integer("n", o.n);
  o.delta_t_in = f.integer("delta_t_in", o.delta_t_in);
  o.delta_t_out = f.integer("delta_t_out", o.delta_t_out);
  o.pairs = f.integer("pairs", o.pairs);
  o.seed = f.seed("seed", seed_default);
  o.pool = f.integer("pool", o.pool);
  o.first_anchor = f.day("first_anchor", panel);
  o.last_anchor = f.day("last_anchor", panel);
  o.filter = read_filter(f);
  return o;
}

// `ao_profile` (file) or `ao_calibration` (calibrated on the run's panel).
std::shared_ptr<const AOProfile> read_profile(Fields& f, const fs::path& base, const PanelSource& src,
                                              bool needed) {
  if (f.has("ao_profile") && f.has("ao_calibration"))
    f.fail("ao_profile", "give at most one of 'ao_profile' or 'ao_calibration'");
  if (f.has("ao_profile")) return std::make_shared<const AOProfile>(load_profile(f.path("ao_profile", base)));
  if (f.has("ao_calibration")) {
    Fields c = f.object("ao_calibration", true);
    const auto options = read_calibration(c, src.panel, 0);
    f.adopt("ao_calibration", c);
    auto profile = ao_calibrate(src.panel, options);
    profile.panel_id = src.id;
    return std::make_shared<const AOProfile>(std::move(profile));
  }
  if (needed) f.fail("ao_profile", "an AO method needs 'ao_profile' or 'ao_calibration'");
  return nullptr;
}

// Backtest parameters shared by `backtest` and the experiment template.
void read_backtest_params(Fields& f, BacktestConfig& cfg) {
  cfg.delta_t_in = f.integer("delta_t_in", cfg.delta_t_in);
  cfg.delta_t_out = f.integer("delta_t_out", cfg.delta_t_out);
  cfg.universe_refresh = f.integer("universe_refresh", cfg.universe_refresh);
  cfg.horizon = f.integer("horizon", cfg.horizon);
  cfg.cost_rate = f.number("cost_rate", cfg.cost_rate);
  const std::string side = f.text("side", to_string(cfg.side));
  try {
    cfg.side = side_from_string(side);
  } catch (const std::invalid_argument& e) {
    f.fail("side", e.what());
  }
  Fields caps = f.object("caps");
  cfg.caps.turnover = caps.optional_number("turnover");
  cfg.caps.gross_leverage = caps.optional_number("gross_leverage");
  f.adopt("caps", caps);
  cfg.filter = read_filter(f);
}

MethodSpec read_method(Fields& f, const char* key, const std::string& label) {
  try {
    return parse_method(label);
  } catch (const std::invalid_argument& e) {
    f.fail(key, e.what());
  }
}

Json metrics_json(const MetricsReport& m) {
  Json j;
  j["SR"] = m.sr ? Json(*m.sr) : Json(nullptr);
  j["MEAN"] = m.mean;
  j["VOL"] = m.vol;
  j["Turnover"] = m.turnover;
  j["Turnover+drift"] = m.turnover_drift;
  j["GrossLev"] = m.gross_lev;
  j["N_eff"] = m.n_eff;
  return j;
}

// Unwraps a manifest used as a config.
const Json& config_body(const Json& config, const std::string& command) {
  if (config.is_object() && config.contains("command") && config.contains("config")) {
    if (config.at("command") != command)
      throw ConfigError("command", "manifest was written by '" + config.at("command").get<std::string>() +
                                       "', not '" + command + "'");
    return config.at("config");
  }
  return config;
}

class Outputs {
 public:
  Outputs(fs::path dir, std::string command, const CliOverrides& overrides) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
    manifest_.command = std::move(command);
    manifest_.version = COVFILT_VERSION;
    manifest_.threads = overrides.threads;
  }

  template <typename Writer>
  void write(const std::string& name, Writer&& writer) {
    std::ofstream os(dir_ / name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + (dir_ / name).string() + " for writing");
    writer(os);
    os.flush();
    if (!os) throw std::runtime_error("failed writing " + (dir_ / name).string());
    manifest_.artifacts.push_back(name);
  }

  RunManifest finish(Json resolved, std::uint64_t seed) {
    manifest_.config = std::move(resolved);
    manifest_.seed = seed;
    manifest_.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    manifest_.artifacts.push_back("manifest.json");
    std::ofstream os(dir_ / "manifest.json", std::ios::binary);
    write_json(os, manifest_to_json(manifest_));
    if (!os) throw std::runtime_error("failed writing manifest.json");
    return manifest_;
  }

 private:
  fs::path dir_;
  RunManifest manifest_;
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

NlsTarget nls_target_from(Fields& f, const std::string& name) {
  if (name == "true_eigenvalues") return NlsTarget::true_eigenvalues;
  if (name == "sample_eigenvalues") return NlsTarget::sample_eigenvalues;
  if (name == "analytic") return NlsTarget::analytic;
  f.fail("nls", "expected true_eigenvalues, sample_eigenvalues or analytic");
}

}  // namespace

Json manifest_to_json(const RunManifest& m) {
  Json j;
  j["command"] = m.command;
  j["version"] = m.version;
  j["seed"] = m.seed;
  j["threads"] = m.threads;
  j["artifacts"] = m.artifacts;
  j["duration_seconds"] = m.duration_seconds;
  j["config"] = m.config;
  return j;
}

RunManifest cmd_calibrate_ao(const Json& config, const fs::path& base, const fs::path& out_dir,
                             const CliOverrides& overrides) {
  Fields f(config_body(config, "calibrate-ao"), "");
  const PanelSource src = read_panel(f, base);
  AOCalibrationOptions options = read_calibration(f, src.panel, 0);
  if (overrides.seed) f.resolved["seed"] = options.seed = *overrides.seed;
  f.finish();

  AOProfile profile = ao_calibrate(src.panel, options);
  profile.panel_id = src.id;
  Outputs out(out_dir, "calibrate-ao", overrides);
  out.write("ao_profile.json", [&](std::ostream& os) { os << profile_to_json(profile); });
  return out.finish(f.resolved, options.seed);
}

RunManifest cmd_backtest(const Json& config, const fs::path& base, const fs::path& out_dir,
                         const CliOverrides& overrides) {
  Fields f(config_body(config, "backtest"), "");
  const PanelSource src = read_panel(f, base);
  BacktestConfig cfg;
  cfg.method = read_method(f, "method", f.text("method"));
  const Index start = f.day("start", src.panel);
  if (start < 0) f.fail("start", "missing required field");
  cfg.n = f.integer("n", cfg.n);
  cfg.pool = f.integer("pool", cfg.pool);
  cfg.seed = f.seed("seed", 0);
  if (overrides.seed) f.resolved["seed"] = cfg.seed = *overrides.seed;
  read_backtest_params(f, cfg);
  cfg.method.profile = read_profile(f, base, src, cfg.method.estimator == Estimator::average_oracle);
  std::optional<std::vector<Index>> initial;
  if (f.has("initial_assets")) {
    std::vector<Index> cols;
    for (const auto& id : f.list<std::string>("initial_assets")) {
      const auto col = src.panel.asset_index(id);
      if (!col) f.fail("initial_assets", "unknown asset '" + id + "'");
      cols.push_back(*col);
    }
    initial = std::move(cols);
  } else {
    f.resolved["initial_assets"] = nullptr;
  }
  f.finish();
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("config", e.what());
  }

  const BacktestResult result = run_backtest(src.panel, cfg, start, initial);
  Outputs out(out_dir, "backtest", overrides);
  out.write("metrics.json", [&](std::ostream& os) {
    Json j;
    j["method"] = cfg.method.label;
    j["metrics"] = metrics_json(result.metrics);
    j["final_wealth"] = result.final_wealth;
    write_json(os, j);
  });
  out.write("ledger.csv", [&](std::ostream& os) { write_ledger(os, result.ledger); });
  out.write("daily.csv", [&](std::ostream& os) { write_daily(os, src.panel, result); });
  return out.finish(f.resolved, cfg.seed);
}

RunManifest cmd_experiment(const Json& config, const fs::path& base, const fs::path& out_dir,
                           const CliOverrides& overrides) {
  Fields f(config_body(config, "experiment"), "");
  const PanelSource src = read_panel(f, base);
  ExperimentConfig cfg;
  cfg.n = f.integer("n", cfg.n);
  cfg.pool = f.integer("pool", cfg.pool);
  cfg.sims = f.integer("sims", cfg.sims);
  if (overrides.sims) f.resolved["sims"] = cfg.sims = *overrides.sims;
  cfg.first_start = f.day("first_start", src.panel);
  cfg.last_start = f.day("last_start", src.panel);
  cfg.seed = f.seed("seed", 0);
  if (overrides.seed) f.resolved["seed"] = cfg.seed = *overrides.seed;
  cfg.n_boot = f.integer("n_boot", cfg.n_boot);
  cfg.level = f.number("level", cfg.level);
  cfg.threads = overrides.threads;
  bool needs_profile = false;
  for (const auto& label : f.list<std::string>("methods")) {
    cfg.methods.push_back(read_method(f, "methods", label));
    needs_profile = needs_profile || cfg.methods.back().estimator == Estimator::average_oracle;
  }
  Fields b = f.object("backtest");
  read_backtest_params(b, cfg.backtest);
  f.adopt("backtest", b);
  const auto profile = read_profile(f, base, src, needs_profile);
  for (auto& m : cfg.methods) m.profile = profile;
  f.finish();
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("config", e.what());
  }

  const ExperimentReport report = run_randomized_experiment(src.panel, cfg);
  Outputs out(out_dir, "experiment", overrides);
  out.write("report.json", [&](std::ostream& os) { os << report_json(report); });
  out.write("report.csv", [&](std::ostream& os) { write_report_table(os, report); });
  return out.finish(f.resolved, cfg.seed);
}

RunManifest cmd_dynmodel(const Json& config, const fs::path& /*base*/, const fs::path& out_dir,
                         const CliOverrides& overrides) {
  Fields f(config_body(config, "dynmodel"), "");
  SweepConfig cfg;
  cfg.n = f.integer("n", cfg.n);
  cfg.states = f.integer("states", cfg.states);
  cfg.T = f.list<Index>("T", cfg.T);
  cfg.angles = f.list<double>("angles", cfg.angles);
  cfg.planes = f.integer("planes", cfg.planes);
  const auto spectrum = f.list<double>("spectrum", std::vector<double>{});
  if (!spectrum.empty()) {
    if (static_cast<Index>(spectrum.size()) != cfg.n) f.fail("spectrum", "needs n entries");
    cfg.spectra = {Eigen::Map<const Vector>(spectrum.data(), cfg.n)};
  } else {
    const Vector d = default_spectrum(cfg.n);
    f.resolved["spectrum"] = std::vector<double>(d.data(), d.data() + d.size());
  }
  cfg.stay = f.number("stay", cfg.stay);
  cfg.compare.n_slices = f.integer("n_slices", cfg.compare.n_slices);
  cfg.compare.calibration_slices = f.integer("calibration_slices", cfg.compare.calibration_slices);
  cfg.compare.nls = nls_target_from(f, f.text("nls", "true_eigenvalues"));
  const Index independence_slices = f.integer("independence_slices", 0);
  cfg.seed = f.seed("seed", 0);
  if (overrides.seed) f.resolved["seed"] = cfg.seed = *overrides.seed;
  f.finish();
  if (cfg.states < 2 && cfg.stay < 0.0)
    throw ConfigError("states", "the AO versus NLS comparison needs a changing world (states >= 2)");

  const SweepResult sweep = run_sweep(cfg);
  Json summary;
  Json rows = Json::array();
  for (std::size_t i = 0; i < sweep.rows.size(); ++i) {
    const auto& r = sweep.rows[i];
    Json row;
    row["angle"] = r.angle;
    row["T"] = r.T;
    row["n"] = r.n;
    row["ao_loss_mean"] = r.ao_loss_mean;
    row["nls_loss_mean"] = r.nls_loss_mean;
    row["ao_win_rate"] = r.ao_win_rate;
    const Vector& ao = sweep.runs[i].ao_eigenvalues;
    row["ao_eigenvalues"] = std::vector<double>(ao.data(), ao.data() + ao.size());
    rows.push_back(std::move(row));
  }
  summary["rows"] = std::move(rows);
  if (independence_slices > 0) {
    Json gaps = Json::array();
    std::uint64_t k = 0;
    for (const Index t : cfg.T) {
      const auto spectra = cfg.spectra.empty() ? std::vector<Vector>{default_spectrum(cfg.n)} : cfg.spectra;
      for (const double angle : cfg.angles) {
        const std::uint64_t seed = child_seed(cfg.seed ^ 0x1D3Dull, k++);
        RegimeWorld world = build_cyclic_world(cfg.n, cfg.states, spectra,
                                               spike_planes(std::min<Index>(cfg.planes, cfg.n / 2), angle), t,
                                               child_seed(seed, 0));
        if (cfg.stay >= 0.0) world = with_persistence(world, cfg.stay);
        Json g;
        g["angle"] = angle;
        g["T"] = t;
        g["gap"] = independence_check(world, independence_slices, child_seed(seed, 1));
        gaps.push_back(std::move(g));
      }
    }
    summary["independence"] = std::move(gaps);
  }

  Outputs out(out_dir, "dynmodel", overrides);
  out.write("sweep.csv", [&](std::ostream& os) { write_sweep(os, sweep.rows); });
  out.write("slices.csv", [&](std::ostream& os) { write_slice_losses(os, sweep); });
  out.write("dynmodel.json", [&](std::ostream& os) { write_json(os, summary); });
  return out.finish(f.resolved, cfg.seed);
}

RunManifest cmd_synth(const Json& config, const fs::path& /*base*/, const fs::path& out_dir,
                      const CliOverrides& overrides) {
  Fields f(config_body(config, "synth"), "");
  Fields s = f.object("synthetic", true);
  const Index days = s.integer("days");
  const Index assets = s.integer("assets");
  std::uint64_t seed = s.seed("seed", 0);
  if (overrides.seed) s.resolved["seed"] = seed = *overrides.seed;
  const SynthSpec spec = read_synth_spec(s);
  f.adopt("synthetic", s);
  f.finish();

  const SynthMarket market = synth_market(spec, days, assets, seed);
  Outputs out(out_dir, "synth", overrides);
  out.write("returns.csv", [&](std::ostream& os) { write_table(os, market.panel, market.panel.returns); });
  out.write("caps.csv", [&](std::ostream& os) { write_table(os, market.panel, market.panel.caps); });
  return out.finish(f.resolved, seed);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Covariance filtering and GMV backtesting toolkit"};
  app.set_version_flag("--version", std::string(COVFILT_VERSION));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  Index sims = 0;
  unsigned threads = 1;

  using Command = RunManifest (*)(const Json&, const fs::path&, const fs::path&, const CliOverrides&);
  const std::vector<std::tuple<std::string, std::string, Command>> commands = {
      {"calibrate-ao", "Calibrate an Average Oracle profile", cmd_calibrate_ao},
      {"backtest", "Run one rebalancing backtest", cmd_backtest},
      {"experiment", "Run the randomized-universe experiment", cmd_experiment},
      {"dynmodel", "Compare AO and NLS in the regime-switching world", cmd_dynmodel},
      {"synth", "Write a synthetic factor market panel", cmd_synth},
  };
  std::vector<CLI::App*> subs;
  std::vector<CLI::Option*> seed_opts, sims_opts;
  for (const auto& [name, help, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "Config or manifest (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
    seed_opts.push_back(sub->add_option("--seed", seed, "Master seed (overrides the config)"));
    sims_opts.push_back(sub->add_option("--sims", sims, "Simulation count (experiment)")->check(CLI::PositiveNumber));
    sub->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    CliOverrides overrides;
    if (seed_opts[i]->count() > 0) overrides.seed = seed;
    if (sims_opts[i]->count() > 0) overrides.sims = sims;
    overrides.threads = threads;
    const auto& [name, help, fn] = commands[i];
    try {
      const fs::path path = fs::absolute(config_path);
      Json config;
      try {
        config = read_json_file(path);
      } catch (const std::invalid_argument& e) {
        throw ConfigError("config", e.what());
      }
      const RunManifest manifest = fn(config, path.parent_path(), fs::path(out_dir), overrides);
      for (const auto& a : manifest.artifacts) out << (fs::path(out_dir) / a).string() << '\n';
      return 0;
    } catch (const ConfigError& e) {
      err << name << ": config error: " << e.what() << '\n';
      return 2;
    } catch (const std::exception& e) {
      err << name << ": " << e.what() << '\n';
      return 1;
    }
  }
  return 2;
}

}  // namespace covfilt
