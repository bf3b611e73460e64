#pragma once

#include "covfilt/json_io.hpp"
#include "covfilt/linalg.hpp"

#include <filesystem>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace covfilt {

/// Config schema violation; `field` is the dotted path of the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct RunManifest {
  std::string command;
  Json config;  // every default materialized
  std::uint64_t seed = 0;
  std::vector<std::string> artifacts;  // file names inside the output directory
  std::string version;
  double duration_seconds = 0.0;
  unsigned threads = 1;
};

Json manifest_to_json(const RunManifest& manifest);

/// Overrides taken from the command line.
struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<Index> sims;
  unsigned threads = 1;
};

/// Each command reads its config (a plain config or a manifest written by an
/// earlier run), writes its artifacts plus manifest.json into `out_dir` and
/// returns the manifest.
RunManifest cmd_calibrate_ao(const Json& config, const std::filesystem::path& base_dir,
                             const std::filesystem::path& out_dir, const CliOverrides& overrides);
RunManifest cmd_backtest(const Json& config, const std::filesystem::path& base_dir,
                         const std::filesystem::path& out_dir, const CliOverrides& overrides);
RunManifest cmd_experiment(const Json& config, const std::filesystem::path& base_dir,
                           const std::filesystem::path& out_dir, const CliOverrides& overrides);
RunManifest cmd_dynmodel(const Json& config, const std::filesystem::path& base_dir,
                         const std::filesystem::path& out_dir, const CliOverrides& overrides);
RunManifest cmd_synth(const Json& config, const std::filesystem::path& base_dir,
                      const std::filesystem::path& out_dir, const CliOverrides& overrides);

/// Entry point of the `covfilt` executable. Exit status 0 iff every artifact
/// was written; 2 on a usage or config error, 1 on a run failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace covfilt
