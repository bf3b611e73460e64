#pragma once

#include "covfilt/estimators.hpp"
#include "covfilt/panel.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace covfilt {

/// Rank-indexed Average Oracle eigenvalues on the correlation scale,
/// normalized to sum to n.
struct AOProfile {
  Index n = 0;
  Vector eigenvalues;  // descending rank order
  Index delta_t_in = 0;
  Index delta_t_out = 0;
  Index pairs = 0;
  Vector std_error;  // per-rank standard error of the mean, same scale; not serialized
  std::string panel_id;
};

/// Thrown when the panel cannot supply the requested number of window pairs.
class InsufficientHistory : public std::invalid_argument {
 public:
  InsufficientHistory(const std::string& what, Index achievable)
      : std::invalid_argument(what), achievable_(achievable) {}
  Index achievable() const { return achievable_; }

 private:
  Index achievable_;
};

struct AOCalibrationOptions {
  Index n = 100;
  Index delta_t_in = 240;
  Index delta_t_out = 5;
  Index pairs = 1000;
  std::uint64_t seed = 0;
  Index pool = 0;           // eligible pool size per anchor; 0 = every qualifying asset
  Index first_anchor = -1;  // anchor range, -1 = widest admissible
  Index last_anchor = -1;
  UniverseFilter filter;
};

/// One calibration sample: in-sample rows end at `anchor`, out-of-sample rows
/// are the following delta_t_out.
struct CalibrationWindow {
  Index anchor = 0;
  std::vector<Index> assets;
};

/// Oracle eigenvalues of one window pair: eigenvectors of the in-sample
/// correlation, evaluated against the out-of-sample second moment of returns
/// standardized with in-sample moments.
Vector window_oracle_eigs(const Eigen::Ref<const Matrix>& in_sample,
                          const Eigen::Ref<const Matrix>& out_sample);

/// Rank-wise mean of window_oracle_eigs over the given windows, normalized to
/// sum n.
AOProfile ao_calibrate_windows(const ReturnPanel& panel, const std::vector<CalibrationWindow>& windows,
                               Index delta_t_in, Index delta_t_out);

/// Draws `pairs` distinct anchors and an n-asset sample at each (one child seed
/// per pair), then calibrates on those windows.
AOProfile ao_calibrate(const ReturnPanel& panel, const AOCalibrationOptions& options);

/// Sample correlation eigenvectors with the profile as spectrum, rescaled by
/// in-sample sample volatilities.
CovEstimate ao_apply(const Eigen::Ref<const Matrix>& window, const AOProfile& profile);

/// Round-trips bit-exactly (17 significant digits).
std::string profile_to_json(const AOProfile& profile);
AOProfile profile_from_json(const std::string& text);
void save_profile(const AOProfile& profile, const std::filesystem::path& path);
AOProfile load_profile(const std::filesystem::path& path);

}  // namespace covfilt
