#pragma once

#include "covfilt/linalg.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace covfilt {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

/// Date-indexed simple returns with capitalization metadata. Missing cells
/// hold NaN in both matrices.
struct ReturnPanel {
  std::vector<std::string> dates;      // strictly increasing ISO dates
  std::vector<std::string> asset_ids;  // unique
  Matrix returns;                      // day x asset
  Matrix caps;                         // day x asset

  Index days() const { return returns.rows(); }
  Index assets() const { return returns.cols(); }

  /// Throws std::invalid_argument on any broken invariant.
  void validate() const;

  std::optional<Index> date_index(std::string_view date) const;
  std::optional<Index> asset_index(std::string_view id) const;
};

struct TableFormat {
  char delimiter = ',';
  std::string missing_token;  // in addition to the empty field
};

/// Reads `date,<id1>,<id2>,...` tables. Without a capitalization table every
/// cap is 1, so capitalization ranking falls back to column order.
ReturnPanel load_panel(std::istream& returns, std::istream* caps, const TableFormat& format = {});
ReturnPanel load_panel(const std::filesystem::path& returns,
                       const std::optional<std::filesystem::path>& caps,
                       const TableFormat& format = {});

void write_table(std::ostream& os, const ReturnPanel& panel, const Matrix& values,
                 const TableFormat& format = {});

struct UniverseFilter {
  double max_zero_fraction = 0.20;  // strict: fraction must be below this
  double max_correlation = 0.95;    // strict: pairwise correlation must be below this
};

/// Eligible assets at an anchor day. The in-sample window is the dt_in rows
/// ending at `anchor` (inclusive); the out-of-sample window is the dt_out rows
/// after it.
struct UniverseSnapshot {
  Index anchor = 0;
  Index in_window = 0;
  Index out_window = 0;
  Index requested = 0;
  std::vector<Index> eligible;  // panel columns, descending capitalization at anchor
  bool shortfall = false;       // fewer than `requested` assets survived
};

UniverseSnapshot select_universe(const ReturnPanel& panel, Index anchor, Index dt_in, Index dt_out,
                                 Index count, const UniverseFilter& filter = {});

/// n distinct members of the snapshot drawn uniformly; the result depends only
/// on (snapshot, n, seed).
std::vector<Index> sample_universe(const UniverseSnapshot& snapshot, Index n, std::uint64_t seed);

/// Returns of `columns` over rows [anchor - length + 1, anchor], missing cells as 0.
Matrix window_returns(const ReturnPanel& panel, Index anchor, Index length,
                      const std::vector<Index>& columns);

/// Returns of `columns` over rows [first, first + length), missing cells as 0.
Matrix row_block(const ReturnPanel& panel, Index first, Index length,
                 const std::vector<Index>& columns);

std::vector<std::string> ids_of(const ReturnPanel& panel, const std::vector<Index>& columns);

}  // namespace covfilt
