#include "covfilt/panel.hpp"

#include "covfilt/random.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace covfilt {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = line.find(delim, pos);
    out.push_back(trim(line.substr(pos, next == std::string_view::npos ? next : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

struct RawTable {
  std::vector<std::string> ids;
  std::vector<std::string> dates;
  std::vector<std::vector<double>> rows;
};

RawTable read_table(std::istream& is, const TableFormat& format, std::string_view what) {
  RawTable table;
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument(std::string(what) + ": empty table");
  const auto header = split(line, format.delimiter);
  if (header.size() < 2 || header[0] != "date")
    throw std::invalid_argument(std::string(what) + ": header must be date,<id1>,<id2>,...");
  std::unordered_set<std::string_view> seen;
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (header[j].empty()) throw std::invalid_argument(std::string(what) + ": empty asset id");
    table.ids.emplace_back(header[j]);
  }
  for (const auto& id : table.ids)
    if (!seen.insert(id).second)
      throw std::invalid_argument(std::string(what) + ": duplicate asset id " + id);

  std::unordered_set<std::string> dates;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line, format.delimiter);
    if (fields.size() != header.size())
      throw std::invalid_argument(std::string(what) + ": line " + std::to_string(line_no) +
                                  " has " + std::to_string(fields.size()) + " fields, expected " +
                                  std::to_string(header.size()));
    std::string date(fields[0]);
    if (date.empty())
      throw std::invalid_argument(std::string(what) + ": empty date on line " +
                                  std::to_string(line_no));
    if (!dates.insert(date).second)
      throw std::invalid_argument(std::string(what) + ": duplicate date " + date);
    std::vector<double> row(table.ids.size(), kMissing);
    for (std::size_t j = 1; j < fields.size(); ++j) {
      const auto cell = fields[j];
      if (cell.empty() || cell == format.missing_token) continue;
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || ptr != cell.data() + cell.size() || std::isnan(v))
        throw std::invalid_argument(std::string(what) + ": non-numeric cell '" + std::string(cell) +
                                    "' on line " + std::to_string(line_no));
      row[j - 1] = v;
    }
    table.dates.push_back(std::move(date));
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace

void ReturnPanel::validate() const {
  const auto n_days = static_cast<Index>(dates.size());
  const auto n_assets = static_cast<Index>(asset_ids.size());
  if (returns.rows() != n_days || returns.cols() != n_assets)
    throw std::invalid_argument("panel: returns shape does not match dates x assets");
  if (caps.rows() != returns.rows() || caps.cols() != returns.cols())
    throw std::invalid_argument("panel: caps shape differs from returns");
  for (std::size_t i = 1; i < dates.size(); ++i)
    if (!(dates[i - 1] < dates[i]))
      throw std::invalid_argument("panel: dates not strictly increasing at " + dates[i]);
  std::unordered_set<std::string_view> ids;
  for (const auto& id : asset_ids)
    if (!ids.insert(id).second) throw std::invalid_argument("panel: duplicate asset id " + id);
  for (Index i = 0; i < returns.rows(); ++i)
    for (Index j = 0; j < returns.cols(); ++j)
      if (!is_missing(returns(i, j)) && !(returns(i, j) > -1.0))
        throw std::invalid_argument("panel: return <= -1 for " + asset_ids[j] + " on " +
                                    dates[i]);
}

std::optional<Index> ReturnPanel::date_index(std::string_view date) const {
  const auto it = std::lower_bound(dates.begin(), dates.end(), date);
  if (it == dates.end() || *it != date) return std::nullopt;
  return static_cast<Index>(it - dates.begin());
}

std::optional<Index> ReturnPanel::asset_index(std::string_view id) const {
  const auto it = std::find(asset_ids.begin(), asset_ids.end(), id);
  if (it == asset_ids.end()) return std::nullopt;
  return static_cast<Index>(it - asset_ids.begin());
}

ReturnPanel load_panel(std::istream& returns, std::istream* caps, const TableFormat& format) {
  RawTable ret = read_table(returns, format, "returns");
  std::vector<std::size_t> order(ret.dates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return ret.dates[a] < ret.dates[b]; });

  ReturnPanel panel;
  panel.asset_ids = ret.ids;
  const auto n_days = static_cast<Index>(order.size());
  const auto n_assets = static_cast<Index>(ret.ids.size());
  panel.returns.resize(n_days, n_assets);
  panel.caps = Matrix::Ones(n_days, n_assets);
  for (Index i = 0; i < n_days; ++i) {
    const auto src = order[static_cast<std::size_t>(i)];
    panel.dates.push_back(ret.dates[src]);
    for (Index j = 0; j < n_assets; ++j) panel.returns(i, j) = ret.rows[src][static_cast<std::size_t>(j)];
  }

  if (caps != nullptr) {
    RawTable cap = read_table(*caps, format, "caps");
    std::map<std::string_view, std::size_t> cap_row;
    for (std::size_t r = 0; r < cap.dates.size(); ++r) cap_row.emplace(cap.dates[r], r);
    std::vector<std::size_t> cap_col(ret.ids.size());
    for (std::size_t j = 0; j < ret.ids.size(); ++j) {
      const auto it = std::find(cap.ids.begin(), cap.ids.end(), ret.ids[j]);
      if (it == cap.ids.end()) throw std::invalid_argument("caps: missing column for " + ret.ids[j]);
      cap_col[j] = static_cast<std::size_t>(it - cap.ids.begin());
    }
    for (Index i = 0; i < n_days; ++i) {
      const auto it = cap_row.find(panel.dates[static_cast<std::size_t>(i)]);
      if (it == cap_row.end())
        throw std::invalid_argument("caps: missing date " + panel.dates[static_cast<std::size_t>(i)]);
      for (Index j = 0; j < n_assets; ++j)
        panel.caps(i, j) = cap.rows[it->second][cap_col[static_cast<std::size_t>(j)]];
    }
  }
  panel.validate();
  return panel;
}

ReturnPanel load_panel(const std::filesystem::path& returns,
                       const std::optional<std::filesystem::path>& caps, const TableFormat& format) {
  std::ifstream ret_file(returns);
  if (!ret_file) throw std::invalid_argument("cannot open returns file " + returns.string());
  if (!caps) return load_panel(ret_file, nullptr, format);
  std::ifstream cap_file(*caps);
  if (!cap_file) throw std::invalid_argument("cannot open caps file " + caps->string());
  return load_panel(ret_file, &cap_file, format);
}

void write_table(std::ostream& os, const ReturnPanel& panel, const Matrix& values,
                 const TableFormat& format) {
  os << "date";
  for (const auto& id : panel.asset_ids) os << format.delimiter << id;
  os << '\n';
  char buf[64];
  for (Index i = 0; i < values.rows(); ++i) {
    os << panel.dates[static_cast<std::size_t>(i)];
    for (Index j = 0; j < values.cols(); ++j) {
      os << format.delimiter;
      if (is_missing(values(i, j))) {
        os << format.missing_token;
      } else {
        const auto res = std::to_chars(buf, buf + sizeof buf, values(i, j));
        os.write(buf, res.ptr - buf);
      }
    }
    os << '\n';
  }
}

Matrix row_block(const ReturnPanel& panel, Index first, Index length,
                 const std::vector<Index>& columns) {
  if (first < 0 || length < 0 || first + length > panel.days())
    throw std::invalid_argument("row_block: rows outside panel");
  Matrix out(length, static_cast<Index>(columns.size()));
  for (Index j = 0; j < out.cols(); ++j) {
    const Index col = columns[static_cast<std::size_t>(j)];
    for (Index i = 0; i < length; ++i) {
      const double v = panel.returns(first + i, col);
      out(i, j) = is_missing(v) ? 0.0 : v;
    }
  }
  return out;
}

Matrix window_returns(const ReturnPanel& panel, Index anchor, Index length,
                      const std::vector<Index>& columns) {
  return row_block(panel, anchor - length + 1, length, columns);
}

std::vector<std::string> ids_of(const ReturnPanel& panel, const std::vector<Index>& columns) {
  std::vector<std::string> out;
  out.reserve(columns.size());
  for (const Index c : columns) out.push_back(panel.asset_ids[static_cast<std::size_t>(c)]);
  return out;
}

UniverseSnapshot select_universe(const ReturnPanel& panel, Index anchor, Index dt_in, Index dt_out,
                                 Index count, const UniverseFilter& filter) {
  if (dt_in < 2 || dt_out < 0 || count < 0)
    throw std::invalid_argument("select_universe: need dt_in >= 2, dt_out >= 0, count >= 0");
  const Index first = anchor - dt_in + 1;
  const Index last = anchor + dt_out;
  if (first < 0 || last >= panel.days())
    throw std::invalid_argument("select_universe: window [" + std::to_string(first) + ", " +
                                std::to_string(last) + "] outside panel of " +
                                std::to_string(panel.days()) + " days");

  // (a) listed on both window ends, (b) zero-or-missing fraction, cap known at anchor
  std::vector<Index> candidates;
  for (Index j = 0; j < panel.assets(); ++j) {
    if (is_missing(panel.returns(first, j)) || is_missing(panel.returns(last, j))) continue;
    if (is_missing(panel.caps(anchor, j))) continue;
    Index bad = 0;
    for (Index i = first; i <= anchor; ++i) {
      const double v = panel.returns(i, j);
      if (is_missing(v) || v == 0.0) ++bad;
    }
    if (static_cast<double>(bad) / static_cast<double>(dt_in) >= filter.max_zero_fraction) continue;
    candidates.push_back(j);
  }
  std::stable_sort(candidates.begin(), candidates.end(), [&](Index a, Index b) {
    return panel.caps(anchor, a) > panel.caps(anchor, b);
  });

  // (c) greedy correlation pruning in descending capitalization
  UniverseSnapshot snap;
  snap.anchor = anchor;
  snap.in_window = dt_in;
  snap.out_window = dt_out;
  snap.requested = count;
  Matrix z = row_block(panel, first, dt_in, candidates);
  z.rowwise() -= z.colwise().mean();
  for (Index k = 0; k < z.cols(); ++k) {
    const double norm = z.col(k).norm();
    if (norm > 0.0) z.col(k) /= norm;
  }
  const Matrix corr = z.transpose() * z;
  std::vector<Index> kept;
  for (Index k = 0; k < z.cols(); ++k) {
    if (static_cast<Index>(kept.size()) >= count) break;
    const bool ok = std::none_of(kept.begin(), kept.end(), [&](Index m) {
      return corr(m, k) >= filter.max_correlation;
    });
    if (!ok) continue;
    kept.push_back(k);
    snap.eligible.push_back(candidates[static_cast<std::size_t>(k)]);
  }
  snap.shortfall = static_cast<Index>(snap.eligible.size()) < count;
  return snap;
}

std::vector<Index> sample_universe(const UniverseSnapshot& snapshot, Index n, std::uint64_t seed) {
  const auto pool_size = static_cast<Index>(snapshot.eligible.size());
  if (n < 0 || n > pool_size)
    throw std::invalid_argument("sample_universe: requested " + std::to_string(n) + " of " +
                                std::to_string(pool_size) + " eligible assets");
  std::vector<Index> pool = snapshot.eligible;
  Rng rng(seed);
  for (Index k = 0; k < n; ++k) {
    std::uniform_int_distribution<Index> pick(k, pool_size - 1);
    std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  pool.resize(static_cast<std::size_t>(n));
  return pool;
}

}  // namespace covfilt
