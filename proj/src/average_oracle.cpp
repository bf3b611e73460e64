#include "covfilt/average_oracle.hpp"

#include "covfilt/json_io.hpp"
#include "covfilt/random.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

namespace covfilt {

Vector window_oracle_eigs(const Eigen::Ref<const Matrix>& in_sample,
                          const Eigen::Ref<const Matrix>& out_sample) {
  if (in_sample.cols() != out_sample.cols())
    throw std::invalid_argument("window_oracle_eigs: column mismatch");
  if (out_sample.rows() < 1) throw std::invalid_argument("window_oracle_eigs: empty out-of-sample");
  const Moments m = column_moments(in_sample);
  const auto eig = sym_eigen_desc(sample_correlation(in_sample));
  const Matrix z_out = standardize(out_sample, m);
  const Matrix c_out = z_out.transpose() * z_out / static_cast<double>(out_sample.rows());
  return oracle_diagonal(eig.vectors, c_out);
}

AOProfile ao_calibrate_windows(const ReturnPanel& panel, const std::vector<CalibrationWindow>& windows,
                               Index delta_t_in, Index delta_t_out) {
  if (windows.empty()) throw std::invalid_argument("ao_calibrate: no calibration windows");
  const auto n = static_cast<Index>(windows.front().assets.size());
  if (n < 1) throw std::invalid_argument("ao_calibrate: empty asset set");

  Vector sum = Vector::Zero(n);
  Vector sum_sq = Vector::Zero(n);
  for (const auto& w : windows) {
    if (static_cast<Index>(w.assets.size()) != n)
      throw std::invalid_argument("ao_calibrate: windows disagree on dimension");
    const Matrix in = window_returns(panel, w.anchor, delta_t_in, w.assets);
    const Matrix out = row_block(panel, w.anchor + 1, delta_t_out, w.assets);
    const Vector o = window_oracle_eigs(in, out);
    sum += o;
    sum_sq += o.cwiseAbs2();
  }
  const auto count = static_cast<double>(windows.size());
  const Vector mean = sum / count;
  AOProfile profile;
  profile.n = n;
  profile.delta_t_in = delta_t_in;
  profile.delta_t_out = delta_t_out;
  profile.pairs = static_cast<Index>(windows.size());
  const double scale = static_cast<double>(n) / mean.sum();
  profile.eigenvalues = mean * scale;
  if (windows.size() > 1) {
    const Vector var = ((sum_sq / count) - mean.cwiseAbs2()).cwiseMax(0.0) * count / (count - 1.0);
    profile.std_error = (var / count).cwiseSqrt() * scale;
  } else {
    profile.std_error = Vector::Zero(n);
  }
  return profile;
}

AOProfile ao_calibrate(const ReturnPanel& panel, const AOCalibrationOptions& opt) {
  if (opt.n < 1 || opt.delta_t_in < 2 || opt.delta_t_out < 1 || opt.pairs < 1)
    throw std::invalid_argument("ao_calibrate: need n >= 1, delta_t_in >= 2, delta_t_out >= 1, pairs >= 1");
  Index first = opt.delta_t_in - 1;
  Index last = panel.days() - 1 - opt.delta_t_out;
  if (opt.first_anchor >= 0) first = std::max(first, opt.first_anchor);
  if (opt.last_anchor >= 0) last = std::min(last, opt.last_anchor);
  const Index admissible = std::max<Index>(0, last - first + 1);
  if (admissible < opt.pairs)
    throw InsufficientHistory("ao_calibrate: only " + std::to_string(admissible) +
                                  " anchors available for " + std::to_string(opt.pairs) + " pairs",
                              admissible);

  std::vector<Index> anchors(static_cast<std::size_t>(admissible));
  std::iota(anchors.begin(), anchors.end(), first);
  Rng rng(child_seed(opt.seed, ~std::uint64_t{0}));
  std::shuffle(anchors.begin(), anchors.end(), rng);

  const Index pool = opt.pool > 0 ? opt.pool : panel.assets();
  std::vector<CalibrationWindow> windows;
  for (const Index anchor : anchors) {
    if (static_cast<Index>(windows.size()) == opt.pairs) break;
    const auto snap = select_universe(panel, anchor, opt.delta_t_in, opt.delta_t_out, pool, opt.filter);
    if (static_cast<Index>(snap.eligible.size()) < opt.n) continue;
    const auto k = static_cast<std::uint64_t>(windows.size());
    windows.push_back({anchor, sample_universe(snap, opt.n, child_seed(opt.seed, k))});
  }
  if (static_cast<Index>(windows.size()) < opt.pairs)
    throw InsufficientHistory("ao_calibrate: only " + std::to_string(windows.size()) +
                                  " anchors have " + std::to_string(opt.n) + " eligible assets",
                              static_cast<Index>(windows.size()));
  std::sort(windows.begin(), windows.end(),
            [](const CalibrationWindow& a, const CalibrationWindow& b) { return a.anchor < b.anchor; });
  return ao_calibrate_windows(panel, windows, opt.delta_t_in, opt.delta_t_out);
}

CovEstimate ao_apply(const Eigen::Ref<const Matrix>& window, const AOProfile& profile) {
  if (window.cols() != profile.n || profile.eigenvalues.size() != profile.n)
    throw std::invalid_argument("ao_apply: window has " + std::to_string(window.cols()) +
                                " assets, profile is for " + std::to_string(profile.n));
  const Moments m = column_moments(window);
  const auto eig = sym_eigen_desc(sample_correlation(window));
  const Matrix r_ao = reassemble(eig.vectors, profile.eigenvalues);
  CovEstimate est;
  est.matrix = m.stdev.asDiagonal() * r_ao * m.stdev.asDiagonal();
  est.matrix = (est.matrix + est.matrix.transpose()) / 2.0;
  est.method = "ao";
  est.window = window.rows();
  est.params["profile_n"] = static_cast<double>(profile.n);
  est.params["profile_delta_t_in"] = static_cast<double>(profile.delta_t_in);
  return est;
}

std::string profile_to_json(const AOProfile& profile) {
  Json j;
  j["n"] = profile.n;
  j["delta_t_in"] = profile.delta_t_in;
  j["delta_t_out"] = profile.delta_t_out;
  j["pairs"] = profile.pairs;
  Json eigs = Json::array();
  for (Index k = 0; k < profile.eigenvalues.size(); ++k) eigs.push_back(profile.eigenvalues(k));
  j["eigenvalues"] = std::move(eigs);
  return dump_json(j);
}

AOProfile profile_from_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument(std::string("profile: ") + e.what());
  }
  AOProfile p;
  try {
    p.n = j.at("n").get<Index>();
    p.delta_t_in = j.at("delta_t_in").get<Index>();
    p.delta_t_out = j.at("delta_t_out").get<Index>();
    p.pairs = j.at("pairs").get<Index>();
    const auto& eigs = j.at("eigenvalues");
    p.eigenvalues.resize(static_cast<Index>(eigs.size()));
    for (std::size_t k = 0; k < eigs.size(); ++k) p.eigenvalues(static_cast<Index>(k)) = eigs[k].get<double>();
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("profile: ") + e.what());
  }
  if (p.eigenvalues.size() != p.n) throw std::invalid_argument("profile: eigenvalue count differs from n");
  return p;
}

void save_profile(const AOProfile& profile, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << profile_to_json(profile);
}

AOProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open profile " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return profile_from_json(text);
}

}  // namespace covfilt
