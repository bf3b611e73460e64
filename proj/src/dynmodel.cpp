#include "covfilt/dynmodel.hpp"

#include "covfilt/estimators.hpp"
#include "covfilt/random.hpp"

#include <cstdio>
#include <numbers>
#include <ostream>
#include <set>
#include <stdexcept>

namespace covfilt {
namespace {

void sign_fix(Matrix& v) {
  for (Index k = 0; k < v.cols(); ++k) {
    Index arg = 0;
    v.col(k).cwiseAbs().maxCoeff(&arg);
    if (v(arg, k) < 0.0) v.col(k) = -v.col(k);
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

Matrix RegimeWorld::rotation(Index from, Index to) const {
  return eigenvectors[static_cast<std::size_t>(to)] * eigenvectors[static_cast<std::size_t>(from)].transpose();
}

Vector stationary_distribution(const Eigen::Ref<const Matrix>& transition) {
  const Index s = transition.rows();
  if (s < 1 || transition.cols() != s) throw std::invalid_argument("stationary_distribution: W must be square");
  for (Index i = 0; i < s; ++i) {
    if ((transition.row(i).array() < 0.0).any() || std::abs(transition.row(i).sum() - 1.0) > 1e-12)
      throw std::invalid_argument("stationary_distribution: W must be row-stochastic");
  }
  Matrix a(s + 1, s);
  a.topRows(s) = (transition - Matrix::Identity(s, s)).transpose();
  a.row(s).setOnes();
  Vector b = Vector::Zero(s + 1);
  b(s) = 1.0;
  Vector p = a.colPivHouseholderQr().solve(b);
  p = p.cwiseMax(0.0);
  return p / p.sum();
}

RegimeWorld make_world(const std::vector<Matrix>& covariances, const Eigen::Ref<const Matrix>& transition,
                       Index T, bool cyclic) {
  if (covariances.empty()) throw std::invalid_argument("make_world: need at least one state");
  if (T < 1) throw std::invalid_argument("make_world: need T >= 1");
  const auto s = static_cast<Index>(covariances.size());
  if (transition.rows() != s || transition.cols() != s)
    throw std::invalid_argument("make_world: W must be S x S");
  RegimeWorld w;
  w.n = covariances.front().rows();
  w.T = T;
  w.cyclic = cyclic;
  for (const auto& c : covariances) {
    if (c.rows() != w.n || c.cols() != w.n) throw std::invalid_argument("make_world: states differ in shape");
    if (asymmetry(c) > 1e-12) throw std::invalid_argument("make_world: state covariance not symmetric");
    const auto eig = sym_eigen_desc(c);
    if (eig.values(w.n - 1) < -1e-10 * std::max(1e-300, c.trace() / static_cast<double>(w.n)))
      throw std::invalid_argument("make_world: state covariance not positive semidefinite");
    w.covariances.push_back(c);
    w.eigenvalues.push_back(eig.values.cwiseMax(0.0));
    w.eigenvectors.push_back(eig.vectors);
  }
  w.transition = transition;
  w.stationary = stationary_distribution(transition);
  return w;
}

RotationSpec spike_planes(Index count, double angle) {
  RotationSpec spec;
  spec.angle = angle;
  for (Index k = 0; k < count; ++k) spec.planes.emplace_back(k, count + k);
  return spec;
}

Matrix rotation_matrix(Index n, const RotationSpec& spec) {
  if (!std::isfinite(spec.angle) || std::abs(spec.angle) > std::numbers::pi)
    throw std::invalid_argument("rotation: angle must be finite with |angle| <= pi");
  std::set<Index> used;
  Matrix g = Matrix::Identity(n, n);
  const double c = std::cos(spec.angle);
  const double s = std::sin(spec.angle);
  for (const auto& [i, j] : spec.planes) {
    if (i < 0 || j < 0 || i >= n || j >= n || i == j)
      throw std::invalid_argument("rotation: plane index out of range");
    if (!used.insert(i).second || !used.insert(j).second)
      throw std::invalid_argument("rotation: planes must be disjoint");
    g(i, i) = c;
    g(j, j) = c;
    g(i, j) = -s;
    g(j, i) = s;
  }
  return g;
}

RegimeWorld build_cyclic_world(Index n, Index S, const std::vector<Vector>& spectra, const RotationSpec& spec,
                               Index T, std::uint64_t seed) {
  if (n < 1 || S < 1) throw std::invalid_argument("build_cyclic_world: need n >= 1 and S >= 1");
  if (spectra.size() != 1 && static_cast<Index>(spectra.size()) != S)
    throw std::invalid_argument("build_cyclic_world: need one spectrum or one per state");
  const Matrix g = rotation_matrix(n, spec);
  Rng rng(seed);
  Matrix v = random_orthogonal(n, rng);

  RegimeWorld w;
  w.n = n;
  w.T = T;
  w.cyclic = true;
  if (T < 1) throw std::invalid_argument("build_cyclic_world: need T >= 1");
  for (Index s = 0; s < S; ++s) {
    const Vector& lambda = spectra.size() == 1 ? spectra.front() : spectra[static_cast<std::size_t>(s)];
    if (lambda.size() != n) throw std::invalid_argument("build_cyclic_world: spectrum length differs from n");
    if ((lambda.array() < 0.0).any()) throw std::invalid_argument("build_cyclic_world: negative eigenvalue");
    for (Index k = 1; k < n; ++k)
      if (lambda(k) > lambda(k - 1)) throw std::invalid_argument("build_cyclic_world: spectrum must be descending");
    Matrix vs = v;
    sign_fix(vs);
    w.eigenvalues.push_back(lambda);
    w.eigenvectors.push_back(vs);
    w.covariances.push_back(reassemble(vs, lambda));
    v = v * g;
  }
  w.transition = Matrix::Zero(S, S);
  for (Index s = 0; s < S; ++s) w.transition(s, (s + 1) % S) = 1.0;
  w.stationary = Vector::Constant(S, 1.0 / static_cast<double>(S));
  return w;
}

RegimeWorld with_persistence(const RegimeWorld& world, double stay) {
  const Index s = world.states();
  if (!(stay >= 0.0 && stay <= 1.0)) throw std::invalid_argument("with_persistence: stay must lie in [0, 1]");
  RegimeWorld w = world;
  w.cyclic = false;
  if (s == 1) {
    w.transition = Matrix::Ones(1, 1);
  } else {
    w.transition = Matrix::Constant(s, s, (1.0 - stay) / static_cast<double>(s - 1));
    w.transition.diagonal().setConstant(stay);
  }
  w.stationary = stationary_distribution(w.transition);
  return w;
}

std::vector<Index> state_path(const RegimeWorld& world, Index n_slices, std::uint64_t seed) {
  std::vector<Index> path(static_cast<std::size_t>(std::max<Index>(n_slices, 0)));
  const Index s = world.states();
  if (world.cyclic) {
    for (Index k = 0; k < n_slices; ++k) path[static_cast<std::size_t>(k)] = k % s;
    return path;
  }
  Rng rng(child_seed(seed, ~std::uint64_t{0}));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto draw = [&](const auto& probs) {
    const double x = u(rng);
    double acc = 0.0;
    for (Index j = 0; j < s; ++j) {
      acc += probs(j);
      if (x < acc) return j;
    }
    return s - 1;
  };
  Index state = draw(world.stationary);
  for (Index k = 0; k < n_slices; ++k) {
    if (k > 0) state = draw(world.transition.row(state));
    path[static_cast<std::size_t>(k)] = state;
  }
  return path;
}

Matrix simulate_slice(const RegimeWorld& world, Index state, std::uint64_t seed) {
  if (state < 0 || state >= world.states()) throw std::invalid_argument("simulate_slice: state out of range");
  Rng rng(seed);
  const auto i = static_cast<std::size_t>(state);
  const Vector root = world.eigenvalues[i].cwiseSqrt();
  return standard_normal(world.T, world.n, rng) * root.asDiagonal() * world.eigenvectors[i].transpose();
}

Matrix slice_covariance(const Eigen::Ref<const Matrix>& slice) {
  if (slice.rows() < 1) throw std::invalid_argument("slice_covariance: empty slice");
  Matrix c = slice.transpose() * slice / static_cast<double>(slice.rows());
  return (c + c.transpose()) / 2.0;
}

Vector oracle_eigs(const Eigen::Ref<const Matrix>& v_hat, const Eigen::Ref<const Matrix>& c_next) {
  return oracle_diagonal(v_hat, c_next);
}

Vector oracle_eigs_hadamard(const Eigen::Ref<const Matrix>& v_hat, const Eigen::Ref<const Matrix>& v_next,
                            const Eigen::Ref<const Vector>& lambda_next) {
  return squared_overlap(v_hat, v_next) * lambda_next;
}

Vector nls_oracle_eigs(const Eigen::Ref<const Matrix>& v_hat, const Eigen::Ref<const Matrix>& v_true,
                       const Eigen::Ref<const Vector>& lambda) {
  if (v_hat.rows() != v_true.rows() || v_true.cols() != lambda.size())
    throw std::invalid_argument("nls_oracle_eigs: shape mismatch");
  return squared_overlap(v_hat, v_true) * lambda;
}

std::vector<SliceEstimate> simulate_path(const RegimeWorld& world, Index n_slices, std::uint64_t seed) {
  const auto path = state_path(world, n_slices, seed);
  std::vector<SliceEstimate> out;
  out.reserve(path.size());
  for (Index k = 0; k < n_slices; ++k) {
    SliceEstimate e;
    e.state = path[static_cast<std::size_t>(k)];
    e.covariance = slice_covariance(simulate_slice(world, e.state, child_seed(seed, static_cast<std::uint64_t>(k))));
    e.eigen = sym_eigen_desc(e.covariance);
    out.push_back(std::move(e));
  }
  return out;
}

Vector ao_from_slices(const std::vector<SliceEstimate>& slices) {
  if (slices.size() < 2) throw std::invalid_argument("ao_regime_eigs: need at least 2 slices");
  Vector sum = Vector::Zero(slices.front().covariance.rows());
  for (std::size_t k = 0; k + 1 < slices.size(); ++k)
    sum += oracle_eigs(slices[k].eigen.vectors, slices[k + 1].covariance);
  return sum / static_cast<double>(slices.size() - 1);
}

Vector ao_regime_eigs(const RegimeWorld& world, Index n_slices, std::uint64_t seed) {
  if (n_slices < 2) throw std::invalid_argument("ao_regime_eigs: need n_slices >= 2");
  return ao_from_slices(simulate_path(world, n_slices, seed));
}

CompareResult frobenius_compare(const RegimeWorld& world, const CompareOptions& options, std::uint64_t seed) {
  if (world.states() < 2) throw std::invalid_argument("frobenius_compare: needs a world with S >= 2");
  if (options.n_slices < 1) throw std::invalid_argument("frobenius_compare: need n_slices >= 1");
  const Index cal = options.calibration_slices > 0 ? options.calibration_slices : options.n_slices;

  CompareResult r;
  r.ao_eigenvalues = ao_regime_eigs(world, std::max<Index>(cal, 2), child_seed(seed, 0));
  const std::uint64_t test_seed = child_seed(seed, 1);
  const auto path = state_path(world, options.n_slices + 1, test_seed);
  const double c = static_cast<double>(world.n) / static_cast<double>(world.T);
  Index wins = 0;
  for (Index k = 0; k < options.n_slices; ++k) {
    const auto now = static_cast<std::size_t>(path[static_cast<std::size_t>(k)]);
    const auto next = static_cast<std::size_t>(path[static_cast<std::size_t>(k) + 1]);
    const Matrix sample =
        slice_covariance(simulate_slice(world, static_cast<Index>(now), child_seed(test_seed, static_cast<std::uint64_t>(k))));
    const auto est = sym_eigen_desc(sample);
    Vector nls;
    switch (options.nls) {
      case NlsTarget::true_eigenvalues:
        nls = nls_oracle_eigs(est.vectors, world.eigenvectors[now], world.eigenvalues[now]);
        break;
      case NlsTarget::sample_eigenvalues:
        nls = nls_oracle_eigs(est.vectors, world.eigenvectors[now], est.values.cwiseMax(0.0));
        break;
      case NlsTarget::analytic:
        nls = nonlinear_shrink(est.values.cwiseMax(0.0), c);
        break;
    }
    const double ao_loss = frobenius_distance(reassemble(est.vectors, r.ao_eigenvalues), world.covariances[next]);
    const double nls_loss = frobenius_distance(reassemble(est.vectors, nls), world.covariances[next]);
    r.ao_loss.push_back(ao_loss);
    r.nls_loss.push_back(nls_loss);
    if (ao_loss < nls_loss) ++wins;
  }
  const auto count = static_cast<double>(options.n_slices);
  for (std::size_t k = 0; k < r.ao_loss.size(); ++k) {
    r.ao_mean += r.ao_loss[k] / count;
    r.nls_mean += r.nls_loss[k] / count;
  }
  r.ao_win_rate = static_cast<double>(wins) / count;
  return r;
}

double independence_gap(const std::vector<Matrix>& overlaps_sq, const std::vector<Vector>& lambdas,
                        const std::vector<Index>& groups) {
  if (overlaps_sq.size() != lambdas.size() || overlaps_sq.empty())
    throw std::invalid_argument("independence_gap: need matching, non-empty inputs");
  if (!groups.empty() && groups.size() != overlaps_sq.size())
    throw std::invalid_argument("independence_gap: one group per sample");
  const Index n = lambdas.front().size();
  struct Acc {
    Matrix r;
    Vector lambda;
    Vector prod;
    Index count = 0;
  };
  std::vector<Acc> acc;
  for (std::size_t k = 0; k < overlaps_sq.size(); ++k) {
    const auto g = static_cast<std::size_t>(groups.empty() ? 0 : groups[k]);
    if (acc.size() <= g) acc.resize(g + 1);
    Acc& a = acc[g];
    if (a.count == 0) {
      a.r = Matrix::Zero(n, n);
      a.lambda = Vector::Zero(n);
      a.prod = Vector::Zero(n);
    }
    a.r += overlaps_sq[k];
    a.lambda += lambdas[k];
    a.prod += overlaps_sq[k] * lambdas[k];
    ++a.count;
  }
  const auto total = static_cast<double>(overlaps_sq.size());
  Vector joint = Vector::Zero(n);
  Vector factored = Vector::Zero(n);
  for (const Acc& a : acc) {
    if (a.count == 0) continue;
    const auto m = static_cast<double>(a.count);
    const double weight = m / total;
    joint += weight * a.prod / m;
    factored += weight * (a.r / m) * (a.lambda / m);
  }
  const double scale = joint.norm();
  return scale > 0.0 ? (joint - factored).norm() / scale : 0.0;
}

double independence_check(const RegimeWorld& world, Index n_slices, std::uint64_t seed) {
  if (n_slices < 10) throw std::invalid_argument("independence_check: need n_slices >= 10");
  const auto slices = simulate_path(world, n_slices + 1, seed);
  std::vector<Matrix> overlaps;
  std::vector<Vector> lambdas;
  std::vector<Index> groups;
  for (std::size_t k = 0; k + 1 < slices.size(); ++k) {
    overlaps.push_back(squared_overlap(slices[k].eigen.vectors, slices[k + 1].eigen.vectors));
    lambdas.push_back(slices[k + 1].eigen.values);
    groups.push_back(slices[k].state * world.states() + slices[k + 1].state);
  }
  return independence_gap(overlaps, lambdas, groups);
}

Vector default_spectrum(Index n) {
  Vector lambda = Vector::Ones(n);
  for (Index i = 0; i < std::min<Index>(n, 10); ++i) lambda(i) = 2.0 * static_cast<double>(10 - i);
  return lambda;
}

SweepResult run_sweep(const SweepConfig& cfg) {
  if (cfg.T.empty() || cfg.angles.empty()) throw std::invalid_argument("sweep: need at least one T and one angle");
  const std::vector<Vector> spectra = cfg.spectra.empty() ? std::vector<Vector>{default_spectrum(cfg.n)} : cfg.spectra;
  SweepResult out;
  std::uint64_t row = 0;
  for (const Index t : cfg.T) {
    for (const double angle : cfg.angles) {
      const std::uint64_t seed = child_seed(cfg.seed, row++);
      const auto planes = std::min<Index>(cfg.planes, cfg.n / 2);
      RegimeWorld world = build_cyclic_world(cfg.n, cfg.states, spectra, spike_planes(planes, angle), t,
                                             child_seed(seed, 0));
      if (cfg.stay >= 0.0) world = with_persistence(world, cfg.stay);
      auto result = frobenius_compare(world, cfg.compare, child_seed(seed, 1));
      out.rows.push_back({angle, t, cfg.n, result.ao_mean, result.nls_mean, result.ao_win_rate});
      out.runs.push_back(std::move(result));
    }
  }
  return out;
}

void write_sweep(std::ostream& os, const std::vector<SweepRow>& rows, char d) {
  os << "angle" << d << "T" << d << "n" << d << "ao_loss_mean" << d << "nls_loss_mean" << d << "ao_win_rate\n";
  for (const auto& r : rows)
    os << fmt(r.angle) << d << r.T << d << r.n << d << fmt(r.ao_loss_mean) << d << fmt(r.nls_loss_mean) << d
       << fmt(r.ao_win_rate) << '\n';
}

void write_slice_losses(std::ostream& os, const SweepResult& result, char d) {
  os << "row" << d << "slice" << d << "ao_loss" << d << "nls_loss\n";
  for (std::size_t i = 0; i < result.runs.size(); ++i) {
    const auto& run = result.runs[i];
    for (std::size_t k = 0; k < run.ao_loss.size(); ++k)
      os << i << d << k << d << fmt(run.ao_loss[k]) << d << fmt(run.nls_loss[k]) << '\n';
  }
}

}  // namespace covfilt
