#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace covfilt {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct SymEigen {
  VectorX<Scalar> values;   // descending
  MatrixX<Scalar> vectors;  // column k pairs with values(k)
};

/// Eigendecomposition of a symmetric matrix with eigenvalues in descending
/// order. Equal eigenvalues keep the solver's index order. Each eigenvector is
/// signed so that its largest-magnitude component is positive.
template <typename Derived>
SymEigen<typename Derived::Scalar> sym_eigen_desc(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  const MatrixX<Scalar> sym = (a + a.transpose()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> solver(sym);
  const Index n = sym.rows();

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  const auto& ev = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(),
                   [&](Index i, Index j) { return ev(i) > ev(j); });

  SymEigen<Scalar> out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Index k = 0; k < n; ++k) {
    const Index src = order[static_cast<std::size_t>(k)];
    out.values(k) = ev(src);
    auto col = out.vectors.col(k);
    col = solver.eigenvectors().col(src);
    Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col(arg) < Scalar(0)) col = -col;
  }
  return out;
}

/// V diag(d) V^T
template <typename DerivedV, typename DerivedD>
auto reassemble(const Eigen::MatrixBase<DerivedV>& v, const Eigen::MatrixBase<DerivedD>& d) {
  using Scalar = typename DerivedV::Scalar;
  MatrixX<Scalar> out = v * d.asDiagonal() * v.transpose();
  return MatrixX<Scalar>((out + out.transpose()) / Scalar(2));
}

/// diag(V^T C V): the Frobenius-optimal eigenvalues for C in the basis V.
template <typename DerivedV, typename DerivedC>
auto oracle_diagonal(const Eigen::MatrixBase<DerivedV>& v, const Eigen::MatrixBase<DerivedC>& c) {
  using Scalar = typename DerivedV::Scalar;
  return VectorX<Scalar>((c * v).cwiseProduct(v).colwise().sum().transpose());
}

/// Element-wise squared overlap (A^T B)∘2. Row sums are 1 for orthonormal inputs.
template <typename DerivedA, typename DerivedB>
auto squared_overlap(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  return MatrixX<Scalar>((a.transpose() * b).cwiseAbs2());
}

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar frobenius_distance(const Eigen::MatrixBase<DerivedA>& a,
                                             const Eigen::MatrixBase<DerivedB>& b) {
  return (a - b).norm();
}

template <typename Derived>
typename Derived::Scalar orthonormality_error(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const MatrixX<Scalar> gram = v.transpose() * v;
  return (gram - MatrixX<Scalar>::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

/// Relative asymmetry max|A - A^T| / max|A|; zero matrices count as symmetric.
template <typename Derived>
typename Derived::Scalar asymmetry(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  const Scalar scale = a.cwiseAbs().maxCoeff();
  if (scale == Scalar(0)) return Scalar(0);
  return (a - a.transpose()).cwiseAbs().maxCoeff() / scale;
}

}  // namespace covfilt
