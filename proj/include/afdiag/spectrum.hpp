#pragma once

#include "afdiag/error.hpp"
#include "afdiag/regress.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace afdiag {

/// Descending eigenvalues of a normalized residual Gram matrix.
///
/// `eigenvalues` holds the m = min(n_chi, T) values that can be nonzero;
/// `sigma2_hat` is the trace of the Gram matrix, which equals the sum of all
/// of its eigenvalues. Negative round-off is clamped to zero.
template <typename Scalar = double>
struct Spectrum {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector eigenvalues;
  Scalar sigma2_hat = Scalar(0);
  Eigen::Index n_chi = 0;
  Eigen::Index T = 0;

  Eigen::Index size() const noexcept { return eigenvalues.size(); }
  /// mu_j with 1-based j; zero past the stored values.
  Scalar mu(Eigen::Index j) const {
    if (j < 1) throw IndexError("eigenvalue index starts at 1");
    return j <= size() ? eigenvalues(j - 1) : Scalar(0);
  }
};

using Spectrumd = Spectrum<double>;

/// (1/(n T)) E'E for the n x T matrix of residual rows E, where n = rows.
/// Built as a lower-triangular rank update and mirrored, so the result is
/// exactly symmetric.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> normalized_gram(
    const Eigen::MatrixBase<Derived>& rows) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = rows.rows(), T = rows.cols();
  if (n < 1) throw DomainError("Gram matrix of an empty cross-section");
  Matrix G = Matrix::Zero(T, T);
  G.template selfadjointView<Eigen::Lower>().rankUpdate(
      rows.transpose(), Scalar(1) / (Scalar(n) * Scalar(T)));
  G.template triangularView<Eigen::StrictlyUpper>() = G.transpose();
  return G;
}

/// (1/(n T)) E E', the n x n companion of normalized_gram with the same
/// nonzero eigenvalues.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> normalized_dual_gram(
    const Eigen::MatrixBase<Derived>& rows) {
  // Both forms share the 1/(n T) factor, so the dual is the transpose's Gram.
  return normalized_gram(rows.transpose());
}

/// T x T normalized Gram matrix of the kept assets.
inline Eigen::MatrixXd gram_matrix(const ResidualPanel& res, bool use_standardized = true) {
  if (res.n_chi < 1) throw DomainError("Gram matrix needs at least one kept asset");
  return normalized_gram(res.kept_rows(use_standardized));
}

inline constexpr double kSymmetryTolerance = 1e-12;

/// The `count` largest eigenvalues of the symmetric matrix M in descending
/// order (all of them when count < 0). Throws DomainError when M is not
/// symmetric to within 1e-12 relative to its largest entry.
template <typename Derived>
Spectrum<typename Derived::Scalar> eigen_descending(const Eigen::MatrixBase<Derived>& M,
                                                    Eigen::Index count = -1) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (M.rows() != M.cols()) throw DomainError("eigenvalues of a non-square matrix");
  const Eigen::Index dim = M.rows();
  if (count < 0) count = dim;
  if (count < 1 || count > dim) throw IndexError("eigenvalue count outside [1, dim]");
  const Matrix A = M;
  const Scalar scale = std::max(Scalar(1), A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > Scalar(kSymmetryTolerance) * scale)
    throw DomainError("matrix is not symmetric");

  const Eigen::SelfAdjointEigenSolver<Matrix> solver(A, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw DomainError("eigensolver did not converge");
  // Eigen returns ascending order.
  Spectrum<Scalar> out;
  out.eigenvalues = solver.eigenvalues().reverse().head(count).cwiseMax(Scalar(0));
  out.sigma2_hat = A.trace();
  out.T = dim;
  return out;
}

/// Spectrum of the normalized Gram matrix of residual rows (n x T), solving
/// whichever of the T x T and n x n forms is smaller.
template <typename Derived>
Spectrum<typename Derived::Scalar> rows_spectrum(const Eigen::MatrixBase<Derived>& rows) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = rows.rows(), T = rows.cols();
  Spectrum<Scalar> out = n < T ? eigen_descending(normalized_dual_gram(rows))
                               : eigen_descending(normalized_gram(rows));
  out.n_chi = n;
  out.T = T;
  return out;
}

inline Spectrumd residual_spectrum(const ResidualPanel& res, bool use_standardized = true) {
  if (res.n_chi < 1) throw DomainError("spectrum needs at least one kept asset");
  return rows_spectrum(res.kept_rows(use_standardized));
}

/// Largest relative gap between the nonzero eigenvalues of the T x T and
/// n_chi x n_chi normalized Gram matrices.
double dual_gram_check(const ResidualPanel& res);

template <typename Scalar>
struct Contributions {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> ratios;      // mu_j / sigma2
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> cumulative;  // running sums of ratios
  Scalar cumulative_k = Scalar(0);                      // sum_{j<=k} mu_j / sigma2
  Scalar incremental = Scalar(0);                       // mu_{k+1} / sigma2
};

template <typename Scalar>
Contributions<Scalar> contributions(const Spectrum<Scalar>& spec, Eigen::Index k) {
  if (k < 0 || k >= spec.size()) throw IndexError("contribution index outside the spectrum");
  if (!(spec.sigma2_hat > Scalar(0))) throw DegenerateError("zero residual variance");
  Contributions<Scalar> out;
  out.ratios = (spec.eigenvalues / spec.sigma2_hat).cwiseMin(Scalar(1));
  out.cumulative.resize(out.ratios.size());
  Scalar running(0);
  for (Eigen::Index j = 0; j < out.ratios.size(); ++j) {
    running += out.ratios(j);
    out.cumulative(j) = std::min(running, Scalar(1));
  }
  out.cumulative_k = k == 0 ? Scalar(0) : out.cumulative(k - 1);
  out.incremental = out.ratios(k);
  return out;
}

template <typename Scalar>
struct FrobeniusShares {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> shares;      // mu_j^2 / sum_l mu_l^2
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> cumulative;
  Scalar cumulative_k = Scalar(0);                      // sum_{j<=k} shares
};

template <typename Scalar>
FrobeniusShares<Scalar> frobenius_ratios(const Spectrum<Scalar>& spec, Eigen::Index k) {
  if (k < 0 || k > spec.size()) throw IndexError("Frobenius index outside the spectrum");
  const Scalar total = spec.eigenvalues.squaredNorm();
  if (!(total > Scalar(0))) throw DegenerateError("zero spectrum has no Frobenius shares");
  FrobeniusShares<Scalar> out;
  out.shares = spec.eigenvalues.array().square() / total;
  out.cumulative.resize(out.shares.size());
  Scalar running(0);
  for (Eigen::Index j = 0; j < out.shares.size(); ++j) {
    running += out.shares(j);
    out.cumulative(j) = std::min(running, Scalar(1));
  }
  out.cumulative_k = k == 0 ? Scalar(0) : out.cumulative(k - 1);
  return out;
}

}  // namespace afdiag
