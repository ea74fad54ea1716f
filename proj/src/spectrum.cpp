#include "afdiag/spectrum.hpp"

namespace afdiag {

double dual_gram_check(const ResidualPanel& res) {
  const Eigen::MatrixXd rows = res.kept_rows(res.has_standardized());
  const Spectrumd primal = eigen_descending(normalized_gram(rows));
  const Spectrumd dual = eigen_descending(normalized_dual_gram(rows));
  const Eigen::Index m = std::min(primal.size(), dual.size());
  const double top = std::max(primal.mu(1), dual.mu(1));
  double gap = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double a = primal.eigenvalues(j), b = dual.eigenvalues(j);
    // Eigenvalues at round-off level are the structural zeros of a rank-m matrix.
    if (std::max(a, b) <= 1e-12 * top) continue;
    gap = std::max(gap, std::abs(a - b) / std::max(a, b));
  }
  return gap;
}

}  // namespace afdiag
