#pragma once

#include "afdiag/panel.hpp"

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace afdiag {

enum class ModelKind {
  TimeInvariant,              // x_t = (1, f_t')'
  ConditionalCommon,          // instruments Z_{t-1} only
  ConditionalCommonSpecific,  // Z_{t-1} and asset-specific Z_{i,t-1}
};

/// Regression specification and its dimension accounting.
struct ModelSpec {
  ModelKind kind = ModelKind::TimeInvariant;
  Eigen::Index K = 0;  // observable factors
  Eigen::Index p = 0;  // common instruments, constant included
  Eigen::Index q = 0;  // asset-specific instruments

  /// d1 = p(p+1)/2 + pq, the part built from instruments alone.
  Eigen::Index d1() const noexcept;
  /// d2 = K(p+q), the scaled-factor part.
  Eigen::Index d2() const noexcept;
  /// K+1 for TimeInvariant, d1+d2 otherwise.
  Eigen::Index dimension() const noexcept;

  void validate() const;
  static ModelSpec from_data(ModelKind kind, const FactorSet& factors,
                             const InstrumentSet& instruments);
};

/// Per-asset OLS output.
struct AssetFit {
  Eigen::VectorXd beta;       // empty when qxx is singular
  Eigen::MatrixXd qxx;        // (1/T_i) sum_t I_{i,t} x x'
  double cond_number = 0.0;   // sqrt(mu_1 / mu_d); +inf when singular
  double tau = 0.0;           // T / T_i
  bool singular = false;
  bool kept = false;
  /// R - x'beta on observed dates, zero elsewhere (and zero when singular).
  Eigen::VectorXd residuals;
};

/// Zero-filled residual panel for the whole cross-section; rows of non-kept
/// assets are retained for reporting but excluded from every sum.
struct ResidualPanel {
  Eigen::MatrixXd raw;           // n x T
  Eigen::MatrixXd standardized;  // n x T once standardize_residuals ran, else empty
  std::vector<bool> kept_flags;
  Eigen::Index n_chi = 0;

  Eigen::Index T() const noexcept { return raw.cols(); }
  bool has_standardized() const noexcept { return standardized.size() > 0; }
  /// Rows of the kept assets stacked in index order. Uses the standardized
  /// residuals when `standardized` is true.
  Eigen::MatrixXd kept_rows(bool standardized) const;
};

/// vech of the symmetric matrix with diagonal z_k^2 and off-diagonal
/// 2 z_k z_l, stacking the lower triangle column by column.
Eigen::VectorXd vech_instrument_square(const Eigen::Ref<const Eigen::VectorXd>& z);

/// T x d design of one asset. Asset-specific instruments must be finite on
/// every date where `observed` is true (all dates when `observed` is empty).
Eigen::MatrixXd build_regressors(const ModelSpec& spec, const FactorSet& factors,
                                 const InstrumentSet& instruments, Eigen::Index asset,
                                 const std::vector<bool>& observed = {});

/// Singularity cutoff on mu_d(Q) relative to mu_1(Q).
inline constexpr double kSingularRatio = 1e-12;

AssetFit fit_asset(const PanelData& panel, const Eigen::Ref<const Eigen::MatrixXd>& X,
                   Eigen::Index asset, const TrimConfig& trim = {});

/// Fits every asset and assembles the raw residual panel. Standardized
/// residuals are left empty; see standardize_residuals.
std::pair<std::vector<AssetFit>, ResidualPanel> fit_panel(
    const PanelData& panel, const FactorSet& factors, const InstrumentSet& instruments,
    const ModelSpec& spec, const TrimConfig& trim, unsigned threads = 0);

/// Divides each kept row by sqrt((1/T) sum_t raw^2), zero-filled cells
/// included, so kept rows satisfy (1/T) sum_t e^2 = 1.
ResidualPanel standardize_residuals(ResidualPanel residuals);

}  // namespace afdiag
