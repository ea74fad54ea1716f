#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace afdiag {

using MaskMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Unbalanced return panel: n assets by T dates with an observability mask.
///
/// Unobserved cells hold NaN in `returns()`; every consumer must consult
/// `mask()` rather than the stored value.
class PanelData {
 public:
  PanelData() = default;
  PanelData(std::vector<std::string> asset_ids, Eigen::MatrixXd returns,
            MaskMatrix mask);

  Eigen::Index n() const noexcept { return returns_.rows(); }
  Eigen::Index T() const noexcept { return returns_.cols(); }
  const Eigen::MatrixXd& returns() const noexcept { return returns_; }
  const MaskMatrix& mask() const noexcept { return mask_; }
  const std::vector<std::string>& asset_ids() const noexcept { return ids_; }
  /// T_i, the number of observed dates of each asset.
  const Eigen::VectorXi& obs_counts() const noexcept { return obs_counts_; }

  bool balanced() const noexcept { return mask_.all(); }
  /// Index of `asset_id`, or -1.
  Eigen::Index find(const std::string& asset_id) const;

 private:
  std::vector<std::string> ids_;
  Eigen::MatrixXd returns_;
  MaskMatrix mask_;
  Eigen::VectorXi obs_counts_;
};

/// Observable factors f_t, one row per date. With K = 0 `values` is T x 0,
/// so the date count is still carried.
struct FactorSet {
  Eigen::MatrixXd values;  // T x K
  std::vector<std::string> names;

  Eigen::Index T() const noexcept { return values.rows(); }
  Eigen::Index K() const noexcept { return values.cols(); }
};

/// Lagged instruments. Row t of `common` holds Z_{t-1}, already aligned by
/// the caller; column 0 is the constant when p >= 1. `specific[i]` is the
/// T x q block of asset i, NaN where not supplied.
struct InstrumentSet {
  Eigen::MatrixXd common;                 // T x p
  std::vector<Eigen::MatrixXd> specific;  // n blocks of T x q

  Eigen::Index p() const noexcept { return common.cols(); }
  Eigen::Index q() const noexcept {
    return specific.empty() ? 0 : specific.front().cols();
  }
};

/// Trimming thresholds: chi1 caps the condition number of the per-asset
/// design, chi2 caps tau_i = T / T_i.
struct TrimConfig {
  double chi1 = 15.0;
  double chi2 = 10.0;

  void validate() const;
};

struct ReturnsSchema {
  std::string asset_column = "asset_id";
  std::string time_column = "time";
  std::string return_column = "return";
  /// Number of dates; 0 means the largest time index in the file.
  Eigen::Index T = 0;
};

PanelData load_panel(const std::filesystem::path& path,
                     const ReturnsSchema& schema = {});
void write_panel(const PanelData& panel, const std::filesystem::path& path);

/// Dense `time,<name1>,...` file with every date 1..T present.
FactorSet load_factors(const std::filesystem::path& path, Eigen::Index T);
/// Dense `time,z1,...,zp` file.
Eigen::MatrixXd load_common_instruments(const std::filesystem::path& path,
                                        Eigen::Index T);
/// Sparse `asset_id,time,z1,...,zq` file keyed on the panel's asset ids.
std::vector<Eigen::MatrixXd> load_specific_instruments(
    const std::filesystem::path& path, const PanelData& panel);

/// Throws AlignmentError naming the first object whose shape disagrees with
/// the panel.
void validate_alignment(const PanelData& panel, const FactorSet& factors,
                        const InstrumentSet& instruments);

}  // namespace afdiag
