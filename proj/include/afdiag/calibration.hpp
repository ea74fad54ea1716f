#pragma once

#include "afdiag/criterion.hpp"
#include "afdiag/panel.hpp"
#include "afdiag/regress.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace afdiag {

/// Data-driven choice of the penalty multiplier c.
///
/// For every c on the grid, k_hat(c) is computed on nested random
/// cross-sectional subsamples of increasing size and its variance across the
/// subsamples is recorded. Maximal runs of grid points with variance <=
/// `tolerance` are the stability intervals. The first run is the plateau
/// where every subsample returns the cap k_max; balanced panels take the
/// smallest c of the second run, unbalanced panels that of the third.
struct CalibrationOptions {
  std::vector<double> c_grid;     // ascending, at least 10 points
  Eigen::Index n_subsamples = 33;
  bool balanced = true;
  std::uint64_t seed = 20170701;
  double tolerance = 0.0;
  /// Cap on k_hat during calibration (further capped by the smallest
  /// subsample size and T - 1).
  Eigen::Index k_max = 8;
  /// Smallest subsample is max(ceil(n / n_subsamples), ceil(min_fraction * n)).
  double min_fraction = 0.25;
  unsigned threads = 0;

  void validate() const;
  /// 2 for balanced panels, 3 otherwise.
  std::size_t required_interval() const noexcept { return balanced ? 2 : 3; }
};

/// Inclusive range of grid indices.
struct StabilityInterval {
  std::size_t first = 0;
  std::size_t last = 0;
  bool operator==(const StabilityInterval&) const = default;
};

struct CalibrationResult {
  double c_star = 0.0;
  std::size_t c_star_index = 0;
  std::size_t interval_used = 0;   // 1-based
  Eigen::Index k_max = 0;          // effective cap
  std::vector<double> grid;
  std::vector<double> variance;            // per grid point
  std::vector<Eigen::Index> subsample_sizes;
  Eigen::MatrixXi k_hats;                  // subsamples x grid
  std::vector<StabilityInterval> intervals;
};

/// Evenly spaced grid lo, lo + step, ... up to hi (inclusive within step/1e6).
std::vector<double> make_grid(double lo, double hi, double step);

/// Maximal runs of consecutive entries with variance <= tolerance.
std::vector<StabilityInterval> stability_intervals(std::span<const double> variance,
                                                   double tolerance = 0.0);

/// Grid index of the smallest c in the `interval`-th (1-based) stability
/// interval. Throws CalibrationError when fewer intervals exist.
std::size_t select_stable_index(std::span<const double> variance, std::size_t interval,
                                double tolerance = 0.0);

/// Subsample sizes equally spaced from the smallest size up to n.
std::vector<Eigen::Index> subsample_sizes(Eigen::Index n, const CalibrationOptions& options);

/// Subsample k_hat matrix, variances and stability intervals, without
/// choosing c*.
CalibrationResult calibration_table(const Eigen::Ref<const Eigen::MatrixXd>& kept_rows,
                                    PenaltyFamily family, const CalibrationOptions& options);

/// Sets c_star from the required stability interval; throws CalibrationError.
void select_c_star(CalibrationResult& result, const CalibrationOptions& options);

/// Calibrates on already standardized residual rows of the kept assets
/// (n_chi x T). Residuals from per-asset OLS do not depend on which other
/// assets are in the subsample, so each subsample is a row subset.
CalibrationResult calibrate_on_residuals(const Eigen::Ref<const Eigen::MatrixXd>& kept_rows,
                                         PenaltyFamily family, const CalibrationOptions& options);

/// Fits the panel, standardizes residuals, then calibrates.
CalibrationResult calibrate_constant(const PanelData& panel, const FactorSet& factors,
                                     const InstrumentSet& instruments, const ModelSpec& spec,
                                     const TrimConfig& trim, PenaltyFamily family,
                                     const CalibrationOptions& options);

}  // namespace afdiag
