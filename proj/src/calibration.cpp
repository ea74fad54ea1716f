#include "afdiag/calibration.hpp"

#include "afdiag/error.hpp"
#include "afdiag/parallel.hpp"
#include "afdiag/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace afdiag {

void CalibrationOptions::validate() const {
  if (c_grid.size() < 10)
    throw ValidationError("calibration grid needs at least 10 points, got " +
                          std::to_string(c_grid.size()));
  for (std::size_t i = 0; i < c_grid.size(); ++i) {
    if (!(c_grid[i] > 0.0) || !std::isfinite(c_grid[i]))
      throw ValidationError("calibration grid values must be positive");
    if (i > 0 && !(c_grid[i] > c_grid[i - 1]))
      throw ValidationError("calibration grid must be strictly ascending");
  }
  if (n_subsamples < 2) throw ValidationError("calibration needs at least 2 subsamples");
  if (!(tolerance >= 0.0)) throw ValidationError("stability tolerance must be >= 0");
  if (k_max < 1) throw ValidationError("calibration k_max must be >= 1");
  if (!(min_fraction > 0.0 && min_fraction <= 1.0))
    throw ValidationError("min_fraction must lie in (0, 1]");
}

std::vector<double> make_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo) || !(lo > 0.0))
    throw ValidationError("grid needs 0 < lo <= hi and step > 0");
  std::vector<double> grid;
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step * (1.0 + 1e-12) + 1e-6)) + 1;
  grid.reserve(count);
  for (std::size_t i = 0; i < count; ++i) grid.push_back(lo + static_cast<double>(i) * step);
  return grid;
}

std::vector<StabilityInterval> stability_intervals(std::span<const double> variance,
                                                   double tolerance) {
  std::vector<StabilityInterval> runs;
  std::size_t i = 0;
  while (i < variance.size()) {
    if (variance[i] <= tolerance) {
      const std::size_t first = i;
      while (i < variance.size() && variance[i] <= tolerance) ++i;
      runs.push_back({first, i - 1});
    } else {
      ++i;
    }
  }
  return runs;
}

std::size_t select_stable_index(std::span<const double> variance, std::size_t interval,
                                double tolerance) {
  const auto runs = stability_intervals(variance, tolerance);
  if (interval < 1 || runs.size() < interval)
    throw CalibrationError("calibration needs stability interval " + std::to_string(interval) +
                               " but found " + std::to_string(runs.size()),
                           runs.size());
  return runs[interval - 1].first;
}

std::vector<Eigen::Index> subsample_sizes(Eigen::Index n, const CalibrationOptions& options) {
  if (n < 2) throw DegenerateError("calibration needs at least 2 kept assets");
  const Eigen::Index J = options.n_subsamples;
  const auto by_count = static_cast<Eigen::Index>((n + J - 1) / J);
  const auto by_fraction =
      static_cast<Eigen::Index>(std::ceil(options.min_fraction * static_cast<double>(n) - 1e-9));
  const Eigen::Index lo = std::clamp<Eigen::Index>(std::max(by_count, by_fraction), 2, n);
  std::vector<Eigen::Index> sizes(static_cast<std::size_t>(J));
  for (Eigen::Index j = 0; j < J; ++j)
    sizes[j] = lo + static_cast<Eigen::Index>(std::llround(static_cast<double>(n - lo) *
                                                           static_cast<double>(j) /
                                                           static_cast<double>(J - 1)));
  return sizes;
}

CalibrationResult calibration_table(const Eigen::Ref<const Eigen::MatrixXd>& kept_rows,
                                    PenaltyFamily family, const CalibrationOptions& options) {
  options.validate();
  const Eigen::Index n = kept_rows.rows();
  const Eigen::Index T = kept_rows.cols();
  if (T < 2) throw DegenerateError("calibration needs T >= 2");

  CalibrationResult result;
  result.grid = options.c_grid;
  result.subsample_sizes = subsample_sizes(n, options);
  const auto J = result.subsample_sizes.size();
  result.k_max = std::min({options.k_max, result.subsample_sizes.front(), T - 1});

  // One permutation fixes the nesting: subsample j is its first n_j rows.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  auto engine = make_stream(options.seed, 0, StreamKind::Subsample);
  std::shuffle(order.begin(), order.end(), engine);
  Eigen::MatrixXd shuffled(n, T);
  for (Eigen::Index r = 0; r < n; ++r) shuffled.row(r) = kept_rows.row(order[r]);

  // T x T sums accumulate along the nesting; only subsamples with n_j >= T use them.
  std::vector<Eigen::MatrixXd> snapshots(J);
  {
    Eigen::MatrixXd running = Eigen::MatrixXd::Zero(T, T);
    Eigen::Index filled = 0;
    for (std::size_t j = 0; j < J; ++j) {
      const Eigen::Index nj = result.subsample_sizes[j];
      if (nj < T) continue;
      running.selfadjointView<Eigen::Lower>().rankUpdate(
          shuffled.middleRows(filled, nj - filled).transpose());
      filled = nj;
      snapshots[j] = running;
    }
  }

  std::vector<Spectrumd> spectra(J);
  parallel_for(J, options.threads, [&](std::size_t j) {
    const Eigen::Index nj = result.subsample_sizes[j];
    if (nj < T) {
      spectra[j] = rows_spectrum(shuffled.topRows(nj));
    } else {
      Eigen::MatrixXd G = snapshots[j] / (static_cast<double>(nj) * static_cast<double>(T));
      G.triangularView<Eigen::StrictlyUpper>() = G.transpose();
      spectra[j] = eigen_descending(G);
      spectra[j].n_chi = nj;
    }
    snapshots[j].resize(0, 0);
  });

  const auto G = result.grid.size();
  result.k_hats.resize(static_cast<Eigen::Index>(J), static_cast<Eigen::Index>(G));
  for (std::size_t j = 0; j < J; ++j) {
    const double base = penalty_base<double>(result.subsample_sizes[j], T, family);
    for (std::size_t c = 0; c < G; ++c)
      result.k_hats(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) =
          static_cast<int>(std::min(estimate_k(spectra[j], result.grid[c] * base), result.k_max));
  }

  // Integer moments keep the variance exactly zero when all subsamples agree.
  result.variance.resize(G);
  const auto Jd = static_cast<long long>(J);
  for (std::size_t c = 0; c < G; ++c) {
    long long sum = 0, sum_sq = 0;
    for (std::size_t j = 0; j < J; ++j) {
      const long long k = result.k_hats(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c));
      sum += k;
      sum_sq += k * k;
    }
    result.variance[c] = static_cast<double>(Jd * sum_sq - sum * sum) / static_cast<double>(Jd * Jd);
  }

  result.intervals = stability_intervals(result.variance, options.tolerance);
  result.interval_used = options.required_interval();
  return result;
}

void select_c_star(CalibrationResult& result, const CalibrationOptions& options) {
  result.interval_used = options.required_interval();
  result.c_star_index = select_stable_index(result.variance, result.interval_used, options.tolerance);
  result.c_star = result.grid[result.c_star_index];
}

CalibrationResult calibrate_on_residuals(const Eigen::Ref<const Eigen::MatrixXd>& kept_rows,
                                         PenaltyFamily family, const CalibrationOptions& options) {
  CalibrationResult result = calibration_table(kept_rows, family, options);
  select_c_star(result, options);
  return result;
}

CalibrationResult calibrate_constant(const PanelData& panel, const FactorSet& factors,
                                     const InstrumentSet& instruments, const ModelSpec& spec,
                                     const TrimConfig& trim, PenaltyFamily family,
                                     const CalibrationOptions& options) {
  options.validate();
  auto [fits, residuals] = fit_panel(panel, factors, instruments, spec, trim, options.threads);
  residuals = standardize_residuals(std::move(residuals));
  return calibrate_on_residuals(residuals.kept_rows(true), family, options);
}

}  // namespace afdiag
