#pragma once

#include "afdiag/calibration.hpp"
#include "afdiag/criterion.hpp"
#include "afdiag/panel.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace afdiag {

/// Simulated error law: AR(1) in time with coefficient rho and a banded
/// moving average of bandwidth J and weight beta across neighbouring assets,
/// rescaled to unit unconditional variance. `r` latent factors with standard
/// normal loadings and factors are added; `with_observable` adds B_i F_t.
struct DgpConfig {
  Eigen::Index n = 150;
  Eigen::Index T = 150;
  Eigen::Index r = 0;
  double rho = 0.0;
  double beta = 0.0;
  Eigen::Index J = 0;
  bool with_observable = false;
  std::uint64_t seed = 20170701;
  /// AR periods simulated and discarded before date 1.
  Eigen::Index burn_in = 200;

  void validate() const;
  /// sqrt((1 - rho^2) / (1 + 2 J beta^2)).
  double error_scale() const noexcept;
};

/// Contiguous observation windows: T_i ~ U{min_Ti..T}, start ~ U{1..T-T_i+1}.
struct MaskConfig {
  Eigen::Index min_Ti = 1;
  std::uint64_t seed = 20170701;

  void validate(Eigen::Index T) const;
};

struct SimulatedPanel {
  PanelData panel;      // balanced as generated
  FactorSet factors;    // T x 1 with the observable factor, otherwise T x 0
  Eigen::Index true_r = 0;
};

/// Balanced latent-factor panel of replication `replication`.
SimulatedPanel gen_latent_panel(const DgpConfig& cfg, std::uint64_t replication = 0);

/// Latent panel plus one observable factor term B_i F_t. With
/// `zero_loadings` the B_i are forced to zero, leaving the latent panel and
/// an irrelevant regressor.
SimulatedPanel gen_obs_latent_panel(const DgpConfig& cfg, std::uint64_t replication = 0,
                                    bool zero_loadings = false);

MaskMatrix gen_mask(Eigen::Index n, Eigen::Index T, const MaskConfig& mcfg,
                    std::uint64_t replication = 0);

/// Copy of `panel` observed only where `mask` is true.
PanelData apply_mask(const PanelData& panel, const MaskMatrix& mask);

struct ExperimentConfig {
  DgpConfig dgp;
  std::optional<MaskConfig> mask;
  Eigen::Index S = 200;
  PenaltySpec penalty;
  /// Replace penalty.c by a per-replication calibrated constant.
  bool calibrate = false;
  CalibrationOptions calibration;  // `balanced` and `seed` are set per replication
  TrimConfig trim;
  /// false: skip the regression and use the standardized returns directly.
  bool regress = true;
  unsigned threads = 0;

  void validate() const;
};

struct McResult {
  Eigen::Index n = 0, T = 0, r = 0;
  Eigen::Index S = 0;
  Eigen::Index failed = 0;   // replications with no estimate
  // Fractions over the S - failed successful replications.
  double prob_select_M1 = 0.0;
  double over = 0.0;
  double under = 0.0;
  double correct = 0.0;
  std::vector<Eigen::Index> histogram;  // histogram[k] = replications with k_hat = k
  std::vector<Eigen::Index> k_hats;     // -1 for failed replications
  std::vector<double> xi;               // NaN for failed replications
  std::vector<double> c_used;           // NaN for failed replications
  std::vector<std::string> failures;    // one message per failed replication
  double mean_T_bar = 0.0;              // average over replications of mean_i T_i
};

/// Runs S replications in parallel. Replication s draws every random
/// quantity from streams keyed on (dgp.seed, s), so the result does not
/// depend on the thread count.
McResult run_experiment(const ExperimentConfig& cfg);

/// Parsed `simulate` config: one experiment per (n, T) cell.
struct SimulationPlan {
  std::vector<ExperimentConfig> cells;
};

/// key = value lines, '#' comments. n and T accept comma-separated lists.
SimulationPlan parse_simulation_config(const std::string& text);
SimulationPlan load_simulation_config(const std::filesystem::path& path);

/// mc_table.csv: one row per cell with percentages.
void write_mc_table(const std::vector<McResult>& results, const std::filesystem::path& path);
/// JSON summary of the plan and results.
void write_mc_summary(const SimulationPlan& plan, const std::vector<McResult>& results,
                      const std::filesystem::path& path);

}  // namespace afdiag
