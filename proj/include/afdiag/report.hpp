#pragma once

#include "afdiag/calibration.hpp"
#include "afdiag/criterion.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace afdiag {

/// Rounds to `digits` significant decimal digits.
double round_significant(double value, int digits = 4);

struct XiEntry {
  Eigen::Index k = 0;
  double xi = 0.0;
  bool operator==(const XiEntry&) const = default;
};

/// Serializable view of a DiagnosticReport. Percentages carry 4
/// significant digits.
struct ReportDocument {
  Eigen::Index n = 0;
  Eigen::Index T = 0;
  Eigen::Index n_chi = 0;
  Eigen::Index d = 0;
  std::string penalty_family;
  double c = 1.0;
  double penalty = 0.0;
  double sigma2_hat = 0.0;
  double penalty_line = 0.0;
  Eigen::Index k_max = 0;
  std::vector<double> eigenvalues;     // mu_1..mu_{k_max}
  std::vector<double> share_pct;       // 100 mu_j / sigma2
  std::vector<double> cumulative_pct;  // running sums of share_pct
  std::vector<double> frobenius_pct;   // 100 mu_j^2 / sum mu^2, empty for a zero spectrum
  std::vector<XiEntry> xi;             // k = 0..k_max
  Eigen::Index k_hat = 0;
  std::string selected;                // "M1" or "M2"
  std::optional<double> log_xi;
  std::optional<double> calibrated_c;

  bool operator==(const ReportDocument&) const = default;
};

ReportDocument make_document(const DiagnosticReport& report, Eigen::Index n, Eigen::Index d,
                             std::optional<double> calibrated_c = std::nullopt);

void to_json(nlohmann::json& j, const XiEntry& e);
void from_json(const nlohmann::json& j, XiEntry& e);
void to_json(nlohmann::json& j, const ReportDocument& doc);
void from_json(const nlohmann::json& j, ReportDocument& doc);

void write_report_json(const ReportDocument& doc, const std::filesystem::path& path);
ReportDocument read_report_json(const std::filesystem::path& path);

/// Columns k, mu_k, mu_k_cum, mu_k_sq_share, penalty_line for k = 1..m, with
/// mu_k rescaled by sigma2.
void write_scree_csv(const DiagnosticReport& report, const std::filesystem::path& path);

/// Two-panel SVG: shares of the first five eigenvalues with the penalty
/// cut-off (A) and their cumulative stacking (B).
std::string scree_svg(const DiagnosticReport& report);
void write_scree_svg(const DiagnosticReport& report, const std::filesystem::path& path);

/// One row per grid point: c, variance, interval (0 outside every
/// stability interval), min/max k_hat across subsamples, selected flag.
void write_calibration_csv(const CalibrationResult& result, const std::filesystem::path& path);

}  // namespace afdiag
