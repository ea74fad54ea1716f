#include "afdiag/report.hpp"

#include "afdiag/csv.hpp"
#include "afdiag/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace afdiag {

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

}  // namespace

double round_significant(double value, int digits) {
  if (value == 0.0 || !std::isfinite(value)) return value;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*e", digits - 1, value);
  return std::strtod(buf, nullptr);
}

ReportDocument make_document(const DiagnosticReport& report, Eigen::Index n, Eigen::Index d,
                             std::optional<double> calibrated_c) {
  ReportDocument doc;
  doc.n = n;
  doc.T = report.T;
  doc.n_chi = report.n_chi;
  doc.d = d;
  doc.penalty_family = to_string(report.penalty_spec.family);
  doc.c = report.penalty_spec.c;
  doc.penalty = report.penalty;
  doc.sigma2_hat = report.spectrum.sigma2_hat;
  doc.penalty_line = report.penalty_line();
  doc.k_max = report.k_max;
  const auto& shares = report.variance_shares;
  for (Eigen::Index j = 0; j < report.k_max; ++j) {
    doc.eigenvalues.push_back(report.spectrum.eigenvalues(j));
    doc.share_pct.push_back(round_significant(100.0 * shares.ratios(j)));
    doc.cumulative_pct.push_back(round_significant(100.0 * shares.cumulative(j)));
    if (report.frobenius)
      doc.frobenius_pct.push_back(round_significant(100.0 * report.frobenius->shares(j)));
  }
  for (std::size_t k = 0; k < report.xi_sequence.size(); ++k)
    doc.xi.push_back({static_cast<Eigen::Index>(k), report.xi_sequence[k]});
  doc.k_hat = report.k_hat;
  doc.selected = report.selected() == SelectedModel::M1 ? "M1" : "M2";
  doc.log_xi = report.log_xi;
  doc.calibrated_c = calibrated_c;
  return doc;
}

void to_json(nlohmann::json& j, const XiEntry& e) { j = {{"k", e.k}, {"xi", e.xi}}; }

void from_json(const nlohmann::json& j, XiEntry& e) {
  j.at("k").get_to(e.k);
  j.at("xi").get_to(e.xi);
}

void to_json(nlohmann::json& j, const ReportDocument& doc) {
  j = {{"n", doc.n},
       {"T", doc.T},
       {"n_chi", doc.n_chi},
       {"d", doc.d},
       {"penalty", {{"family", doc.penalty_family}, {"c", doc.c}, {"value", doc.penalty}}},
       {"sigma2_hat", doc.sigma2_hat},
       {"penalty_line", doc.penalty_line},
       {"k_max", doc.k_max},
       {"eigenvalues", doc.eigenvalues},
       {"share_pct", doc.share_pct},
       {"cumulative_pct", doc.cumulative_pct},
       {"frobenius_pct", doc.frobenius_pct},
       {"xi", doc.xi},
       {"k_hat", doc.k_hat},
       {"selected", doc.selected},
       {"log_xi", doc.log_xi ? nlohmann::json(*doc.log_xi) : nlohmann::json(nullptr)},
       {"calibrated_c",
        doc.calibrated_c ? nlohmann::json(*doc.calibrated_c) : nlohmann::json(nullptr)}};
}

void from_json(const nlohmann::json& j, ReportDocument& doc) {
  j.at("n").get_to(doc.n);
  j.at("T").get_to(doc.T);
  j.at("n_chi").get_to(doc.n_chi);
  j.at("d").get_to(doc.d);
  const auto& p = j.at("penalty");
  p.at("family").get_to(doc.penalty_family);
  p.at("c").get_to(doc.c);
  p.at("value").get_to(doc.penalty);
  j.at("sigma2_hat").get_to(doc.sigma2_hat);
  j.at("penalty_line").get_to(doc.penalty_line);
  j.at("k_max").get_to(doc.k_max);
  j.at("eigenvalues").get_to(doc.eigenvalues);
  j.at("share_pct").get_to(doc.share_pct);
  j.at("cumulative_pct").get_to(doc.cumulative_pct);
  j.at("frobenius_pct").get_to(doc.frobenius_pct);
  j.at("xi").get_to(doc.xi);
  j.at("k_hat").get_to(doc.k_hat);
  j.at("selected").get_to(doc.selected);
  doc.log_xi.reset();
  doc.calibrated_c.reset();
  if (j.contains("log_xi") && !j["log_xi"].is_null()) doc.log_xi = j["log_xi"].get<double>();
  if (j.contains("calibrated_c") && !j["calibrated_c"].is_null())
    doc.calibrated_c = j["calibrated_c"].get<double>();
}

void write_report_json(const ReportDocument& doc, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << nlohmann::json(doc).dump(2) << '\n';
}

ReportDocument read_report_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return nlohmann::json::parse(in).get<ReportDocument>();
}

void write_scree_csv(const DiagnosticReport& report, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "k,mu_k,mu_k_cum,mu_k_sq_share,penalty_line\n";
  const auto& shares = report.variance_shares;
  const std::string line = csv::format_double(report.penalty_line());
  for (Eigen::Index j = 0; j < report.spectrum.size(); ++j) {
    const double sq = report.frobenius ? report.frobenius->shares(j) : 0.0;
    out << j + 1 << ',' << csv::format_double(shares.ratios(j)) << ','
        << csv::format_double(shares.cumulative(j)) << ',' << csv::format_double(sq) << ','
        << line << '\n';
  }
}

std::string scree_svg(const DiagnosticReport& report) {
  constexpr double kWidth = 720, kHeight = 320, kPanel = 330, kLeft = 50, kTop = 40,
                   kPlotH = 230, kPlotW = 260;
  const auto& shares = report.variance_shares;
  const Eigen::Index bars = std::min<Eigen::Index>(5, report.spectrum.size());
  const double cut = 100.0 * report.penalty_line();

  double top_a = cut;
  for (Eigen::Index j = 0; j < bars; ++j) top_a = std::max(top_a, 100.0 * shares.ratios(j));
  top_a = top_a > 0.0 ? top_a * 1.15 : 1.0;
  const double top_b = std::max(1e-9, 100.0 * shares.cumulative(bars - 1)) * 1.15;

  static constexpr const char* kColors[] = {"#1f4e79", "#2e75b6", "#9dc3e6", "#c55a11", "#f4b183"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  const double slot = kPlotW / static_cast<double>(bars);
  const double bar_w = slot * 0.6;
  for (int panel = 0; panel < 2; ++panel) {
    const double x0 = kLeft + panel * kPanel;
    const double top = panel == 0 ? top_a : top_b;
    const auto y_of = [&](double v) { return kTop + kPlotH * (1.0 - v / top); };
    svg << "<text x=\"" << x0 << "\" y=\"20\" font-weight=\"bold\">"
        << (panel == 0 ? "Panel A: eigenvalue share (%)" : "Panel B: cumulative share (%)")
        << "</text>\n";
    svg << "<line x1=\"" << x0 << "\" y1=\"" << kTop << "\" x2=\"" << x0 << "\" y2=\""
        << kTop + kPlotH << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << x0 << "\" y1=\"" << kTop + kPlotH << "\" x2=\"" << x0 + kPlotW
        << "\" y2=\"" << kTop + kPlotH << "\" stroke=\"black\"/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
      const double v = top * tick / 4.0;
      svg << "<text x=\"" << x0 - 4 << "\" y=\"" << y_of(v) + 4 << "\" text-anchor=\"end\">"
          << fixed(v, 2) << "</text>\n";
    }
    for (Eigen::Index j = 0; j < bars; ++j) {
      const double cx = x0 + slot * (static_cast<double>(j) + 0.5);
      svg << "<text x=\"" << cx << "\" y=\"" << kTop + kPlotH + 14 << "\" text-anchor=\"middle\">"
          << (panel == 0 ? "mu" : "k=") << j + 1 << "</text>\n";
      if (panel == 0) {
        const double v = 100.0 * shares.ratios(j);
        svg << "<rect x=\"" << cx - bar_w / 2 << "\" y=\"" << y_of(v) << "\" width=\"" << bar_w
            << "\" height=\"" << kTop + kPlotH - y_of(v) << "\" fill=\"" << kColors[0]
            << "\"><title>" << fixed(v, 2) << "%</title></rect>\n";
      } else {
        double base = 0.0;
        for (Eigen::Index l = 0; l <= j; ++l) {
          const double v = 100.0 * shares.ratios(l);
          svg << "<rect x=\"" << cx - bar_w / 2 << "\" y=\"" << y_of(base + v) << "\" width=\""
              << bar_w << "\" height=\"" << y_of(base) - y_of(base + v) << "\" fill=\""
              << kColors[l] << "\"/>\n";
          base += v;
        }
      }
    }
    if (panel == 0) {
      svg << "<line class=\"penalty-line\" x1=\"" << x0 << "\" y1=\"" << y_of(cut) << "\" x2=\""
          << x0 + kPlotW << "\" y2=\"" << y_of(cut)
          << "\" stroke=\"#c00000\" stroke-dasharray=\"6,3\"/>\n";
      svg << "<text x=\"" << x0 + kPlotW << "\" y=\"" << y_of(cut) - 4
          << "\" text-anchor=\"end\" fill=\"#c00000\">g/sigma2 = " << fixed(cut, 3)
          << "%</text>\n";
    }
  }
  svg << "<text x=\"" << kLeft << "\" y=\"" << kHeight - 8 << "\">k_hat = " << report.k_hat
      << ", n_chi = " << report.n_chi << ", T = " << report.T << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

void write_scree_svg(const DiagnosticReport& report, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << scree_svg(report);
}

void write_calibration_csv(const CalibrationResult& result, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "c,variance,interval,k_hat_min,k_hat_max,selected\n";
  std::vector<std::size_t> interval_of(result.grid.size(), 0);
  for (std::size_t r = 0; r < result.intervals.size(); ++r)
    for (std::size_t i = result.intervals[r].first; i <= result.intervals[r].last; ++i)
      interval_of[i] = r + 1;
  for (std::size_t i = 0; i < result.grid.size(); ++i) {
    const auto col = result.k_hats.col(static_cast<Eigen::Index>(i));
    out << csv::format_double(result.grid[i]) << ',' << csv::format_double(result.variance[i])
        << ',' << interval_of[i] << ',' << col.minCoeff() << ',' << col.maxCoeff() << ','
        << (result.c_star > 0.0 && i == result.c_star_index ? 1 : 0) << '\n';
  }
}

}  // namespace afdiag
