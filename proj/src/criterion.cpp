#include "afdiag/criterion.hpp"

namespace afdiag {

std::string to_string(PenaltyFamily family) {
  switch (family) {
    case PenaltyFamily::GaussRef: return "gaussref";
    case PenaltyFamily::BaiNg1: return "bn1";
    case PenaltyFamily::BaiNg2: return "bn2";
    case PenaltyFamily::BaiNg3: return "bn3";
  }
  return "unknown";
}

PenaltyFamily parse_penalty_family(const std::string& name) {
  if (name == "gaussref") return PenaltyFamily::GaussRef;
  if (name == "bn1") return PenaltyFamily::BaiNg1;
  if (name == "bn2") return PenaltyFamily::BaiNg2;
  if (name == "bn3") return PenaltyFamily::BaiNg3;
  throw ValidationError("unknown penalty family '" + name + "' (gaussref|bn1|bn2|bn3)");
}

void PenaltySpec::validate() const {
  if (!(c > 0.0) || !std::isfinite(c))
    throw ValidationError("penalty constant c must be positive and finite");
}

DiagnosticReport make_report(const Spectrumd& spectrum, const PenaltySpec& penalty_spec,
                             Eigen::Index k_max) {
  if (spectrum.size() < 1) throw DegenerateError("empty spectrum");
  DiagnosticReport report;
  report.penalty_spec = penalty_spec;
  report.n_chi = spectrum.n_chi;
  report.T = spectrum.T;
  report.spectrum = spectrum;
  report.penalty = penalty(spectrum.n_chi, spectrum.T, penalty_spec);

  if (k_max < 0) k_max = std::min<Eigen::Index>(20, spectrum.T - 1);
  report.k_max = std::clamp<Eigen::Index>(k_max, 0, spectrum.size() - 1);
  for (Eigen::Index k = 0; k <= report.k_max; ++k)
    report.xi_sequence.push_back(xi_k(spectrum, k, report.penalty));
  report.k_hat = estimate_k(spectrum, report.penalty);

  report.variance_shares = contributions(spectrum, 0);
  if (spectrum.eigenvalues.squaredNorm() > 0.0) report.frobenius = frobenius_ratios(spectrum, 0);
  if (spectrum.sigma2_hat > spectrum.mu(1)) report.log_xi = log_xi(spectrum, report.penalty);
  return report;
}

}  // namespace afdiag
