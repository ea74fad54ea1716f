#pragma once

#include "afdiag/spectrum.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace afdiag {

enum class PenaltyFamily {
  GaussRef,  // ((sqrt n + sqrt T)^2 / nT) ln(nT / (sqrt n + sqrt T)^2)
  BaiNg1,    // ((n + T) / nT) ln(nT / (n + T))
  BaiNg2,    // ((n + T) / nT) ln C^2,  C^2 = min(n, T)
  BaiNg3,    // ln C^2 / C^2
};

std::string to_string(PenaltyFamily family);
/// Accepts gaussref, bn1, bn2, bn3.
PenaltyFamily parse_penalty_family(const std::string& name);

struct PenaltySpec {
  PenaltyFamily family = PenaltyFamily::GaussRef;
  double c = 1.0;

  void validate() const;
};

/// Penalty formula of `family` with unit multiplier.
template <typename Scalar = double>
Scalar penalty_base(Eigen::Index n, Eigen::Index T, PenaltyFamily family) {
  using std::log;
  using std::sqrt;
  if (n < 2 || T < 2) throw DomainError("penalty needs n >= 2 and T >= 2");
  const Scalar nn(n), tt(T);
  const Scalar nt = nn * tt;
  switch (family) {
    case PenaltyFamily::GaussRef: {
      const Scalar s = (sqrt(nn) + sqrt(tt)) * (sqrt(nn) + sqrt(tt));
      return s / nt * log(nt / s);
    }
    case PenaltyFamily::BaiNg1:
      return (nn + tt) / nt * log(nt / (nn + tt));
    case PenaltyFamily::BaiNg2:
      return (nn + tt) / nt * log(std::min(nn, tt));
    case PenaltyFamily::BaiNg3: {
      const Scalar c2 = std::min(nn, tt);
      return log(c2) / c2;
    }
  }
  throw DomainError("unknown penalty family");
}

/// g(n, T) = c * (family formula).
inline double penalty(Eigen::Index n, Eigen::Index T, const PenaltySpec& spec) {
  spec.validate();
  return spec.c * penalty_base<double>(n, T, spec.family);
}

enum class SelectedModel {
  M1,  // errors are weakly cross-sectionally correlated
  M2,  // at least one omitted latent factor
};

inline SelectedModel select_model(double xi_value) {
  return xi_value < 0.0 ? SelectedModel::M1 : SelectedModel::M2;
}

/// xi(k) = mu_{k+1} - g for 0 <= k < size.
template <typename Scalar>
Scalar xi_k(const Spectrum<Scalar>& spec, Eigen::Index k, Scalar g) {
  if (k < 0 || k >= spec.size()) throw IndexError("xi(k) index outside the spectrum");
  return spec.eigenvalues(k) - g;
}

/// xi = mu_1 - g.
template <typename Scalar>
Scalar xi(const Spectrum<Scalar>& spec, Scalar g) {
  if (spec.size() < 1) throw DomainError("empty spectrum");
  return xi_k(spec, 0, g);
}

/// ln(sigma2) - ln(sigma2 - mu_1) - g; requires sigma2 > mu_1.
template <typename Scalar>
Scalar log_xi(const Spectrum<Scalar>& spec, Scalar g) {
  using std::log;
  const Scalar mu1 = spec.mu(1);
  if (!(spec.sigma2_hat > mu1))
    throw DomainError("log criterion needs sigma2 > mu_1 (rank-one residuals)");
  return log(spec.sigma2_hat) - log(spec.sigma2_hat - mu1) - g;
}

/// Smallest k with xi(k) < 0. Eigenvalues past the stored ones are zero, so
/// when every stored value is >= g the answer is the stored count if g > 0,
/// and T otherwise.
template <typename Scalar>
Eigen::Index estimate_k(const Spectrum<Scalar>& spec, Scalar g) {
  for (Eigen::Index k = 0; k < spec.size(); ++k)
    if (spec.eigenvalues(k) < g) return k;
  const Eigen::Index T = std::max(spec.T, spec.size());
  return (spec.size() < T && Scalar(0) < g) ? spec.size() : T;
}

/// Full diagnostic output for one residual spectrum.
struct DiagnosticReport {
  PenaltySpec penalty_spec;
  double penalty = 0.0;               // g(n_chi, T)
  std::vector<double> xi_sequence;    // xi(k), k = 0..k_max
  Eigen::Index k_hat = 0;
  Eigen::Index k_max = 0;
  Spectrumd spectrum;
  Contributions<double> variance_shares;
  std::optional<FrobeniusShares<double>> frobenius;  // absent for a zero spectrum
  std::optional<double> log_xi;                      // absent when sigma2 <= mu_1
  Eigen::Index n_chi = 0;
  Eigen::Index T = 0;

  double xi() const { return xi_sequence.front(); }
  SelectedModel selected() const { return select_model(xi()); }
  /// g / sigma2, the cut-off line of the scree plot.
  double penalty_line() const { return penalty / spectrum.sigma2_hat; }
};

/// Penalty uses n_chi in place of n. k_max < 0 selects min(20, T - 1),
/// further capped by the spectrum length.
DiagnosticReport make_report(const Spectrumd& spectrum, const PenaltySpec& penalty_spec,
                             Eigen::Index k_max = -1);

}  // namespace afdiag
