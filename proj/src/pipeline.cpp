#include "afdiag/pipeline.hpp"

namespace afdiag {

ResidualAnalysis analyze_residuals(const PanelData& panel, const FactorSet& factors,
                                   const InstrumentSet& instruments, ModelKind kind,
                                   const TrimConfig& trim, unsigned threads) {
  validate_alignment(panel, factors, instruments);
  ResidualAnalysis out;
  out.spec = ModelSpec::from_data(kind, factors, instruments);
  auto fitted = fit_panel(panel, factors, instruments, out.spec, trim, threads);
  out.fits = std::move(fitted.first);
  out.residuals = standardize_residuals(std::move(fitted.second));
  out.spectrum = residual_spectrum(out.residuals, true);
  return out;
}

}  // namespace afdiag
