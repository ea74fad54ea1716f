#pragma once

#include "afdiag/panel.hpp"
#include "afdiag/regress.hpp"
#include "afdiag/spectrum.hpp"

#include <vector>

namespace afdiag {

/// Regression residuals and their spectrum for one panel.
struct ResidualAnalysis {
  ModelSpec spec;
  std::vector<AssetFit> fits;
  ResidualPanel residuals;  // standardized
  Spectrumd spectrum;
};

/// Validates alignment, fits every asset, standardizes kept residuals and
/// computes the Gram spectrum.
ResidualAnalysis analyze_residuals(const PanelData& panel, const FactorSet& factors,
                                   const InstrumentSet& instruments, ModelKind kind,
                                   const TrimConfig& trim, unsigned threads = 0);

}  // namespace afdiag
