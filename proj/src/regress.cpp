#include "afdiag/regress.hpp"

#include "afdiag/error.hpp"
#include "afdiag/parallel.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace afdiag {

Eigen::Index ModelSpec::d1() const noexcept { return p * (p + 1) / 2 + p * q; }
Eigen::Index ModelSpec::d2() const noexcept { return K * (p + q); }

Eigen::Index ModelSpec::dimension() const noexcept {
  return kind == ModelKind::TimeInvariant ? K + 1 : d1() + d2();
}

void ModelSpec::validate() const {
  if (K < 0 || p < 0 || q < 0) throw ValidationError("negative model dimension");
  switch (kind) {
    case ModelKind::TimeInvariant:
      break;
    case ModelKind::ConditionalCommon:
      if (p < 1) throw ValidationError("conditional specification needs p >= 1");
      if (q != 0) throw ValidationError("specification (i) takes no asset-specific instruments");
      break;
    case ModelKind::ConditionalCommonSpecific:
      if (p < 1) throw ValidationError("conditional specification needs p >= 1");
      if (q < 1) throw ValidationError("specification (ii) needs q >= 1");
      break;
  }
  if (dimension() < 1) throw ValidationError("model dimension must be at least 1");
}

ModelSpec ModelSpec::from_data(ModelKind kind, const FactorSet& factors,
                               const InstrumentSet& instruments) {
  ModelSpec spec;
  spec.kind = kind;
  spec.K = factors.K();
  if (kind != ModelKind::TimeInvariant) spec.p = instruments.p();
  if (kind == ModelKind::ConditionalCommonSpecific) spec.q = instruments.q();
  spec.validate();
  return spec;
}

Eigen::MatrixXd ResidualPanel::kept_rows(bool use_standardized) const {
  const Eigen::MatrixXd& source = use_standardized ? standardized : raw;
  if (use_standardized && !has_standardized())
    throw DomainError("residuals have not been standardized");
  Eigen::MatrixXd rows(n_chi, source.cols());
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < kept_flags.size(); ++i)
    if (kept_flags[i]) rows.row(r++) = source.row(static_cast<Eigen::Index>(i));
  return rows;
}

Eigen::VectorXd vech_instrument_square(const Eigen::Ref<const Eigen::VectorXd>& z) {
  const Eigen::Index p = z.size();
  Eigen::VectorXd out(p * (p + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index col = 0; col < p; ++col)
    for (Eigen::Index row = col; row < p; ++row)
      out(k++) = row == col ? z(row) * z(row) : 2.0 * z(row) * z(col);
  return out;
}

namespace {

/// Appends a (x) b to `out` starting at `offset`.
void kron_into(const Eigen::Ref<const Eigen::RowVectorXd>& a,
               const Eigen::Ref<const Eigen::RowVectorXd>& b, Eigen::Ref<Eigen::RowVectorXd> out,
               Eigen::Index& offset) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    out.segment(offset, b.size()) = a(i) * b;
    offset += b.size();
  }
}

}  // namespace

Eigen::MatrixXd build_regressors(const ModelSpec& spec, const FactorSet& factors,
                                 const InstrumentSet& instruments, Eigen::Index asset,
                                 const std::vector<bool>& observed) {
  spec.validate();
  if (factors.K() != spec.K)
    throw AlignmentError("factor count " + std::to_string(factors.K()) +
                         " differs from specification K=" + std::to_string(spec.K));
  const Eigen::Index T = factors.T();
  const Eigen::Index d = spec.dimension();

  if (spec.kind == ModelKind::TimeInvariant) {
    Eigen::MatrixXd X(T, d);
    X.col(0).setOnes();
    if (spec.K > 0) X.rightCols(spec.K) = factors.values;
    return X;
  }

  if (instruments.p() != spec.p)
    throw AlignmentError("common instrument count differs from specification p");
  if (instruments.common.rows() != T)
    throw AlignmentError("factors and common instruments have different date counts");
  const bool use_specific = spec.kind == ModelKind::ConditionalCommonSpecific;
  if (use_specific) {
    if (instruments.q() != spec.q)
      throw AlignmentError("specific instrument count differs from specification q");
    if (asset < 0 || asset >= static_cast<Eigen::Index>(instruments.specific.size()))
      throw IndexError("asset index outside the specific-instrument set");
  }

  Eigen::MatrixXd X(T, d);
  for (Eigen::Index t = 0; t < T; ++t) {
    const Eigen::RowVectorXd z = instruments.common.row(t);
    Eigen::RowVectorXd zi;
    if (use_specific) {
      zi = instruments.specific[asset].row(t);
      const bool needed = observed.empty() || observed[static_cast<std::size_t>(t)];
      if (needed && !zi.allFinite())
        throw DataError("missing asset-specific instrument for asset " +
                        std::to_string(asset) + " at observed time " + std::to_string(t + 1));
    }
    Eigen::RowVectorXd row(d);
    Eigen::Index offset = 0;
    const Eigen::VectorXd vech = vech_instrument_square(z.transpose());
    row.segment(offset, vech.size()) = vech.transpose();
    offset += vech.size();
    if (use_specific) kron_into(z, zi, row, offset);
    if (spec.K > 0) {
      const Eigen::RowVectorXd f = factors.values.row(t);
      kron_into(f, z, row, offset);
      if (use_specific) kron_into(f, zi, row, offset);
    }
    X.row(t) = row;
  }
  return X;
}

AssetFit fit_asset(const PanelData& panel, const Eigen::Ref<const Eigen::MatrixXd>& X,
                   Eigen::Index asset, const TrimConfig& trim) {
  if (asset < 0 || asset >= panel.n()) throw IndexError("asset index out of range");
  if (X.rows() != panel.T()) throw AlignmentError("design rows differ from panel dates");
  const Eigen::Index T = panel.T();
  const Eigen::Index d = X.cols();
  const int Ti = panel.obs_counts()(asset);

  AssetFit fit;
  fit.residuals = Eigen::VectorXd::Zero(T);
  fit.tau = Ti > 0 ? static_cast<double>(T) / Ti : std::numeric_limits<double>::infinity();
  if (Ti == 0) {
    fit.qxx = Eigen::MatrixXd::Zero(d, d);
    fit.singular = true;
    fit.cond_number = std::numeric_limits<double>::infinity();
    return fit;
  }

  Eigen::MatrixXd Xo(Ti, d);
  Eigen::VectorXd Ro(Ti);
  std::vector<Eigen::Index> dates;
  dates.reserve(static_cast<std::size_t>(Ti));
  for (Eigen::Index t = 0; t < T; ++t)
    if (panel.mask()(asset, t)) {
      Xo.row(static_cast<Eigen::Index>(dates.size())) = X.row(t);
      Ro(static_cast<Eigen::Index>(dates.size())) = panel.returns()(asset, t);
      dates.push_back(t);
    }
  if (!Xo.allFinite()) throw DataError("non-finite regressor for asset " + std::to_string(asset));

  fit.qxx = Eigen::MatrixXd::Zero(d, d);
  fit.qxx.selfadjointView<Eigen::Lower>().rankUpdate(Xo.transpose(), 1.0 / Ti);
  fit.qxx.triangularView<Eigen::StrictlyUpper>() = fit.qxx.transpose();

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fit.qxx, Eigen::EigenvaluesOnly);
  const double mu_max = eig.eigenvalues().maxCoeff();
  const double mu_min = eig.eigenvalues().minCoeff();
  fit.singular = !(mu_max > 0.0) || mu_min < kSingularRatio * mu_max;
  if (!fit.singular) {
    const Eigen::LLT<Eigen::MatrixXd> llt(fit.qxx);
    if (llt.info() != Eigen::Success) {
      fit.singular = true;
    } else {
      fit.beta = llt.solve(Xo.transpose() * Ro / Ti);
      fit.cond_number = std::sqrt(mu_max / mu_min);
    }
  }
  if (fit.singular) {
    fit.cond_number = std::numeric_limits<double>::infinity();
    return fit;
  }
  const Eigen::VectorXd e = Ro - Xo * fit.beta;
  for (std::size_t k = 0; k < dates.size(); ++k) fit.residuals(dates[k]) = e(static_cast<Eigen::Index>(k));
  fit.kept = fit.cond_number <= trim.chi1 && fit.tau <= trim.chi2;
  return fit;
}

std::pair<std::vector<AssetFit>, ResidualPanel> fit_panel(
    const PanelData& panel, const FactorSet& factors, const InstrumentSet& instruments,
    const ModelSpec& spec, const TrimConfig& trim, unsigned threads) {
  validate_alignment(panel, factors, instruments);
  spec.validate();
  trim.validate();

  const auto n = static_cast<std::size_t>(panel.n());
  const Eigen::Index T = panel.T();
  std::vector<AssetFit> fits(n);

  // The time-invariant design is shared by every asset.
  Eigen::MatrixXd shared;
  if (spec.kind == ModelKind::TimeInvariant) {
    shared.resize(T, spec.dimension());
    shared.col(0).setOnes();
    if (spec.K > 0) shared.rightCols(spec.K) = factors.values;
  }

  parallel_for(n, threads, [&](std::size_t i) {
    const auto asset = static_cast<Eigen::Index>(i);
    if (spec.kind == ModelKind::TimeInvariant) {
      fits[i] = fit_asset(panel, shared, asset, trim);
    } else {
      std::vector<bool> observed(static_cast<std::size_t>(T));
      for (Eigen::Index t = 0; t < T; ++t) observed[t] = panel.mask()(asset, t);
      const Eigen::MatrixXd X = build_regressors(spec, factors, instruments, asset, observed);
      fits[i] = fit_asset(panel, X, asset, trim);
    }
  });

  ResidualPanel res;
  res.raw.resize(panel.n(), T);
  res.kept_flags.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    res.raw.row(static_cast<Eigen::Index>(i)) = fits[i].residuals.transpose();
    res.kept_flags[i] = fits[i].kept;
    res.n_chi += fits[i].kept ? 1 : 0;
  }
  if (res.n_chi == 0) throw DegenerateError("empty kept cross-section: every asset was trimmed");
  return {std::move(fits), std::move(res)};
}

ResidualPanel standardize_residuals(ResidualPanel residuals) {
  const Eigen::Index T = residuals.T();
  residuals.standardized = Eigen::MatrixXd::Zero(residuals.raw.rows(), T);
  for (Eigen::Index i = 0; i < residuals.raw.rows(); ++i) {
    const double mean_square = residuals.raw.row(i).squaredNorm() / static_cast<double>(T);
    if (mean_square > 0.0) {
      residuals.standardized.row(i) = residuals.raw.row(i) / std::sqrt(mean_square);
    } else if (residuals.kept_flags[static_cast<std::size_t>(i)]) {
      throw DegenerateError("kept asset " + std::to_string(i) +
                            " has an all-zero residual row and cannot be standardized");
    }
  }
  return residuals;
}

}  // namespace afdiag
