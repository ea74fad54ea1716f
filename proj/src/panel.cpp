#include "afdiag/panel.hpp"

#include "afdiag/csv.hpp"
#include "afdiag/error.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>

namespace afdiag {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::Index parse_time(const std::string& text, Eigen::Index T, std::size_t line) {
  const long long t = csv::parse_int(text, line);
  if (t < 1 || (T > 0 && t > T))
    throw ParseError("time index " + text + " outside [1, " +
                         (T > 0 ? std::to_string(T) : std::string("T")) + "]",
                     line);
  return static_cast<Eigen::Index>(t);
}

/// Reads a dense `time,<columns...>` file into a T x (columns-1) matrix.
Eigen::MatrixXd load_dense_by_time(const std::filesystem::path& path, Eigen::Index T,
                                   std::vector<std::string>* names) {
  const csv::Table table = csv::read(path);
  const std::size_t time_col = table.column("time");
  std::vector<std::size_t> value_cols;
  for (std::size_t j = 0; j < table.header.size(); ++j)
    if (j != time_col) {
      value_cols.push_back(j);
      if (names) names->push_back(table.header[j]);
    }
  Eigen::MatrixXd values = Eigen::MatrixXd::Constant(
      T, static_cast<Eigen::Index>(value_cols.size()), kNaN);
  std::vector<bool> seen(static_cast<std::size_t>(T), false);
  for (const auto& row : table.rows) {
    const Eigen::Index t = parse_time(row.fields[time_col], T, row.line) - 1;
    if (seen[t])
      throw ValidationError("duplicate time " + row.fields[time_col] + " in " +
                            path.string() + " (line " + std::to_string(row.line) + ")");
    seen[t] = true;
    for (std::size_t k = 0; k < value_cols.size(); ++k) {
      const double v = csv::parse_double(row.fields[value_cols[k]], row.line);
      if (!std::isfinite(v))
        throw ValidationError("non-finite value in " + path.string() + " (line " +
                              std::to_string(row.line) + ")");
      values(t, static_cast<Eigen::Index>(k)) = v;
    }
  }
  for (Eigen::Index t = 0; t < T; ++t)
    if (!seen[t])
      throw AlignmentError(path.string() + " has no row for time " + std::to_string(t + 1));
  return values;
}

}  // namespace

PanelData::PanelData(std::vector<std::string> asset_ids, Eigen::MatrixXd returns,
                     MaskMatrix mask)
    : ids_(std::move(asset_ids)), returns_(std::move(returns)), mask_(std::move(mask)) {
  if (returns_.rows() < 1 || returns_.cols() < 1)
    throw ValidationError("panel needs n >= 1 and T >= 1");
  if (mask_.rows() != returns_.rows() || mask_.cols() != returns_.cols())
    throw ValidationError("mask shape differs from returns shape");
  if (static_cast<Eigen::Index>(ids_.size()) != returns_.rows())
    throw ValidationError("asset id count differs from panel rows");
  obs_counts_.resize(n());
  for (Eigen::Index i = 0; i < n(); ++i) {
    int count = 0;
    for (Eigen::Index t = 0; t < T(); ++t) {
      if (mask_(i, t)) {
        if (!std::isfinite(returns_(i, t)))
          throw ValidationError("non-finite return for asset " + ids_[i] + " at time " +
                                std::to_string(t + 1));
        ++count;
      } else {
        returns_(i, t) = kNaN;
      }
    }
    obs_counts_(i) = count;
  }
}

Eigen::Index PanelData::find(const std::string& asset_id) const {
  for (std::size_t i = 0; i < ids_.size(); ++i)
    if (ids_[i] == asset_id) return static_cast<Eigen::Index>(i);
  return -1;
}

void TrimConfig::validate() const {
  if (!(chi1 > 0.0)) throw ValidationError("chi1 must be positive");
  if (!(chi2 >= 1.0)) throw ValidationError("chi2 must be at least 1");
}

PanelData load_panel(const std::filesystem::path& path, const ReturnsSchema& schema) {
  const csv::Table table = csv::read(path);
  const std::size_t a_col = table.column(schema.asset_column);
  const std::size_t t_col = table.column(schema.time_column);
  const std::size_t r_col = table.column(schema.return_column);

  struct Cell {
    Eigen::Index asset, time;
    double value;
  };
  std::vector<std::string> ids;
  std::unordered_map<std::string, Eigen::Index> index;
  std::vector<Cell> cells;
  cells.reserve(table.rows.size());
  Eigen::Index T = schema.T;
  Eigen::Index max_t = 0;
  for (const auto& row : table.rows) {
    const std::string& id = row.fields[a_col];
    if (id.empty()) throw ParseError("empty asset id", row.line);
    const Eigen::Index t = parse_time(row.fields[t_col], schema.T, row.line);
    const double v = csv::parse_double(row.fields[r_col], row.line);
    if (!std::isfinite(v))
      throw ValidationError("non-finite return (line " + std::to_string(row.line) + ")");
    auto [it, inserted] = index.try_emplace(id, static_cast<Eigen::Index>(ids.size()));
    if (inserted) ids.push_back(id);
    cells.push_back({it->second, t - 1, v});
    max_t = std::max(max_t, t);
  }
  if (ids.empty()) throw ValidationError("no return rows in " + path.string());
  if (T == 0) T = max_t;

  const auto n = static_cast<Eigen::Index>(ids.size());
  Eigen::MatrixXd returns = Eigen::MatrixXd::Constant(n, T, kNaN);
  MaskMatrix mask = MaskMatrix::Constant(n, T, false);
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const Cell& c = cells[k];
    if (mask(c.asset, c.time))
      throw ValidationError("duplicate cell (" + ids[c.asset] + ", " +
                            std::to_string(c.time + 1) + ") at line " +
                            std::to_string(table.rows[k].line));
    mask(c.asset, c.time) = true;
    returns(c.asset, c.time) = c.value;
  }
  return PanelData(std::move(ids), std::move(returns), std::move(mask));
}

void write_panel(const PanelData& panel, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "asset_id,time,return\n";
  for (Eigen::Index i = 0; i < panel.n(); ++i)
    for (Eigen::Index t = 0; t < panel.T(); ++t)
      if (panel.mask()(i, t))
        out << panel.asset_ids()[i] << ',' << (t + 1) << ','
            << csv::format_double(panel.returns()(i, t)) << '\n';
}

FactorSet load_factors(const std::filesystem::path& path, Eigen::Index T) {
  FactorSet factors;
  factors.values = load_dense_by_time(path, T, &factors.names);
  return factors;
}

Eigen::MatrixXd load_common_instruments(const std::filesystem::path& path, Eigen::Index T) {
  return load_dense_by_time(path, T, nullptr);
}

std::vector<Eigen::MatrixXd> load_specific_instruments(const std::filesystem::path& path,
                                                       const PanelData& panel) {
  const csv::Table table = csv::read(path);
  const std::size_t a_col = table.column("asset_id");
  const std::size_t t_col = table.column("time");
  std::vector<std::size_t> z_cols;
  for (std::size_t j = 0; j < table.header.size(); ++j)
    if (j != a_col && j != t_col) z_cols.push_back(j);
  const auto q = static_cast<Eigen::Index>(z_cols.size());

  std::vector<Eigen::MatrixXd> blocks(static_cast<std::size_t>(panel.n()),
                                      Eigen::MatrixXd::Constant(panel.T(), q, kNaN));
  for (const auto& row : table.rows) {
    const Eigen::Index i = panel.find(row.fields[a_col]);
    if (i < 0) throw ValidationError("unknown asset '" + row.fields[a_col] +
                                     "' (line " + std::to_string(row.line) + ")");
    const Eigen::Index t = parse_time(row.fields[t_col], panel.T(), row.line) - 1;
    for (Eigen::Index k = 0; k < q; ++k) {
      const double v = csv::parse_double(row.fields[z_cols[k]], row.line);
      if (!std::isfinite(v))
        throw ValidationError("non-finite instrument (line " + std::to_string(row.line) + ")");
      blocks[i](t, k) = v;
    }
  }
  return blocks;
}

void validate_alignment(const PanelData& panel, const FactorSet& factors,
                        const InstrumentSet& instruments) {
  const Eigen::Index T = panel.T();
  if (factors.T() != T)
    throw AlignmentError("factors have " + std::to_string(factors.T()) +
                         " dates, panel has " + std::to_string(T));
  if (static_cast<Eigen::Index>(factors.names.size()) != factors.K() && !factors.names.empty())
    throw AlignmentError("factor names do not match factor columns");
  if (instruments.p() > 0 && instruments.common.rows() != T)
    throw AlignmentError("common instruments have " +
                         std::to_string(instruments.common.rows()) + " dates, panel has " +
                         std::to_string(T));
  if (instruments.p() > 0 && !(instruments.common.col(0).array() == 1.0).all())
    throw ValidationError("first common instrument must be the constant 1");
  if (!instruments.specific.empty()) {
    if (static_cast<Eigen::Index>(instruments.specific.size()) != panel.n())
      throw AlignmentError("specific instruments cover " +
                           std::to_string(instruments.specific.size()) + " assets, panel has " +
                           std::to_string(panel.n()));
    const Eigen::Index q = instruments.q();
    for (std::size_t i = 0; i < instruments.specific.size(); ++i) {
      const auto& block = instruments.specific[i];
      if (block.rows() != T || block.cols() != q)
        throw AlignmentError("specific instruments of asset " + panel.asset_ids()[i] +
                             " have shape (" + std::to_string(block.rows()) + ", " +
                             std::to_string(block.cols()) + "), expected (" +
                             std::to_string(T) + ", " + std::to_string(q) + ")");
    }
  }
}

}  // namespace afdiag
