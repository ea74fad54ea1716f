#include "afdiag/montecarlo.hpp"

#include "afdiag/csv.hpp"
#include "afdiag/error.hpp"
#include "afdiag/parallel.hpp"
#include "afdiag/random.hpp"
#include "afdiag/regress.hpp"
#include "afdiag/spectrum.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

namespace afdiag {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::VectorXd normal_draws(Philox4x32 engine, Eigen::Index count) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd out(count);
  for (Eigen::Index k = 0; k < count; ++k) out(k) = normal(engine);
  return out;
}

std::vector<std::string> numbered_ids(Eigen::Index n) {
  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) ids.push_back("A" + std::to_string(i + 1));
  return ids;
}

// Scaled AR errors plus the latent common component, n x T.
Eigen::MatrixXd latent_returns(const DgpConfig& cfg, std::uint64_t rep) {
  const Eigen::Index n = cfg.n, T = cfg.T, total = cfg.T + cfg.burn_in;

  Eigen::MatrixXd v(n, total);
  for (Eigen::Index i = 0; i < n; ++i)
    v.row(i) = normal_draws(make_stream(cfg.seed, rep, StreamKind::Errors, i), total).transpose();

  Eigen::MatrixXd u = v;
  if (cfg.J > 0 && cfg.beta != 0.0) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index lo = std::max<Eigen::Index>(0, i - cfg.J);
      const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + cfg.J);
      for (Eigen::Index h = lo; h <= hi; ++h)
        if (h != i) u.row(i) += cfg.beta * v.row(h);
    }
  }

  for (Eigen::Index t = 1; t < total; ++t) u.col(t) += cfg.rho * u.col(t - 1);
  Eigen::MatrixXd R = cfg.error_scale() * u.rightCols(T);

  if (cfg.r > 0) {
    Eigen::MatrixXd b(n, cfg.r);
    for (Eigen::Index i = 0; i < n; ++i)
      b.row(i) = normal_draws(make_stream(cfg.seed, rep, StreamKind::Loadings, i), cfg.r).transpose();
    Eigen::MatrixXd f(cfg.r, T);
    for (Eigen::Index j = 0; j < cfg.r; ++j)
      f.row(j) = normal_draws(make_stream(cfg.seed, rep, StreamKind::LatentFactors, j), T).transpose();
    R.noalias() += b * f;
  }
  return R;
}

SimulatedPanel balanced_panel(Eigen::MatrixXd R, FactorSet factors, Eigen::Index r) {
  const Eigen::Index n = R.rows(), T = R.cols();
  SimulatedPanel out;
  out.panel = PanelData(numbered_ids(n), std::move(R), MaskMatrix::Constant(n, T, true));
  out.factors = std::move(factors);
  out.true_r = r;
  return out;
}

// Zero-filled returns of assets passing the history-length trim, each
// scaled to unit mean square over all T dates.
Eigen::MatrixXd standardized_returns(const PanelData& panel, const TrimConfig& trim) {
  const Eigen::Index T = panel.T();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < panel.n(); ++i) {
    const int Ti = panel.obs_counts()(i);
    if (Ti > 0 && static_cast<double>(T) / Ti <= trim.chi2) keep.push_back(i);
  }
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(keep.size()), T);
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const Eigen::Index i = keep[k];
    auto row = rows.row(static_cast<Eigen::Index>(k));
    row = panel.mask().row(i).select(panel.returns().row(i), 0.0);
    const double scale = std::sqrt(row.squaredNorm() / static_cast<double>(T));
    if (!(scale > 0.0)) throw DegenerateError("all-zero return series");
    row /= scale;
  }
  if (rows.rows() == 0) throw DegenerateError("no asset passes trimming");
  return rows;
}

std::uint64_t calibration_seed(std::uint64_t seed, std::uint64_t rep) {
  // splitmix64 finalizer, so neighbouring replications get unrelated keys
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (rep + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

struct Replication {
  Eigen::Index k_hat = -1;
  double xi = kNaN;
  double c = kNaN;
  double T_bar = 0.0;
  std::string failure;
};

Replication run_replication(const ExperimentConfig& cfg, std::uint64_t rep) {
  Replication out;
  SimulatedPanel sim = cfg.dgp.with_observable ? gen_obs_latent_panel(cfg.dgp, rep)
                                               : gen_latent_panel(cfg.dgp, rep);
  PanelData panel = std::move(sim.panel);
  if (cfg.mask) {
    MaskConfig m = *cfg.mask;
    panel = apply_mask(panel, gen_mask(panel.n(), panel.T(), m, rep));
  }
  out.T_bar = panel.obs_counts().cast<double>().mean();

  try {
    Eigen::MatrixXd rows;
    if (cfg.regress) {
      const ModelSpec spec =
          ModelSpec::from_data(ModelKind::TimeInvariant, sim.factors, InstrumentSet{});
      auto fitted = fit_panel(panel, sim.factors, InstrumentSet{}, spec, cfg.trim, 1);
      const ResidualPanel res = standardize_residuals(std::move(fitted.second));
      rows = res.kept_rows(true);
    } else {
      rows = standardized_returns(panel, cfg.trim);
    }
    const Spectrumd spectrum = rows_spectrum(rows);

    double c = cfg.penalty.c;
    if (cfg.calibrate) {
      CalibrationOptions opts = cfg.calibration;
      opts.balanced = panel.balanced();
      opts.seed = calibration_seed(cfg.dgp.seed, rep);
      opts.threads = 1;
      c = calibrate_on_residuals(rows, cfg.penalty.family, opts).c_star;
    }
    const double g = c * penalty_base<double>(spectrum.n_chi, spectrum.T, cfg.penalty.family);
    out.c = c;
    out.xi = xi(spectrum, g);
    out.k_hat = estimate_k(spectrum, g);
  } catch (const DegenerateError& e) {
    out.failure = e.what();
  } catch (const CalibrationError& e) {
    out.failure = e.what();
  } catch (const DomainError& e) {
    out.failure = e.what();
  }
  return out;
}

}  // namespace

void DgpConfig::validate() const {
  if (n < 2) throw ValidationError("n must be >= 2");
  if (T < 2) throw ValidationError("T must be >= 2");
  if (r < 0) throw ValidationError("r must be >= 0");
  if (!(rho >= 0.0 && rho < 1.0)) throw ValidationError("rho must lie in [0, 1)");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ValidationError("beta must be >= 0");
  if (J < 0) throw ValidationError("J must be >= 0");
  if (burn_in < 0) throw ValidationError("burn_in must be >= 0");
  if (n >= (Eigen::Index{1} << 24)) throw ValidationError("n exceeds the stream-id range");
}

double DgpConfig::error_scale() const noexcept {
  return std::sqrt((1.0 - rho * rho) / (1.0 + 2.0 * static_cast<double>(J) * beta * beta));
}

void MaskConfig::validate(Eigen::Index T) const {
  if (min_Ti < 1 || min_Ti > T)
    throw ValidationError("min_Ti must lie in [1, T]; got " + std::to_string(min_Ti));
}

SimulatedPanel gen_latent_panel(const DgpConfig& cfg, std::uint64_t replication) {
  cfg.validate();
  FactorSet none;
  none.values.resize(cfg.T, 0);
  return balanced_panel(latent_returns(cfg, replication), std::move(none), cfg.r);
}

SimulatedPanel gen_obs_latent_panel(const DgpConfig& cfg, std::uint64_t replication,
                                    bool zero_loadings) {
  cfg.validate();
  Eigen::MatrixXd R = latent_returns(cfg, replication);
  const Eigen::VectorXd F =
      normal_draws(make_stream(cfg.seed, replication, StreamKind::ObservableFactor), cfg.T);
  if (!zero_loadings) {
    const Eigen::VectorXd B =
        normal_draws(make_stream(cfg.seed, replication, StreamKind::ObservableLoadings), cfg.n);
    R.noalias() += B * F.transpose();
  }
  FactorSet factors;
  factors.values = F;
  factors.names = {"F"};
  return balanced_panel(std::move(R), std::move(factors), cfg.r);
}

MaskMatrix gen_mask(Eigen::Index n, Eigen::Index T, const MaskConfig& mcfg,
                    std::uint64_t replication) {
  mcfg.validate(T);
  MaskMatrix mask = MaskMatrix::Constant(n, T, false);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto engine = make_stream(mcfg.seed, replication, StreamKind::Mask, static_cast<std::uint64_t>(i));
    const auto Ti = std::uniform_int_distribution<Eigen::Index>(mcfg.min_Ti, T)(engine);
    const auto t0 = std::uniform_int_distribution<Eigen::Index>(0, T - Ti)(engine);
    mask.row(i).segment(t0, Ti).setConstant(true);
  }
  return mask;
}

PanelData apply_mask(const PanelData& panel, const MaskMatrix& mask) {
  if (mask.rows() != panel.n() || mask.cols() != panel.T())
    throw AlignmentError("mask shape does not match the panel");
  const MaskMatrix combined = panel.mask() && mask;
  return PanelData(panel.asset_ids(), combined.select(panel.returns(), 0.0), combined);
}

void ExperimentConfig::validate() const {
  dgp.validate();
  if (mask) mask->validate(dgp.T);
  if (S < 1) throw ValidationError("S must be >= 1");
  penalty.validate();
  trim.validate();
  if (calibrate) calibration.validate();
}

McResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto S = static_cast<std::size_t>(cfg.S);
  std::vector<Replication> reps(S);
  parallel_for(S, cfg.threads, [&](std::size_t s) { reps[s] = run_replication(cfg, s); });

  McResult out;
  out.n = cfg.dgp.n;
  out.T = cfg.dgp.T;
  out.r = cfg.dgp.r;
  out.S = cfg.S;
  Eigen::Index m1 = 0, over = 0, under = 0, correct = 0;
  double T_bar_sum = 0.0;
  for (const Replication& rep : reps) {
    out.k_hats.push_back(rep.k_hat);
    out.xi.push_back(rep.xi);
    out.c_used.push_back(rep.c);
    T_bar_sum += rep.T_bar;
    if (rep.k_hat < 0) {
      ++out.failed;
      out.failures.push_back(rep.failure);
      continue;
    }
    if (rep.xi < 0.0) ++m1;
    if (rep.k_hat > out.r)
      ++over;
    else if (rep.k_hat < out.r)
      ++under;
    else
      ++correct;
    const auto k = static_cast<std::size_t>(rep.k_hat);
    if (out.histogram.size() <= k) out.histogram.resize(k + 1, 0);
    ++out.histogram[k];
  }
  const Eigen::Index ok = out.S - out.failed;
  if (ok > 0) {
    const auto frac = [ok](Eigen::Index count) {
      return static_cast<double>(count) / static_cast<double>(ok);
    };
    out.prob_select_M1 = frac(m1);
    out.over = frac(over);
    out.under = frac(under);
    out.correct = frac(correct);
  }
  out.mean_T_bar = T_bar_sum / static_cast<double>(out.S);
  return out;
}

namespace {

std::string trim_copy(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<Eigen::Index> parse_int_list(const std::string& value, std::size_t line) {
  std::vector<Eigen::Index> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(csv::parse_int(trim_copy(item), line));
  if (out.empty()) throw ParseError("empty list", line);
  return out;
}

bool parse_bool(const std::string& value, std::size_t line) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ParseError("expected true or false, got '" + value + "'", line);
}

std::vector<double> parse_grid(const std::string& value, std::size_t line) {
  std::vector<double> parts;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(csv::parse_double(trim_copy(item), line));
  if (parts.size() != 3) throw ParseError("grid must be LO:HI:STEP", line);
  return make_grid(parts[0], parts[1], parts[2]);
}

}  // namespace

SimulationPlan parse_simulation_config(const std::string& text) {
  ExperimentConfig base;
  base.calibration.c_grid = make_grid(0.01, 3.0, 0.01);
  std::vector<Eigen::Index> ns{base.dgp.n}, Ts{base.dgp.T};
  std::optional<Eigen::Index> min_Ti;

  std::stringstream in(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string content = trim_copy(raw);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", line);
    const std::string key = trim_copy(content.substr(0, eq));
    const std::string value = trim_copy(content.substr(eq + 1));

    if (key == "n") ns = parse_int_list(value, line);
    else if (key == "T") Ts = parse_int_list(value, line);
    else if (key == "r") base.dgp.r = csv::parse_int(value, line);
    else if (key == "rho") base.dgp.rho = csv::parse_double(value, line);
    else if (key == "beta") base.dgp.beta = csv::parse_double(value, line);
    else if (key == "J") base.dgp.J = csv::parse_int(value, line);
    else if (key == "min_Ti") min_Ti = csv::parse_int(value, line);
    else if (key == "S") base.S = csv::parse_int(value, line);
    else if (key == "penalty_family") base.penalty.family = parse_penalty_family(value);
    else if (key == "c") {
      if (value == "calibrate") {
        base.calibrate = true;
      } else {
        base.calibrate = false;
        base.penalty.c = csv::parse_double(value, line);
      }
    }
    else if (key == "calibrate") base.calibrate = parse_bool(value, line);
    else if (key == "chi1") base.trim.chi1 = csv::parse_double(value, line);
    else if (key == "chi2") base.trim.chi2 = csv::parse_double(value, line);
    else if (key == "seed") base.dgp.seed = static_cast<std::uint64_t>(csv::parse_int(value, line));
    else if (key == "observable") base.dgp.with_observable = parse_bool(value, line);
    else if (key == "regress") base.regress = parse_bool(value, line);
    else if (key == "burn_in") base.dgp.burn_in = csv::parse_int(value, line);
    else if (key == "grid") base.calibration.c_grid = parse_grid(value, line);
    else if (key == "subsamples") base.calibration.n_subsamples = csv::parse_int(value, line);
    else if (key == "k_max") base.calibration.k_max = csv::parse_int(value, line);
    else if (key == "min_fraction") base.calibration.min_fraction = csv::parse_double(value, line);
    else if (key == "tolerance") base.calibration.tolerance = csv::parse_double(value, line);
    else if (key == "threads") base.threads = static_cast<unsigned>(csv::parse_int(value, line));
    else throw ParseError("unknown key '" + key + "'", line);
  }

  SimulationPlan plan;
  for (const Eigen::Index n : ns) {
    for (const Eigen::Index T : Ts) {
      ExperimentConfig cell = base;
      cell.dgp.n = n;
      cell.dgp.T = T;
      if (min_Ti && *min_Ti < T) cell.mask = MaskConfig{*min_Ti, base.dgp.seed};
      cell.validate();
      plan.cells.push_back(std::move(cell));
    }
  }
  return plan;
}

SimulationPlan load_simulation_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_simulation_config(buffer.str());
}

void write_mc_table(const std::vector<McResult>& results, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "n,T,r,S,prob_M1,over,under,correct,failed,mean_T_bar\n";
  const auto pct = [](double x) { return csv::format_double(100.0 * x); };
  for (const McResult& r : results)
    out << r.n << ',' << r.T << ',' << r.r << ',' << r.S << ',' << pct(r.prob_select_M1) << ','
        << pct(r.over) << ',' << pct(r.under) << ',' << pct(r.correct) << ',' << r.failed << ','
        << csv::format_double(r.mean_T_bar) << '\n';
}

void write_mc_summary(const SimulationPlan& plan, const std::vector<McResult>& results,
                      const std::filesystem::path& path) {
  using nlohmann::json;
  json cells = json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const McResult& r = results[i];
    const ExperimentConfig& c = plan.cells.at(i);
    json cfg = {{"n", c.dgp.n},
                {"T", c.dgp.T},
                {"r", c.dgp.r},
                {"rho", c.dgp.rho},
                {"beta", c.dgp.beta},
                {"J", c.dgp.J},
                {"observable", c.dgp.with_observable},
                {"seed", c.dgp.seed},
                {"S", c.S},
                {"penalty_family", to_string(c.penalty.family)},
                {"calibrate", c.calibrate},
                {"regress", c.regress},
                {"chi1", c.trim.chi1},
                {"chi2", c.trim.chi2}};
    if (!c.calibrate) cfg["c"] = c.penalty.c;
    if (c.mask) cfg["min_Ti"] = c.mask->min_Ti;
    json k_hats = json::array();
    json c_used = json::array();
    for (std::size_t s = 0; s < r.k_hats.size(); ++s) {
      k_hats.push_back(r.k_hats[s]);
      c_used.push_back(std::isnan(r.c_used[s]) ? json(nullptr) : json(r.c_used[s]));
    }
    cells.push_back({{"config", cfg},
                     {"prob_select_M1", r.prob_select_M1},
                     {"over", r.over},
                     {"under", r.under},
                     {"correct", r.correct},
                     {"failed", r.failed},
                     {"failures", r.failures},
                     {"histogram", r.histogram},
                     {"mean_T_bar", r.mean_T_bar},
                     {"k_hats", k_hats},
                     {"c_used", c_used}});
  }
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << json{{"cells", cells}}.dump(2) << '\n';
}

}  // namespace afdiag
