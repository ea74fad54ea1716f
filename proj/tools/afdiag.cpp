// afdiag: omitted-factor diagnostics for unbalanced return panels.
//
//   afdiag diagnose  --returns R.csv --factors F.csv --spec invariant --out DIR
//   afdiag simulate  --config exp.cfg --out DIR
//   afdiag calibrate --returns R.csv --factors F.csv --grid 0.01:3:0.01 --out DIR

#include "afdiag/calibration.hpp"
#include "afdiag/criterion.hpp"
#include "afdiag/error.hpp"
#include "afdiag/montecarlo.hpp"
#include "afdiag/panel.hpp"
#include "afdiag/pipeline.hpp"
#include "afdiag/report.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace afdiag;

namespace {

enum Exit : int { kOk = 0, kInput = 2, kDegenerate = 3, kCalibration = 4 };

constexpr std::uint64_t kDefaultSeed = 20170701;

struct PanelArgs {
  std::string returns, factors, common, specific;
  std::string spec = "invariant";
  double chi1 = 15.0, chi2 = 10.0;
  std::string penalty = "gaussref";
  unsigned threads = 0;
};

struct CalibrationArgs {
  std::string grid = "0.01:3:0.01";
  Eigen::Index subsamples = 33;
  std::optional<bool> balanced;
  std::uint64_t seed = kDefaultSeed;
  Eigen::Index k_max = 8;
  double min_fraction = 0.25;
};

void add_panel_options(CLI::App& cmd, PanelArgs& a) {
  cmd.add_option("--returns", a.returns, "long CSV: asset_id,time,return")->required();
  cmd.add_option("--factors", a.factors, "dense CSV: time,f1,...,fK")->required();
  cmd.add_option("--common-instruments", a.common, "dense CSV: time,z1,...,zp (z1 = 1)");
  cmd.add_option("--specific-instruments", a.specific, "long CSV: asset_id,time,z1,...,zq");
  cmd.add_option("--spec", a.spec, "invariant | cond1 | cond2")
      ->check(CLI::IsMember({"invariant", "cond1", "cond2"}));
  cmd.add_option("--chi1", a.chi1, "condition-number trimming threshold");
  cmd.add_option("--chi2", a.chi2, "T/T_i trimming threshold");
  cmd.add_option("--penalty", a.penalty, "gaussref | bn1 | bn2 | bn3")
      ->check(CLI::IsMember({"gaussref", "bn1", "bn2", "bn3"}));
  cmd.add_option("--threads", a.threads, "worker threads (0 = all cores)");
}

void add_calibration_options(CLI::App& cmd, CalibrationArgs& a) {
  cmd.add_option("--grid", a.grid, "LO:HI:STEP grid for c");
  cmd.add_option("--subsamples", a.subsamples, "number of nested subsamples");
  cmd.add_option("--seed", a.seed, "subsample permutation seed");
  cmd.add_option("--k-max", a.k_max, "cap on k_hat during calibration");
  cmd.add_option("--min-fraction", a.min_fraction, "smallest subsample as a fraction of n_chi");
}

ModelKind parse_kind(const std::string& s) {
  if (s == "invariant") return ModelKind::TimeInvariant;
  if (s == "cond1") return ModelKind::ConditionalCommon;
  return ModelKind::ConditionalCommonSpecific;
}

struct LoadedPanel {
  PanelData panel;
  FactorSet factors;
  InstrumentSet instruments;
  ModelKind kind;
  TrimConfig trim;
};

LoadedPanel load_inputs(const PanelArgs& a) {
  LoadedPanel in;
  in.kind = parse_kind(a.spec);
  in.trim = {a.chi1, a.chi2};
  in.trim.validate();
  in.panel = load_panel(a.returns);
  in.factors = load_factors(a.factors, in.panel.T());
  if (in.kind != ModelKind::TimeInvariant) {
    if (a.common.empty()) throw ValidationError("--spec " + a.spec + " needs --common-instruments");
    in.instruments.common = load_common_instruments(a.common, in.panel.T());
  }
  if (in.kind == ModelKind::ConditionalCommonSpecific) {
    if (a.specific.empty()) throw ValidationError("--spec cond2 needs --specific-instruments");
    in.instruments.specific = load_specific_instruments(a.specific, in.panel);
  }
  return in;
}

CalibrationOptions calibration_options(const CalibrationArgs& a, bool panel_balanced,
                                       unsigned threads) {
  CalibrationOptions opts;
  const auto colon1 = a.grid.find(':');
  const auto colon2 = a.grid.find(':', colon1 == std::string::npos ? colon1 : colon1 + 1);
  if (colon1 == std::string::npos || colon2 == std::string::npos)
    throw ValidationError("--grid must be LO:HI:STEP");
  try {
    opts.c_grid = make_grid(std::stod(a.grid.substr(0, colon1)),
                            std::stod(a.grid.substr(colon1 + 1, colon2 - colon1 - 1)),
                            std::stod(a.grid.substr(colon2 + 1)));
  } catch (const std::logic_error&) {
    throw ValidationError("--grid must be LO:HI:STEP with numeric parts");
  }
  opts.n_subsamples = a.subsamples;
  opts.balanced = a.balanced.value_or(panel_balanced);
  opts.seed = a.seed;
  opts.k_max = a.k_max;
  opts.min_fraction = a.min_fraction;
  opts.threads = threads;
  opts.validate();
  return opts;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory " + dir + ": " + ec.message());
}

int run_diagnose(const PanelArgs& a, const CalibrationArgs& cal, std::optional<double> c,
                 bool calibrate, Eigen::Index k_max, const std::string& out) {
  const LoadedPanel in = load_inputs(a);
  ensure_dir(out);
  const ResidualAnalysis analysis =
      analyze_residuals(in.panel, in.factors, in.instruments, in.kind, in.trim, a.threads);

  PenaltySpec pen{parse_penalty_family(a.penalty), c.value_or(1.0)};
  std::optional<double> calibrated;
  if (calibrate) {
    const auto opts = calibration_options(cal, in.panel.balanced(), a.threads);
    CalibrationResult result =
        calibration_table(analysis.residuals.kept_rows(true), pen.family, opts);
    try {
      select_c_star(result, opts);
    } catch (const CalibrationError&) {
      write_calibration_csv(result, fs::path(out) / "calibration.csv");
      throw;
    }
    write_calibration_csv(result, fs::path(out) / "calibration.csv");
    pen.c = result.c_star;
    calibrated = result.c_star;
  }
  pen.validate();

  const DiagnosticReport report = make_report(analysis.spectrum, pen, k_max);
  const ReportDocument doc =
      make_document(report, in.panel.n(), analysis.spec.dimension(), calibrated);
  write_report_json(doc, fs::path(out) / "report.json");
  write_scree_csv(report, fs::path(out) / "scree.csv");
  write_scree_svg(report, fs::path(out) / "scree.svg");

  nlohmann::json summary = {{"k_hat", doc.k_hat},
                            {"selected", doc.selected},
                            {"xi", doc.xi.front().xi},
                            {"penalty", doc.penalty},
                            {"c", pen.c},
                            {"n_chi", doc.n_chi},
                            {"T", doc.T}};
  std::cout << summary.dump() << '\n';
  return kOk;
}

int run_simulate(const std::string& config, const std::string& out, unsigned threads) {
  SimulationPlan plan = load_simulation_config(config);
  ensure_dir(out);
  std::vector<McResult> results;
  for (auto& cell : plan.cells) {
    if (threads != 0) cell.threads = threads;
    results.push_back(run_experiment(cell));
    const McResult& r = results.back();
    std::cerr << "n=" << r.n << " T=" << r.T << " r=" << r.r << " prob_M1=" << r.prob_select_M1
              << " over=" << r.over << " under=" << r.under << " failed=" << r.failed << '\n';
  }
  write_mc_table(results, fs::path(out) / "mc_table.csv");
  write_mc_summary(plan, results, fs::path(out) / "mc_summary.json");
  return kOk;
}

int run_calibrate(const PanelArgs& a, const CalibrationArgs& cal, const std::string& out) {
  const LoadedPanel in = load_inputs(a);
  const auto opts = calibration_options(cal, in.panel.balanced(), a.threads);
  ensure_dir(out);
  const ResidualAnalysis analysis =
      analyze_residuals(in.panel, in.factors, in.instruments, in.kind, in.trim, a.threads);
  CalibrationResult result = calibration_table(analysis.residuals.kept_rows(true),
                                               parse_penalty_family(a.penalty), opts);
  const fs::path table = fs::path(out) / "calibration.csv";
  try {
    select_c_star(result, opts);
  } catch (const CalibrationError&) {
    write_calibration_csv(result, table);
    throw;
  }
  write_calibration_csv(result, table);
  nlohmann::json summary = {{"c_star", result.c_star},
                            {"interval", result.interval_used},
                            {"intervals_found", result.intervals.size()},
                            {"k_max", result.k_max}};
  std::cout << summary.dump() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Omitted latent factor diagnostics for unbalanced panels"};
  app.require_subcommand(1);

  PanelArgs diag_panel;
  CalibrationArgs diag_cal;
  std::optional<double> diag_c;
  bool diag_calibrate = false;
  Eigen::Index diag_kmax = -1;
  std::string diag_out;
  auto* diagnose = app.add_subcommand("diagnose", "diagnose a return panel");
  add_panel_options(*diagnose, diag_panel);
  auto* c_opt = diagnose->add_option("--c", diag_c, "penalty multiplier (default 1)");
  diagnose->add_flag("--calibrate", diag_calibrate, "calibrate the penalty multiplier")
      ->excludes(c_opt);
  add_calibration_options(*diagnose, diag_cal);
  diagnose->add_option("--report-k-max", diag_kmax, "rows of the xi table (default min(20, T-1))");
  diagnose->add_option("--out", diag_out, "output directory")->required();

  std::string sim_config, sim_out;
  unsigned sim_threads = 0;
  auto* simulate = app.add_subcommand("simulate", "run a Monte Carlo experiment");
  simulate->add_option("--config", sim_config, "key = value experiment file")->required();
  simulate->add_option("--out", sim_out, "output directory")->required();
  simulate->add_option("--threads", sim_threads, "worker threads (0 = config or all cores)");

  PanelArgs cal_panel;
  CalibrationArgs cal_args;
  std::string cal_out = ".";
  std::string cal_balanced;
  auto* calibrate = app.add_subcommand("calibrate", "calibrate the penalty multiplier");
  add_panel_options(*calibrate, cal_panel);
  add_calibration_options(*calibrate, cal_args);
  calibrate->add_option("--balanced", cal_balanced, "true | false (default: from the mask)")
      ->check(CLI::IsMember({"true", "false"}));
  calibrate->add_option("--out", cal_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInput;
  }

  try {
    if (*diagnose) return run_diagnose(diag_panel, diag_cal, diag_c, diag_calibrate, diag_kmax, diag_out);
    if (*simulate) return run_simulate(sim_config, sim_out, sim_threads);
    if (!cal_balanced.empty()) cal_args.balanced = cal_balanced == "true";
    return run_calibrate(cal_panel, cal_args, cal_out);
  } catch (const CalibrationError& e) {
    std::cerr << "calibration failed: " << e.what() << '\n';
    return kCalibration;
  } catch (const DegenerateError& e) {
    std::cerr << "degenerate: " << e.what() << '\n';
    return kDegenerate;
  } catch (const DomainError& e) {
    std::cerr << "degenerate: " << e.what() << '\n';
    return kDegenerate;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kInput;
  } catch (const ParseError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
