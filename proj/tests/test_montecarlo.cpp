#include "test_util.hpp"

#include "afdiag/error.hpp"
#include "afdiag/montecarlo.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace afdiag;

namespace {

struct Design {
  double rho, beta;
  Eigen::Index J;
};

constexpr Design kPanels[] = {{0, 0, 0},   {0.3, 0, 0},   {0.5, 0, 0},   {0.7, 0, 0},
                              {0, 0.2, 5}, {0, 0.2, 10},  {0, 0.5, 5},   {0.2, 0.2, 5}};

}  // namespace

TEST_CASE("error scale") {
  DgpConfig cfg;
  CHECK(cfg.error_scale() == 1.0);
  cfg.rho = 0.5;
  cfg.beta = 0.2;
  cfg.J = 5;
  CHECK(cfg.error_scale() == doctest::Approx(0.73193).epsilon(1e-5));
}

TEST_CASE("DGP validation") {
  DgpConfig cfg;
  cfg.rho = -0.1;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.rho = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.rho = 0.0;
  cfg.beta = -1;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.beta = 0;
  cfg.n = 1;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  CHECK_THROWS_AS((MaskConfig{0, 1}.validate(10)), ValidationError);
  CHECK_THROWS_AS((MaskConfig{11, 1}.validate(10)), ValidationError);
}

TEST_CASE("i.i.d. design is standard normal noise") {
  DgpConfig cfg;
  cfg.n = 200;
  cfg.T = 250;
  const SimulatedPanel sim = gen_latent_panel(cfg);
  CHECK(sim.panel.balanced());
  CHECK(sim.factors.K() == 0);
  CHECK(sim.factors.T() == 250);
  const Eigen::MatrixXd& R = sim.panel.returns();
  const double mean = R.mean();
  const double var = (R.array() - mean).square().mean();
  CHECK(std::abs(mean) < 0.01);
  CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("interior errors have unit variance in every design") {
  for (const Design& d : kPanels) {
    CAPTURE(d.rho);
    CAPTURE(d.beta);
    CAPTURE(d.J);
    DgpConfig cfg;
    cfg.rho = d.rho;
    cfg.beta = d.beta;
    cfg.J = d.J;
    cfg.n = 2 * d.J + 2;
    cfg.T = 500;
    cfg.seed = 1234;
    // Independent replications give independent per-replication means of
    // e^2 for the interior asset J, from which the standard error follows.
    const int reps = 2000;
    std::vector<double> means(reps);
    for (int s = 0; s < reps; ++s)
      means[s] = gen_latent_panel(cfg, s).panel.returns().row(d.J).squaredNorm() / cfg.T;
    const double m = std::accumulate(means.begin(), means.end(), 0.0) / reps;
    double ss = 0.0;
    for (double x : means) ss += (x - m) * (x - m);
    const double se = std::sqrt(ss / (reps - 1) / reps);
    CHECK(std::abs(m - 1.0) <= 3.0 * se);
  }
}

TEST_CASE("cross-sectional correlation vanishes beyond 2J") {
  DgpConfig cfg;
  cfg.beta = 0.5;
  cfg.J = 2;
  cfg.n = 30;
  cfg.T = 4000;
  const Eigen::MatrixXd R = gen_latent_panel(cfg).panel.returns();
  const auto corr = [&](Eigen::Index a, Eigen::Index b) {
    return R.row(a).dot(R.row(b)) / std::sqrt(R.row(a).squaredNorm() * R.row(b).squaredNorm());
  };
  // MA weights: corr at lag h in i equals sum_k w_k w_{k+h} / sum_k w_k^2.
  CHECK(corr(10, 11) > 0.3);
  CHECK(corr(10, 14) > 0.03);
  for (Eigen::Index h = 5; h <= 8; ++h) CHECK(std::abs(corr(10, 10 + h)) < 4.0 / std::sqrt(4000.0));
}

TEST_CASE("generation is deterministic and replication-specific") {
  DgpConfig cfg;
  cfg.n = 20;
  cfg.T = 15;
  cfg.r = 2;
  cfg.rho = 0.4;
  const SimulatedPanel a = gen_latent_panel(cfg, 3);
  const SimulatedPanel b = gen_latent_panel(cfg, 3);
  const SimulatedPanel c = gen_latent_panel(cfg, 4);
  CHECK(a.panel.returns() == b.panel.returns());
  CHECK(a.panel.returns() != c.panel.returns());
  CHECK(a.true_r == 2);
}

TEST_CASE("observable design nests the latent one") {
  DgpConfig cfg;
  cfg.n = 25;
  cfg.T = 30;
  cfg.r = 1;
  cfg.with_observable = true;
  const SimulatedPanel latent = gen_latent_panel(cfg, 2);
  const SimulatedPanel nested = gen_obs_latent_panel(cfg, 2, true);
  const SimulatedPanel full = gen_obs_latent_panel(cfg, 2);
  CHECK(nested.panel.returns() == latent.panel.returns());
  CHECK(nested.factors.K() == 1);
  CHECK(nested.factors.values == full.factors.values);
  CHECK(full.panel.returns() != latent.panel.returns());
}

TEST_CASE("observable factor is absorbed by the regression") {
  ExperimentConfig cfg;
  cfg.dgp.n = 120;
  cfg.dgp.T = 120;
  cfg.dgp.with_observable = true;
  cfg.S = 10;
  const McResult r0 = run_experiment(cfg);
  CHECK(r0.prob_select_M1 == 1.0);
  CHECK(r0.failed == 0);
  cfg.regress = false;
  const McResult unadjusted = run_experiment(cfg);
  CHECK(unadjusted.prob_select_M1 == 0.0);
}

TEST_CASE("masks are contiguous with uniform lengths") {
  const Eigen::Index T = 20, n = 20000;
  const MaskMatrix m = gen_mask(n, T, {5, 7});
  std::vector<double> counts(T + 1, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = m.row(i);
    const Eigen::Index Ti = row.count();
    REQUIRE(Ti >= 5);
    REQUIRE(Ti <= T);
    Eigen::Index first = 0;
    while (!row(first)) ++first;
    CHECK(row.segment(first, Ti).all());
    counts[Ti] += 1.0;
  }
  // Chi-square goodness of fit against U{5..20}: 15 degrees of freedom,
  // 0.999 quantile 37.7.
  const double expected = static_cast<double>(n) / 16.0;
  double chi2 = 0.0;
  for (Eigen::Index k = 5; k <= T; ++k) chi2 += std::pow(counts[k] - expected, 2) / expected;
  CHECK(chi2 < 37.7);

  CHECK(gen_mask(5, 8, {8, 1}).all());
}

TEST_CASE("apply_mask hides returns") {
  DgpConfig cfg;
  cfg.n = 6;
  cfg.T = 9;
  const SimulatedPanel sim = gen_latent_panel(cfg);
  const MaskMatrix m = gen_mask(6, 9, {3, 2});
  const PanelData masked = apply_mask(sim.panel, m);
  for (Eigen::Index i = 0; i < 6; ++i) CHECK(masked.obs_counts()(i) == m.row(i).count());
  CHECK_THROWS_AS(apply_mask(sim.panel, MaskMatrix::Constant(5, 9, true)), AlignmentError);
}

TEST_CASE("experiment bookkeeping") {
  ExperimentConfig cfg;
  cfg.dgp.n = 60;
  cfg.dgp.T = 50;
  cfg.dgp.r = 2;
  cfg.S = 6;
  const McResult r = run_experiment(cfg);
  CHECK(r.S == 6);
  CHECK(r.k_hats.size() == 6);
  CHECK(r.over + r.under + r.correct == doctest::Approx(1.0));
  Eigen::Index total = 0;
  for (auto h : r.histogram) total += h;
  CHECK(total == r.S - r.failed);
  CHECK(r.mean_T_bar == 50.0);

  cfg.S = 0;
  CHECK_THROWS_AS(run_experiment(cfg), ValidationError);
}

TEST_CASE("a trimmed-out cross-section counts as a failed replication") {
  ExperimentConfig cfg;
  cfg.dgp.n = 2;
  cfg.dgp.T = 40;
  cfg.mask = MaskConfig{2, 1};
  cfg.trim.chi2 = 1.0;  // only fully observed assets survive
  cfg.S = 10;
  const McResult r = run_experiment(cfg);
  CHECK(r.failed >= 1);
  CHECK(r.failures.size() == static_cast<std::size_t>(r.failed));
  Eigen::Index marked = 0;
  for (std::size_t s = 0; s < r.k_hats.size(); ++s)
    if (r.k_hats[s] < 0) {
      ++marked;
      CHECK(std::isnan(r.xi[s]));
    }
  CHECK(marked == r.failed);
}

TEST_CASE("simulation config parsing") {
  const SimulationPlan plan = parse_simulation_config(
      "# Panel G\n"
      "n = 150, 1500\n"
      "T = 500\n"
      "r = 0\n"
      "rho = 0\nbeta = 0.5\nJ = 5\n"
      "S = 3\n"
      "penalty_family = gaussref\n"
      "c = calibrate\n"
      "chi1 = 15\nchi2 = 10\nseed = 77\n"
      "min_Ti = 60\n");
  REQUIRE(plan.cells.size() == 2);
  CHECK(plan.cells[1].dgp.n == 1500);
  CHECK(plan.cells[0].dgp.beta == 0.5);
  CHECK(plan.cells[0].calibrate);
  REQUIRE(plan.cells[0].mask.has_value());
  CHECK(plan.cells[0].mask->min_Ti == 60);
  CHECK(plan.cells[0].dgp.seed == 77);

  CHECK_FALSE(parse_simulation_config("c = 1.5\n").cells[0].calibrate);
  CHECK_THROWS_AS(parse_simulation_config("rho = -0.2\n"), ValidationError);
  CHECK_THROWS_AS(parse_simulation_config("bogus = 1\n"), ParseError);
  CHECK_THROWS_AS(parse_simulation_config("n 150\n"), ParseError);
}

TEST_CASE("table and summary writers") {
  ExperimentConfig cfg;
  cfg.dgp.n = 30;
  cfg.dgp.T = 30;
  cfg.S = 2;
  SimulationPlan plan{{cfg}};
  const std::vector<McResult> results{run_experiment(cfg)};
  const auto dir = test_dir();
  write_mc_table(results, dir / "mc_table.csv");
  write_mc_summary(plan, results, dir / "mc_summary.json");
  std::ifstream table(dir / "mc_table.csv");
  std::string header, row;
  std::getline(table, header);
  std::getline(table, row);
  CHECK(header == "n,T,r,S,prob_M1,over,under,correct,failed,mean_T_bar");
  CHECK(row.rfind("30,30,0,2,", 0) == 0);
  CHECK(std::filesystem::file_size(dir / "mc_summary.json") > 0);
}
