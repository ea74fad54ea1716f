#include "test_util.hpp"

#include "afdiag/csv.hpp"
#include "afdiag/error.hpp"
#include "afdiag/panel.hpp"

#include <doctest.h>

#include <random>

using namespace afdiag;

TEST_CASE("fully observed single asset") {
  const auto path = test_file("one_asset.csv", "asset_id,time,return\nA,1,0.01\nA,2,-0.02\nA,3,0.03\n");
  const PanelData p = load_panel(path);
  CHECK(p.n() == 1);
  CHECK(p.T() == 3);
  CHECK(p.obs_counts()(0) == 3);
  CHECK(p.balanced());
  CHECK(p.returns()(0, 1) == doctest::Approx(-0.02));
}

TEST_CASE("a missing row becomes a hole in the mask") {
  const auto path = test_file("hole.csv", "asset_id,time,return\nA,1,0.01\nA,3,0.03\nB,1,0.5\nB,2,0.1\nB,3,0.2\n");
  const PanelData p = load_panel(path);
  const Eigen::Index a = p.find("A");
  REQUIRE(a >= 0);
  CHECK(p.T() == 3);
  CHECK(p.obs_counts()(a) == 2);
  CHECK_FALSE(p.mask()(a, 1));
  CHECK(std::isnan(p.returns()(a, 1)));
  CHECK_FALSE(p.balanced());
}

TEST_CASE("panel loader rejects bad input") {
  SUBCASE("duplicate cell") {
    const auto path = test_file("dup.csv", "asset_id,time,return\nA,1,0.01\nA,1,0.02\n");
    CHECK_THROWS_AS(load_panel(path), ValidationError);
  }
  SUBCASE("malformed number carries the line") {
    const auto path = test_file("bad.csv", "asset_id,time,return\nA,1,0.01\nA,2,abc\n");
    try {
      load_panel(path);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("non-finite return") {
    const auto path = test_file("inf.csv", "asset_id,time,return\nA,1,inf\n");
    CHECK_THROWS_AS(load_panel(path), ValidationError);
  }
  SUBCASE("time index below 1") {
    const auto path = test_file("t0.csv", "asset_id,time,return\nA,0,0.1\n");
    CHECK_THROWS_AS(load_panel(path), ParseError);
  }
  SUBCASE("wrong field count") {
    const auto path = test_file("fields.csv", "asset_id,time,return\nA,1\n");
    CHECK_THROWS_AS(load_panel(path), ParseError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_panel("/nonexistent/x.csv"), ValidationError); }
}

TEST_CASE("PanelData constructor enforces its invariants") {
  MaskMatrix mask = MaskMatrix::Constant(2, 2, true);
  Eigen::MatrixXd R(2, 2);
  R << 1, 2, std::nan(""), 4;
  CHECK_THROWS_AS(PanelData({"a", "b"}, R, mask), ValidationError);
  mask(1, 0) = false;
  const PanelData p({"a", "b"}, R, mask);
  CHECK(p.obs_counts()(1) == 1);
  CHECK_THROWS_AS(PanelData({"a"}, R, mask), ValidationError);
}

TEST_CASE("write_panel round-trips bit-exactly") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  std::bernoulli_distribution keep(0.7);
  const Eigen::Index n = 7, T = 11;
  Eigen::MatrixXd R(n, T);
  MaskMatrix mask(n, T);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index t = 0; t < T; ++t) {
      R(i, t) = normal(rng) * std::pow(10.0, normal(rng) * 5);
      mask(i, t) = keep(rng);
    }
  mask(0, T - 1) = true;
  std::vector<std::string> ids;
  for (Eigen::Index i = 0; i < n; ++i) ids.push_back("asset" + std::to_string(i));
  const PanelData original(ids, mask.select(R, 0.0), mask);
  const auto path = test_dir() / "roundtrip.csv";
  write_panel(original, path);
  const PanelData back = load_panel(path);
  REQUIRE(back.T() == T);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index j = back.find(original.asset_ids()[i]);
    if (original.obs_counts()(i) == 0) {
      CHECK(j < 0);
      continue;
    }
    REQUIRE(j >= 0);
    for (Eigen::Index t = 0; t < T; ++t) {
      CHECK(back.mask()(j, t) == original.mask()(i, t));
      if (original.mask()(i, t)) CHECK(back.returns()(j, t) == original.returns()(i, t));
    }
    CHECK(back.obs_counts()(j) == back.mask().row(j).count());
  }
}

TEST_CASE("factor and instrument loaders") {
  const auto factors = test_file("factors.csv", "time,mkt,smb\n1,0.1,0.2\n2,0.3,0.4\n3,0.5,0.6\n");
  const FactorSet f = load_factors(factors, 3);
  CHECK(f.K() == 2);
  CHECK(f.names == std::vector<std::string>{"mkt", "smb"});
  CHECK(f.values(2, 1) == doctest::Approx(0.6));
  CHECK_THROWS_AS(load_factors(factors, 4), ValidationError);

  const auto common = test_file("common.csv", "time,z1,z2\n1,1,0.5\n2,1,0.7\n3,1,0.9\n");
  CHECK(load_common_instruments(common, 3).cols() == 2);
  const auto gap = test_file("common_gap.csv", "time,z1,z2\n1,1,0.5\n3,1,0.9\n");
  CHECK_THROWS_AS(load_common_instruments(gap, 3), ValidationError);
}

TEST_CASE("validate_alignment names the offending object") {
  MaskMatrix mask = MaskMatrix::Constant(2, 546, true);
  const PanelData panel({"a", "b"}, Eigen::MatrixXd::Zero(2, 546), mask);
  FactorSet f;
  f.values = Eigen::MatrixXd::Zero(546, 1);
  CHECK_NOTHROW(validate_alignment(panel, f, {}));

  FactorSet short_f;
  short_f.values = Eigen::MatrixXd::Zero(176, 1);
  CHECK_THROWS_WITH_AS(validate_alignment(panel, short_f, {}),
                       doctest::Contains("factors"), AlignmentError);

  InstrumentSet inst;
  inst.common = Eigen::MatrixXd::Ones(546, 2);
  inst.specific = {Eigen::MatrixXd::Zero(546, 1), Eigen::MatrixXd::Zero(545, 1)};
  CHECK_THROWS_WITH_AS(validate_alignment(panel, f, inst),
                       doctest::Contains("specific instruments of asset b"), AlignmentError);

  InstrumentSet no_constant;
  no_constant.common = Eigen::MatrixXd::Constant(546, 2, 0.5);
  CHECK_THROWS_AS(validate_alignment(panel, f, no_constant), ValidationError);
}

TEST_CASE("trim config validation") {
  CHECK_NOTHROW(TrimConfig{15, 10}.validate());
  CHECK_THROWS_AS((TrimConfig{0, 10}.validate()), ValidationError);
  CHECK_THROWS_AS((TrimConfig{15, 0.5}.validate()), ValidationError);
}
