#include <doctest.h>

#include <cmath>

#include "ifem/harness.hpp"

using namespace ifem;

TEST_CASE("2D hierarchy coarsens down to the direct-solve threshold") {
  auto hier = hierarchy_2d(64, 2000);
  REQUIRE(hier.num_levels() == 3);
  CHECK(hier.levels[0].num_elements() == 2 * 16 * 16);
  CHECK(hier.finest().num_elements() == 2 * 64 * 64);
  // already small enough: a single level, no refinement
  CHECK(hierarchy_2d(12, 2000).num_levels() == 1);
  // odd meshes cannot be halved
  CHECK(hierarchy_2d(81, 10).num_levels() == 1);
}

TEST_CASE("rate table arithmetic and iteration formatting") {
  std::vector<StudyRow> rows(3);
  for (int i = 0; i < 3; ++i) {
    rows[i].h = 1.0 / (1 << i);
    rows[i].l2 = 1.0 / (1 << (2 * i));  // exactly second order
    rows[i].h1 = 1.0 / (1 << i);       // exactly first order
  }
  fill_rates(rows);
  CHECK(rows[1].rate_l2 == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rows[2].rate_l2 == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rows[2].rate_h1 == doctest::Approx(1.0).epsilon(1e-12));

  CHECK(iter2_str(-1) == "--");
  CHECK(iter2_str(7) == "7");

  rows[0].iter2 = -1;
  auto csv = format_csv(rows);
  CHECK(csv.find("M,level,dofs,h,l2,rate_l2,h1,rate_h1,iter1,iter2") != std::string::npos);
  CHECK(csv.find("--") != std::string::npos);
  auto md = format_markdown(rows);
  CHECK(md.find("| M | level |") != std::string::npos);
}

TEST_CASE("zero data yields a vanishing discrete solution end to end") {
  RunConfig cfg;
  cfg.problem = "zero";
  cfg.M = 8;
  auto r = run_2d(cfg);
  CHECK(r.l2 < 1e-10);
  CHECK(r.h1 < 1e-9);
  CHECK(r.iter2 == -1);  // small run: inner solve is direct
}

TEST_CASE("continuous problem converges at second order in L2") {
  RunConfig cfg;
  cfg.problem = "continuous";
  auto rows = convergence_study_2d(cfg, {8, 16, 32});
  CHECK(rows[2].rate_l2 == doctest::Approx(2.0).epsilon(0.25));
  CHECK(rows[2].rate_h1 == doctest::Approx(1.0).epsilon(0.25));
}

TEST_CASE("condition estimation is wired through the run configuration") {
  RunConfig cfg;
  cfg.problem = "disk";
  cfg.beta_plus = 2;
  cfg.beta_minus = 1;
  cfg.M = 8;
  cfg.estimate_condition = true;
  auto r = run_2d(cfg);
  CHECK(r.cond > 1);
  CHECK(r.cond_settled);
}
