#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "softcbf/benchmark.hpp"
#include "support/scenes.hpp"

namespace softcbf {
namespace {

TEST(Summarize, InterpolatedPercentiles) {
  SummaryStats s = summarize({4.0, 1.0, 3.0, 2.0, 5.0});
  EXPECT_DOUBLE_EQ(s.mean, 3.0);
  EXPECT_DOUBLE_EQ(s.median, 3.0);
  EXPECT_DOUBLE_EQ(s.p95, 4.8);
  EXPECT_DOUBLE_EQ(s.max, 5.0);
  SummaryStats e = summarize({});
  EXPECT_EQ(e.max, 0.0);
}

TEST(Table1, SmallRunAgreesWithOracle) {
  Table1Report r = benchmark_table1(50, 500, 6, 2, 50);
  EXPECT_EQ(r.n_instances, 50);
  ASSERT_EQ(r.metrics.size(), table1_metric_names().size());
  EXPECT_LE(r.metrics.at("||u_c-u_qp||_inf").max, 1e-8);
  EXPECT_LE(r.metrics.at("||u_c-u_qp||_2").max, 1e-8);
  EXPECT_LE(r.metrics.at("|f(u_c)-f(u_qp)|").max, 1e-10);
  EXPECT_LE(r.metrics.at("max(Au_c-b,0)").max, 1e-12);
  EXPECT_LE(r.metrics.at("max(Au_qp-b,0)").max, 1e-8);
  EXPECT_EQ(r.active_set_matches, r.n_instances);
  EXPECT_GT(r.closed_form_us, 0.0);
  EXPECT_GT(r.speedup, 1.0);
  std::ostringstream os;
  write_table1_csv(os, r);
  for (const auto& n : table1_metric_names()) EXPECT_NE(os.str().find(n), std::string::npos);
}

TEST(Table1, RejectsEmptySizes) { EXPECT_THROW(benchmark_table1(0), InvalidArgument); }

TEST(Resolution, SingleRowReport) {
  RobotModel m = default_robot_model();
  ResolutionOptions opt;
  opt.n_configurations = 2;
  opt.n_calls = 2;
  opt.hausdorff.dense_count = 300;
  auto rows = benchmark_resolution_scaling({20}, m, default_tendon_layout(m), testing::three_obstacle_scene(),
                                           Vec3(0.1, 0.05, 0.32), SafetyConfig{}, opt);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].n_res, 20);
  ASSERT_EQ(rows[0].hausdorff.size(), 2u);
  EXPECT_GT(rows[0].hausdorff_mean, 0.0);
  EXPECT_GE(rows[0].hausdorff_max, rows[0].hausdorff_mean);
  EXPECT_GT(rows[0].oracle_us, 0.0);
  std::ostringstream os;
  write_resolution_csv(os, rows);
  EXPECT_EQ(os.str().substr(0, 5), "n_res");
}

TEST(RandomConfiguration, RespectsRanges) {
  RobotModel m = default_robot_model();
  std::mt19937_64 rng(9);
  for (int i = 0; i < 50; ++i) {
    Configuration q = random_configuration(rng, m, 6.0, 0.1);
    for (int s = 0; s < m.num_segments(); ++s)
      for (int c = 0; c < 6; ++c) EXPECT_LE(std::abs(q[6 * s + c]), c < 3 ? 6.0 : 0.1);
  }
}

}  // namespace
}  // namespace softcbf
