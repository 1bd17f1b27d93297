#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "staleinfo/simulator.hpp"
#include "staleinfo/tradeoff.hpp"

namespace staleinfo {
namespace {

using namespace staleinfo::testing;
namespace fs = std::filesystem;

SweepOptions greedy_options(std::size_t trajectories, std::uint64_t seed = 42) {
  SweepOptions o;
  o.policy = parse_policy_spec("greedy");
  o.trajectories = trajectories;
  o.master_seed = seed;
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class TempDir {
 public:
  TempDir()
      : path_(fs::temp_directory_path() /
              ("staleinfo_" + std::string(::testing::UnitTest::GetInstance()
                                              ->current_test_info()
                                              ->name()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  [[nodiscard]] const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

TEST(LogSpaced, EndpointsAndRatio) {
  const auto grid = default_lambda_grid();
  ASSERT_EQ(grid.size(), 20u);
  EXPECT_DOUBLE_EQ(grid.front(), 0.005);
  EXPECT_DOUBLE_EQ(grid.back(), 5.0);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    EXPECT_NEAR(grid[i] / grid[i - 1], std::pow(1000.0, 1.0 / 19.0), 1e-12);
  }
  EXPECT_EQ(log_spaced(2.0, 2.0, 1), std::vector<double>{2.0});
  EXPECT_THROW((void)log_spaced(0.0, 1.0, 5), StructuralError);
}

TEST(Sweep, HugeMultiplierNeverWaits) {
  const std::vector<double> lambdas{1e9};
  const auto pts = sweep(scalar_plant(), scalar_weights(100, 0.1), lambdas, greedy_options(20));
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_EQ(pts[0].A_hat, 0.0);
  EXPECT_EQ(pts[0].peak_age, 0);
  EXPECT_EQ(pts[0].trajectories, 20u);
}

TEST(Sweep, SmallerMultiplierTradesCostForStaleness) {
  const std::vector<double> lambdas{0.01, 0.1};
  const auto pts = sweep(scalar_plant(), scalar_weights(100, 0.1), lambdas, greedy_options(500));
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_EQ(pts[0].lambda, 0.1);
  EXPECT_EQ(pts[1].lambda, 0.01);
  EXPECT_GT(pts[1].A_hat, pts[0].A_hat);
  EXPECT_GT(pts[1].J_hat, pts[0].J_hat);
  EXPECT_GT(pts[1].peak_age, pts[0].peak_age);
}

TEST(Sweep, SingleTrajectoryMatchesDirectSimulation) {
  const std::vector<double> lambdas{0.02};
  const auto pts = sweep(scalar_plant(), scalar_weights(50, 0.1), lambdas, greedy_options(1, 9));
  const auto setup = SimulationSetup::create(scalar_plant(), scalar_weights(50, 0.02));
  const auto policy = make_policy(parse_policy_spec("greedy"), setup);
  const auto rec = run_trajectory(setup, *policy, RngStream{9, 0});
  EXPECT_EQ(pts[0].A_hat, rec.age_sum / 50.0);
  EXPECT_EQ(pts[0].J_hat, rec.quad_sum / 50.0);
  EXPECT_EQ(pts[0].se_A, 0.0);
}

TEST(Sweep, WorkerCountDoesNotChangeResults) {
  const std::vector<double> lambdas{0.05, 0.01};
  SweepOptions parallel = greedy_options(60);
  parallel.workers = 5;
  const auto a = sweep(scalar_plant(), scalar_weights(40, 0.1), lambdas, greedy_options(60));
  const auto b = sweep(scalar_plant(), scalar_weights(40, 0.1), lambdas, parallel);
  std::ostringstream sa, sb;
  write_curve_csv(sa, a);
  write_curve_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(Sweep, RejectsNonPositiveMultiplier) {
  for (double bad : {0.0, -1.0}) {
    const std::vector<double> lambdas{0.1, bad};
    EXPECT_THROW((void)sweep(scalar_plant(), scalar_weights(10, 0.1), lambdas, greedy_options(1)),
                 StructuralError);
  }
}

TEST(EmitCurve, WritesSortedCsv) {
  const TempDir dir;
  const std::vector<TradeoffPoint> pts{{0.01, 3.0, 0.1, 40.0, 1.0, 10, 5},
                                       {1.0, 0.0, 0.0, 30.0, 1.0, 10, 0},
                                       {0.1, 1.0, 0.1, 32.0, 1.0, 10, 2}};
  const fs::path csv = dir.path() / "curve.csv";
  emit_curve(pts, csv);
  const auto rows = parse_csv(slurp(csv));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"lambda", "A_hat", "se_A", "J_hat", "se_J", "M"}));
  EXPECT_EQ(std::stod(rows[1][0]), 1.0);
  EXPECT_EQ(std::stod(rows[2][0]), 0.1);
  EXPECT_EQ(std::stod(rows[3][0]), 0.01);
  EXPECT_EQ(rows[3][5], "10");
  EXPECT_FALSE(fs::exists(dir.path() / "curve.svg"));
}

TEST(EmitCurve, PlotAddsLabelledSvg) {
  const TempDir dir;
  const std::vector<TradeoffPoint> pts{{0.1, 1.0, 0.1, 32.0, 1.0, 10, 2},
                                       {0.01, 3.0, 0.1, 40.0, 1.0, 10, 5}};
  emit_curve(pts, dir.path() / "curve.csv", true);
  const std::string svg = slurp(dir.path() / "curve.svg");
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("control performance J"), std::string::npos);
  EXPECT_NE(svg.find("average age A"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(EmitCurve, EmptyInputTouchesNothing) {
  const TempDir dir;
  const fs::path csv = dir.path() / "curve.csv";
  EXPECT_THROW(emit_curve({}, csv, true), StructuralError);
  EXPECT_FALSE(fs::exists(csv));
  EXPECT_FALSE(fs::exists(dir.path() / "curve.svg"));
}

TEST(EmitCurve, UnwritablePathIsRuntimeError) {
  const std::vector<TradeoffPoint> pts{{0.1, 1.0, 0.1, 32.0, 1.0, 10, 2}};
  EXPECT_THROW(emit_curve(pts, "/nonexistent-dir/curve.csv"), std::runtime_error);
}

}  // namespace
}  // namespace staleinfo
