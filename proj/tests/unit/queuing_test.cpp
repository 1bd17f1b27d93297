#include <gtest/gtest.h>

#include <memory>
#include <random>

#include "oracles.hpp"
#include "staleinfo/queuing.hpp"

namespace staleinfo {
namespace {

using namespace staleinfo::testing;

Vector scalar(double v) { return Vector::Constant(1, v); }

struct ScalarProblem {
  PlantModel plant = scalar_plant();
  CostWeights weights;
  RiccatiSolution sol;
  std::vector<double> theta;

  ScalarProblem(int horizon, double lambda)
      : weights(scalar_weights(horizon, lambda)),
        sol(solve_riccati(plant, weights)),
        theta(age_rewards(weights)) {}

  [[nodiscard]] std::vector<double> gammas() const {
    std::vector<double> g;
    for (const auto& m : sol.Gamma) g.push_back(m(0, 0));
    return g;
  }
};

TEST(ZeroWait, AlwaysZero) {
  const std::vector<Vector> noise(6, scalar(1.0));
  EXPECT_EQ(zero_wait(QueueState{Age(5), noise}, 6), Age(0));
  EXPECT_EQ(zero_wait(QueueState{Age(0), {}}, 0), Age(0));
  EXPECT_EQ(ZeroWaitPolicy{}.choose(QueueState{Age(2), noise}, 3), Age(0));
}

TEST(GreedyChoose, SmallNoiseIsWorthWaitingFor) {
  const ScalarProblem p(100, 0.1);
  const std::vector<Vector> noise{scalar(0.5)};
  // cost(0) = 0, cost(1) = -10 + 21.634615 * 0.25 = -4.59
  EXPECT_EQ(greedy_choose(QueueState{Age(0), noise}, 100, p.sol, p.theta, p.plant.A), Age(1));
}

TEST(GreedyChoose, LargeNoiseForcesTransmission) {
  const ScalarProblem p(100, 0.1);
  const std::vector<Vector> noise{scalar(1.0)};
  // cost(1) = -10 + 21.634615 = +11.63
  EXPECT_EQ(greedy_choose(QueueState{Age(0), noise}, 100, p.sol, p.theta, p.plant.A), Age(0));
}

TEST(GreedyChoose, TiesGoToTheStalestCandidate) {
  ScalarProblem p(10, 0.1);
  std::fill(p.theta.begin(), p.theta.end(), 0.0);
  const std::vector<Vector> noise(5, scalar(0.0));
  EXPECT_EQ(greedy_choose(QueueState{Age(3), noise}, 5, p.sol, p.theta, p.plant.A), Age(4));
}

TEST(GreedyChoose, FirstStepIsForcedFresh) {
  const ScalarProblem p(10, 0.001);
  EXPECT_EQ(greedy_choose(QueueState{Age(0), {}}, 0, p.sol, p.theta, p.plant.A), Age(0));
}

TEST(GreedyChoose, ShortWindowThrows) {
  const ScalarProblem p(10, 0.1);
  const std::vector<Vector> noise{scalar(0.0)};
  EXPECT_THROW((void)greedy_choose(QueueState{Age(3), noise}, 5, p.sol, p.theta, p.plant.A),
               StructuralError);
}

TEST(GreedyBounded, TruncatesCandidates) {
  ScalarProblem p(10, 0.1);
  std::fill(p.theta.begin(), p.theta.end(), 0.0);
  const std::vector<Vector> noise(5, scalar(0.0));
  const QueueState state{Age(3), noise};
  EXPECT_EQ(greedy_bounded(state, 5, p.sol, p.theta, p.plant.A, 1), Age(1));
  EXPECT_EQ(greedy_bounded(state, 5, p.sol, p.theta, p.plant.A, 0), Age(0));
  EXPECT_THROW((void)greedy_bounded(state, 5, p.sol, p.theta, p.plant.A, -1), StructuralError);
}

// Random reachable states: every policy stays inside [0, prev + 1]; bound 0
// reproduces zero-wait and an unbinding bound reproduces greedy.
TEST(QueuingPolicies, AdmissibleOnRandomStates) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> normal(0.0, 2.0);
  std::uniform_real_distribution<double> lam(0.002, 2.0);
  for (int trial = 0; trial < 300; ++trial) {
    const int N = 30;
    const ScalarProblem p(N, lam(rng));
    const auto sol = std::make_shared<const RiccatiSolution>(p.sol);
    const GreedyPolicy greedy(sol, p.theta, p.plant.A);
    const GreedyPolicy bound0(sol, p.theta, p.plant.A, 0);
    const GreedyPolicy bound2(sol, p.theta, p.plant.A, 2);
    const GreedyPolicy unbound(sol, p.theta, p.plant.A, N + 1);

    const int k = 1 + trial % N;
    const int prev = static_cast<int>(rng() % static_cast<unsigned>(k));
    std::vector<Vector> noise;
    for (int t = 0; t < k; ++t) noise.push_back(scalar(normal(rng)));
    const QueueState state{Age(prev), noise};

    for (const QueuingPolicy* policy :
         std::initializer_list<const QueuingPolicy*>{&greedy, &bound0, &bound2, &unbound}) {
      const Age eta = policy->choose(state, k);
      EXPECT_LE(eta.value(), prev + 1) << policy->name();
    }
    EXPECT_EQ(bound0.choose(state, k), Age(0));
    EXPECT_LE(bound2.choose(state, k).value(), 2);
    EXPECT_EQ(unbound.choose(state, k), greedy.choose(state, k));

    std::vector<double> hist;
    for (const auto& w : noise) hist.push_back(w(0));
    EXPECT_EQ(greedy.choose(state, k).value(),
              greedy_rule(1.5, p.sol.Gamma[k](0, 0), p.theta[k], prev + 1, hist));
  }
}

TEST(NoiseGrid, TwoPointMatchesVariance) {
  const NoiseGrid g = NoiseGrid::two_point(4.0);
  EXPECT_EQ(g.atoms, (std::vector<double>{-2.0, 2.0}));
  EXPECT_EQ(g.probs, (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(g.atom_index(2.0), 1);
  EXPECT_EQ(g.atom_index(0.3), -1);
  EXPECT_THROW((NoiseGrid{{1, 2}, {0.5, 0.6}}.validate()), StructuralError);
  EXPECT_THROW((NoiseGrid{{1, 2, 3, 4, 5, 6}, {1, 0, 0, 0, 0, 0}}.validate()), StructuralError);
}

TEST(DpOracle, NoiselessGridAlwaysWaits) {
  const ScalarProblem p(5, 0.1);
  const NoiseGrid grid{{0.0}, {1.0}};
  const DpOracle dp = dp_oracle_build(p.plant, p.weights, p.sol, grid);
  double expected = 0.0;
  for (int k = 0; k <= 5; ++k) expected -= p.theta[k] * k;
  EXPECT_DOUBLE_EQ(dp.expected_cost(), expected);

  std::vector<Vector> noise;
  for (int k = 0; k <= 5; ++k) {
    EXPECT_EQ(dp.lookup(k, Age(k == 0 ? 0 : k - 1), noise), Age(k)) << "k=" << k;
    noise.push_back(scalar(0.0));
  }
}

TEST(DpOracle, NoAgeRewardMeansZeroValue) {
  ScalarProblem p(4, 0.1);
  std::fill(p.weights.theta_check.begin(), p.weights.theta_check.end(), 0.0);
  const NoiseGrid grid = NoiseGrid::two_point(4.0);
  const DpOracle dp = dp_oracle_build(p.plant, p.weights, p.sol, grid);
  EXPECT_EQ(dp.expected_cost(), 0.0);
  EXPECT_EQ(enumerate_expected_cost(p.plant, p.weights, p.sol, grid, ZeroWaitPolicy{}), 0.0);
}

class ScalarGridInstance : public ::testing::TestWithParam<double> {};

TEST_P(ScalarGridInstance, OracleAgreesWithTreeRecursionAndOrdersPolicies) {
  const ScalarProblem p(4, GetParam());
  const NoiseGrid grid = NoiseGrid::two_point(4.0);
  const DpOracle dp = dp_oracle_build(p.plant, p.weights, p.sol, grid);
  const auto gam = p.gammas();

  const double tree = optimal_value_tree(1.5, gam, p.theta, grid.atoms, grid.probs);
  EXPECT_NEAR(dp.expected_cost(), tree, 1e-10 * std::max(1.0, std::abs(tree)));

  const DpOraclePolicy dp_policy(std::make_shared<const DpOracle>(dp));
  const double dp_enum = enumerate_expected_cost(p.plant, p.weights, p.sol, grid, dp_policy);
  EXPECT_NEAR(dp_enum, dp.expected_cost(), 1e-10 * std::max(1.0, std::abs(tree)));

  const GreedyPolicy greedy(std::make_shared<const RiccatiSolution>(p.sol), p.theta, p.plant.A);
  const double greedy_value = enumerate_expected_cost(p.plant, p.weights, p.sol, grid, greedy);
  const double greedy_ref = enumerate_rule(
      1.5, gam, p.theta, grid.atoms, grid.probs, [&](int k, int prev, const auto& hist) {
        return k == 0 ? 0 : greedy_rule(1.5, gam[k], p.theta[k], prev + 1, hist);
      });
  EXPECT_NEAR(greedy_value, greedy_ref, 1e-10 * std::max(1.0, std::abs(greedy_ref)));

  const double zero_value =
      enumerate_expected_cost(p.plant, p.weights, p.sol, grid, ZeroWaitPolicy{});
  EXPECT_EQ(zero_value, 0.0);
  // Same summation order as the greedy value, so equal decisions compare equal.
  EXPECT_LE(dp_enum, greedy_value);
  EXPECT_LE(greedy_value, zero_value);
}

INSTANTIATE_TEST_SUITE_P(Multipliers, ScalarGridInstance,
                         ::testing::Values(1.0, 0.1, 0.05, 0.02, 0.01, 0.005));

TEST(DpOracle, MatchesTreeRecursionOnRandomInstances) {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(0.2, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int N = 1 + trial % 5;
    PlantModel plant = scalar_plant();
    plant.A(0, 0) = u(rng) * (trial % 2 ? 1.0 : -1.0);
    plant.B(0, 0) = u(rng);
    const CostWeights w = CostWeights::constant(N, Matrix::Constant(1, 1, u(rng)),
                                                Matrix::Constant(1, 1, u(rng)),
                                                Matrix::Constant(1, 1, u(rng)), 1.0, u(rng) * 0.1);
    const auto sol = solve_riccati(plant, w);
    const NoiseGrid grid{{-1.5, 0.25, 2.0}, {0.3, 0.5, 0.2}};
    const DpOracle dp = dp_oracle_build(plant, w, sol, grid);
    std::vector<double> gam, theta = age_rewards(w);
    for (const auto& g : sol.Gamma) gam.push_back(g(0, 0));
    const double tree = optimal_value_tree(plant.A(0, 0), gam, theta, grid.atoms, grid.probs);
    EXPECT_NEAR(dp.expected_cost(), tree, 1e-10 * std::max(1.0, std::abs(tree))) << trial;
    const double dp_enum = enumerate_expected_cost(
        plant, w, sol, grid, DpOraclePolicy(std::make_shared<const DpOracle>(dp)));
    EXPECT_NEAR(dp_enum, tree, 1e-10 * std::max(1.0, std::abs(tree))) << trial;
  }
}

TEST(DpOracle, RefusesOversizedStateSpace) {
  const ScalarProblem p(8, 0.1);
  const NoiseGrid grid{{-2, -1, 0, 1, 2}, {0.2, 0.2, 0.2, 0.2, 0.2}};
  try {
    (void)dp_oracle_build(p.plant, p.weights, p.sol, grid);
    FAIL() << "expected StateSpaceTooLarge";
  } catch (const StateSpaceTooLarge& e) {
    EXPECT_GT(e.required, e.cap);
    EXPECT_EQ(e.cap, 1'000'000u);
  }
  const ScalarProblem long_horizon(9, 0.1);
  EXPECT_THROW((void)dp_oracle_build(long_horizon.plant, long_horizon.weights, long_horizon.sol,
                                     NoiseGrid::two_point(4.0)),
               StructuralError);
}

TEST(DpOracle, RejectsOffGridNoiseAndVectorPlants) {
  const ScalarProblem p(3, 0.1);
  const DpOracle dp = dp_oracle_build(p.plant, p.weights, p.sol, NoiseGrid::two_point(4.0));
  const std::vector<Vector> noise{scalar(0.7)};
  EXPECT_THROW((void)dp.lookup(1, Age(0), noise), StructuralError);
  EXPECT_THROW((void)dp.lookup(4, Age(0), noise), StructuralError);

  PlantModel vec;
  vec.A = Matrix::Identity(2, 2);
  vec.B = Matrix::Identity(2, 2);
  vec.W = Matrix::Identity(2, 2);
  vec.m0 = Vector::Zero(2);
  vec.M0 = Matrix::Zero(2, 2);
  const CostWeights w = CostWeights::constant(2, Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                                              Matrix::Identity(2, 2), 1.0, 1.0);
  EXPECT_THROW((void)dp_oracle_build(vec, w, solve_riccati(vec, w), NoiseGrid::two_point(1.0)),
               StructuralError);
}

TEST(GreedyBounded, ExpectedCostNonIncreasingInMemory) {
  for (double lambda : {0.1, 0.02, 0.01, 0.005}) {
    const ScalarProblem p(5, lambda);
    const NoiseGrid grid = NoiseGrid::two_point(4.0);
    const auto sol = std::make_shared<const RiccatiSolution>(p.sol);
    double previous = 0.0;
    for (int kbar = 0; kbar <= 6; ++kbar) {
      const GreedyPolicy policy(sol, p.theta, p.plant.A, kbar);
      const double value = enumerate_expected_cost(p.plant, p.weights, p.sol, grid, policy);
      EXPECT_LE(value, previous + 1e-12) << "lambda " << lambda << " kbar " << kbar;
      previous = value;
    }
  }
}

TEST(PolicySpec, ParsesEveryForm) {
  EXPECT_EQ(parse_policy_spec("zero-wait").kind, PolicySpec::Kind::kZeroWait);
  EXPECT_EQ(parse_policy_spec("greedy").kind, PolicySpec::Kind::kGreedy);
  EXPECT_EQ(parse_policy_spec("dp-oracle").kind, PolicySpec::Kind::kDpOracle);
  const PolicySpec b = parse_policy_spec("greedy-bounded:7");
  EXPECT_EQ(b.kind, PolicySpec::Kind::kGreedyBounded);
  EXPECT_EQ(b.kbar, 7);
  EXPECT_EQ(b.to_string(), "greedy-bounded:7");
  EXPECT_THROW((void)parse_policy_spec("greedy-bounded:"), StructuralError);
  EXPECT_THROW((void)parse_policy_spec("greedy-bounded:-1"), StructuralError);
  EXPECT_THROW((void)parse_policy_spec("greedy-bounded:3x"), StructuralError);
  EXPECT_THROW((void)parse_policy_spec("optimal"), StructuralError);
}

}  // namespace
}  // namespace staleinfo
