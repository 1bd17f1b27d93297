#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "staleinfo/controller.hpp"

namespace staleinfo {
namespace {

using namespace staleinfo::testing;

TEST(ControlInput, OriginMapsToZero) {
  const auto sol = solve_riccati(scalar_plant(), scalar_weights(10, 0.1));
  EXPECT_EQ(control_input(sol, 3, Vector::Zero(1))(0), 0.0);
}

TEST(ControlInput, LastStepUsesTerminalGain) {
  const auto sol = solve_riccati(scalar_plant(), scalar_weights(100, 0.1));
  EXPECT_NEAR(control_input(sol, 100, Vector::Ones(1))(0), -kGainN, 1e-12);
}

TEST(ControlInput, RangeAndShapeChecked) {
  const auto sol = solve_riccati(scalar_plant(), scalar_weights(5, 0.1));
  EXPECT_THROW((void)control_input(sol, 6, Vector::Ones(1)), StructuralError);
  EXPECT_THROW((void)control_input(sol, -1, Vector::Ones(1)), StructuralError);
  EXPECT_THROW((void)control_input(sol, 0, Vector::Ones(2)), StructuralError);
}

TEST(ControlInput, IsLinear) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal;
  PlantModel p;
  p.A = random_matrix(rng, 3, 3);
  p.B = random_matrix(rng, 3, 2);
  p.W = Matrix::Identity(3, 3);
  p.m0 = Vector::Zero(3);
  p.M0 = Matrix::Zero(3, 3);
  const auto sol = solve_riccati(p, CostWeights::constant(10, Matrix::Identity(3, 3),
                                                          Matrix::Identity(2, 2),
                                                          Matrix::Identity(3, 3), 1, 1));
  for (int trial = 0; trial < 100; ++trial) {
    const Vector x = random_matrix(rng, 3, 1);
    const Vector y = random_matrix(rng, 3, 1);
    const double a = normal(rng), b = normal(rng);
    const int k = trial % 11;
    const Vector lhs = control_input(sol, k, a * x + b * y);
    const Vector rhs = a * control_input(sol, k, x) + b * control_input(sol, k, y);
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, lhs.cwiseAbs().maxCoeff()));
  }
}

}  // namespace
}  // namespace staleinfo
