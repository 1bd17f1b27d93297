#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "staleinfo/model.hpp"
#include "staleinfo/riccati.hpp"

namespace staleinfo {

/// What the transmitter knows when it picks the age at step k.
///
/// noise_history is chronological and ends at w_{k-1}; it must hold at least
/// prev_age + 1 samples for k >= 1 so that every candidate age can be scored.
struct QueueState {
  Age prev_age;
  std::span<const Vector> noise_history;
};

/// Picks eta_k from [0, eta_{k-1} + 1]. eta_0 = 0 always.
class QueuingPolicy {
 public:
  virtual ~QueuingPolicy() = default;

  [[nodiscard]] virtual Age choose(const QueueState& state, int k) const = 0;
  [[nodiscard]] virtual std::string name() const = 0;
};

/// Largest admissible age at step k.
[[nodiscard]] Age max_admissible_age(const QueueState& state, int k);

/// theta_k = theta_check_k / lambda for k = 0..N.
[[nodiscard]] std::vector<double> age_rewards(const CostWeights& weights);

[[nodiscard]] Age zero_wait(const QueueState& state, int k);

/// argmin over eta in [0, eta_{k-1}+1] of
///   -theta_k eta + e(eta)' Gamma_k e(eta),  e(eta) = sum_{t=1}^{eta} A^{t-1} w_{k-t}.
/// Exact ties go to the largest eta.
[[nodiscard]] Age greedy_choose(const QueueState& state, int k, const RiccatiSolution& sol,
                                std::span<const double> theta, const Matrix& A);

/// greedy_choose restricted to eta <= kbar.
[[nodiscard]] Age greedy_bounded(const QueueState& state, int k, const RiccatiSolution& sol,
                                 std::span<const double> theta, const Matrix& A, int kbar);

class ZeroWaitPolicy final : public QueuingPolicy {
 public:
  [[nodiscard]] Age choose(const QueueState& state, int k) const override;
  [[nodiscard]] std::string name() const override { return "zero-wait"; }
};

class GreedyPolicy : public QueuingPolicy {
 public:
  GreedyPolicy(std::shared_ptr<const RiccatiSolution> sol, std::vector<double> theta, Matrix A,
               int kbar = -1);

  [[nodiscard]] Age choose(const QueueState& state, int k) const override;
  [[nodiscard]] std::string name() const override;

 private:
  std::shared_ptr<const RiccatiSolution> sol_;
  std::vector<double> theta_;
  Matrix A_;
  int kbar_;  // negative: unbounded
};

/// Discrete scalar noise law used by the optimal-policy oracle.
struct NoiseGrid {
  std::vector<double> atoms;
  std::vector<double> probs;

  /// {-sqrt(v), +sqrt(v)} with probability 1/2 each: mean 0, variance v.
  static NoiseGrid two_point(double variance);

  /// Index of the atom equal to w, or -1.
  [[nodiscard]] int atom_index(double w) const;
  void validate() const;
};

struct DpOracleOptions {
  std::size_t max_states = 1'000'000;
  int max_horizon = 8;
};

/// Thrown when the oracle's state space would exceed DpOracleOptions::max_states.
class StateSpaceTooLarge : public std::runtime_error {
 public:
  StateSpaceTooLarge(std::size_t required, std::size_t cap);
  std::size_t required;
  std::size_t cap;
};

/// Optimal queuing policy for a scalar plant with grid noise, obtained by
/// backward induction
///   V_k = min_eta { -theta_k eta + Gamma_k e(eta)^2 + E[V_{k+1}] },  V_{N+1} = 0
/// over states (k, eta_{k-1}, w_0 .. w_{k-1}).
class DpOracle {
 public:
  /// E[ sum_k -theta_k eta_k + e_k' Gamma_k e_k ] under the optimal policy.
  [[nodiscard]] double expected_cost() const { return expected_cost_; }
  [[nodiscard]] int horizon() const { return horizon_; }
  [[nodiscard]] const NoiseGrid& grid() const { return grid_; }
  [[nodiscard]] std::size_t state_count() const { return state_count_; }

  /// Optimal age at step k. Throws StructuralError if the history is not on
  /// the grid or k is outside the horizon.
  [[nodiscard]] Age lookup(int k, Age prev_age, std::span<const Vector> noise_history) const;

 private:
  friend DpOracle dp_oracle_build(const PlantModel&, const CostWeights&, const RiccatiSolution&,
                                  const NoiseGrid&, const DpOracleOptions&);

  [[nodiscard]] std::size_t slot(int k, int prev, std::size_t code) const;

  int horizon_ = 0;
  NoiseGrid grid_;
  std::vector<std::size_t> offsets_;  // first slot of step k
  std::vector<std::size_t> codes_;    // atoms^k
  std::vector<double> value_;
  std::vector<int> decision_;
  double expected_cost_ = 0.0;
  std::size_t state_count_ = 0;
};

[[nodiscard]] DpOracle dp_oracle_build(const PlantModel& model, const CostWeights& weights,
                                       const RiccatiSolution& sol, const NoiseGrid& grid,
                                       const DpOracleOptions& options = {});

class DpOraclePolicy final : public QueuingPolicy {
 public:
  explicit DpOraclePolicy(std::shared_ptr<const DpOracle> oracle) : oracle_(std::move(oracle)) {}

  [[nodiscard]] Age choose(const QueueState& state, int k) const override;
  [[nodiscard]] std::string name() const override { return "dp-oracle"; }

 private:
  std::shared_ptr<const DpOracle> oracle_;
};

/// Exact E[ sum_k -theta_k eta_k + e_k' Gamma_k e_k ] of `policy` on a scalar
/// plant, by enumerating all atoms^N noise paths w_0 .. w_{N-1}.
[[nodiscard]] double enumerate_expected_cost(const PlantModel& model, const CostWeights& weights,
                                             const RiccatiSolution& sol, const NoiseGrid& grid,
                                             const QueuingPolicy& policy);

/// Parsed form of `zero-wait | greedy | greedy-bounded:<kbar> | dp-oracle`.
struct PolicySpec {
  enum class Kind { kZeroWait, kGreedy, kGreedyBounded, kDpOracle };
  Kind kind = Kind::kGreedy;
  int kbar = 0;

  [[nodiscard]] std::string to_string() const;
};

/// Throws StructuralError on an unknown spec.
[[nodiscard]] PolicySpec parse_policy_spec(const std::string& text);

}  // namespace staleinfo
