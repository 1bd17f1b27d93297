#include "staleinfo/queuing.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "staleinfo/estimator.hpp"

namespace staleinfo {

namespace {

Age greedy_upto(const QueueState& state, int k, const Matrix& Gamma, double theta,
                const Matrix& A, int max_eta) {
  const auto available = static_cast<int>(state.noise_history.size());
  if (available < max_eta) {
    throw StructuralError("greedy policy: noise window holds " + std::to_string(available) +
                          " samples, needs " + std::to_string(max_eta) + " at k=" +
                          std::to_string(k));
  }
  const auto n = A.rows();
  Vector error = Vector::Zero(n);
  Matrix power = Matrix::Identity(n, n);
  int best = 0;
  double best_cost = 0.0;
  for (int eta = 1; eta <= max_eta; ++eta) {
    error.noalias() += power * state.noise_history[available - eta];
    if (eta < max_eta) power = power * A;
    const double cost = -theta * eta + error.dot(Gamma * error);
    if (cost <= best_cost) {
      best = eta;
      best_cost = cost;
    }
  }
  return Age(best);
}

void check_step(const RiccatiSolution& sol, std::span<const double> theta, int k) {
  if (k < 0 || k >= static_cast<int>(sol.Gamma.size()) || k >= static_cast<int>(theta.size())) {
    throw StructuralError("queuing policy: step " + std::to_string(k) + " out of range");
  }
}

}  // namespace

Age max_admissible_age(const QueueState& state, int k) {
  return k == 0 ? Age(0) : state.prev_age.next();
}

std::vector<double> age_rewards(const CostWeights& weights) {
  std::vector<double> theta(weights.theta_check.size());
  for (std::size_t k = 0; k < theta.size(); ++k) theta[k] = weights.theta(static_cast<int>(k));
  return theta;
}

Age zero_wait(const QueueState& /*state*/, int /*k*/) { return Age(0); }

Age greedy_choose(const QueueState& state, int k, const RiccatiSolution& sol,
                  std::span<const double> theta, const Matrix& A) {
  check_step(sol, theta, k);
  return greedy_upto(state, k, sol.Gamma[k], theta[k], A, max_admissible_age(state, k).value());
}

Age greedy_bounded(const QueueState& state, int k, const RiccatiSolution& sol,
                   std::span<const double> theta, const Matrix& A, int kbar) {
  if (kbar < 0) throw StructuralError("greedy_bounded: memory bound must be nonnegative");
  check_step(sol, theta, k);
  const int max_eta = std::min(max_admissible_age(state, k).value(), kbar);
  return greedy_upto(state, k, sol.Gamma[k], theta[k], A, max_eta);
}

Age ZeroWaitPolicy::choose(const QueueState& state, int k) const { return zero_wait(state, k); }

GreedyPolicy::GreedyPolicy(std::shared_ptr<const RiccatiSolution> sol, std::vector<double> theta,
                           Matrix A, int kbar)
    : sol_(std::move(sol)), theta_(std::move(theta)), A_(std::move(A)), kbar_(kbar) {}

Age GreedyPolicy::choose(const QueueState& state, int k) const {
  if (kbar_ < 0) return greedy_choose(state, k, *sol_, theta_, A_);
  return greedy_bounded(state, k, *sol_, theta_, A_, kbar_);
}

std::string GreedyPolicy::name() const {
  return kbar_ < 0 ? "greedy" : "greedy-bounded:" + std::to_string(kbar_);
}

// --- noise grid --------------------------------------------------------------

NoiseGrid NoiseGrid::two_point(double variance) {
  const double a = std::sqrt(variance);
  return NoiseGrid{{-a, a}, {0.5, 0.5}};
}

int NoiseGrid::atom_index(double w) const {
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (std::abs(w - atoms[i]) <= 1e-9 * std::max(1.0, std::abs(atoms[i]))) {
      return static_cast<int>(i);
    }
  }
  return -1;
}

void NoiseGrid::validate() const {
  if (atoms.empty() || atoms.size() > 5) {
    throw StructuralError("noise grid must have between 1 and 5 atoms");
  }
  if (atoms.size() != probs.size()) {
    throw StructuralError("noise grid atoms and probabilities differ in length");
  }
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw StructuralError("noise grid probabilities must be nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw StructuralError("noise grid probabilities must sum to 1");
  }
}

// --- optimal policy oracle ---------------------------------------------------

StateSpaceTooLarge::StateSpaceTooLarge(std::size_t required_states, std::size_t cap_states)
    : std::runtime_error("optimal-policy oracle needs " + std::to_string(required_states) +
                         " states, cap is " + std::to_string(cap_states)),
      required(required_states),
      cap(cap_states) {}

std::size_t DpOracle::slot(int k, int prev, std::size_t code) const {
  return offsets_[k] + static_cast<std::size_t>(prev) * codes_[k] + code;
}

Age DpOracle::lookup(int k, Age prev_age, std::span<const Vector> noise_history) const {
  if (k < 0 || k > horizon_) {
    throw StructuralError("dp-oracle: step " + std::to_string(k) + " outside horizon");
  }
  if (static_cast<int>(noise_history.size()) < k) {
    throw StructuralError("dp-oracle: noise history shorter than the step index");
  }
  const int prev = k == 0 ? 0 : prev_age.value();
  if (prev >= std::max(k, 1)) throw StructuralError("dp-oracle: previous age unreachable");

  const auto atoms = grid_.atoms.size();
  const auto offset = noise_history.size() - static_cast<std::size_t>(k);
  std::size_t code = 0;
  for (std::size_t t = 0; t < static_cast<std::size_t>(k); ++t) {
    const Vector& w = noise_history[offset + t];
    const int idx = w.size() == 1 ? grid_.atom_index(w(0)) : -1;
    if (idx < 0) throw StructuralError("dp-oracle: noise sample not on the grid");
    code = code * atoms + static_cast<std::size_t>(idx);
  }
  return Age(decision_[slot(k, prev, code)]);
}

DpOracle dp_oracle_build(const PlantModel& model, const CostWeights& weights,
                         const RiccatiSolution& sol, const NoiseGrid& grid,
                         const DpOracleOptions& options) {
  check_dimensions(model, weights);
  grid.validate();
  if (model.state_dim() != 1) throw StructuralError("dp-oracle requires a scalar plant");
  const int N = weights.horizon;
  if (N > options.max_horizon) {
    throw StructuralError("dp-oracle horizon " + std::to_string(N) + " exceeds " +
                          std::to_string(options.max_horizon));
  }
  if (sol.horizon() != N) throw StructuralError("dp-oracle: Riccati horizon mismatch");

  DpOracle dp;
  dp.horizon_ = N;
  dp.grid_ = grid;
  const std::size_t atoms = grid.atoms.size();

  std::size_t total = 0;
  std::size_t codes = 1;
  for (int k = 0; k <= N; ++k) {
    const auto prevs = static_cast<std::size_t>(std::max(k, 1));
    dp.offsets_.push_back(total);
    dp.codes_.push_back(codes);
    total += prevs * codes;
    if (total > options.max_states) throw StateSpaceTooLarge(total, options.max_states);
    codes *= atoms;
  }
  dp.state_count_ = total;
  dp.value_.assign(total, 0.0);
  dp.decision_.assign(total, 0);

  const double a = model.A(0, 0);
  for (int k = N; k >= 0; --k) {
    const double gamma = sol.Gamma[k](0, 0);
    const double theta = weights.theta(k);
    const int prevs = std::max(k, 1);
    for (int prev = 0; prev < prevs; ++prev) {
      const int max_eta = k == 0 ? 0 : prev + 1;
      for (std::size_t code = 0; code < dp.codes_[k]; ++code) {
        double error = 0.0;
        double power = 1.0;
        std::size_t digits = code;
        double best = std::numeric_limits<double>::infinity();
        int best_eta = 0;
        for (int eta = 0; eta <= max_eta; ++eta) {
          if (eta > 0) {
            // digit eta-1 from the right is w_{k-eta}
            error += power * grid.atoms[digits % atoms];
            digits /= atoms;
            power *= a;
          }
          double total_cost = -theta * eta + gamma * error * error;
          if (k < N) {
            double next = 0.0;
            for (std::size_t j = 0; j < atoms; ++j) {
              next += grid.probs[j] * dp.value_[dp.slot(k + 1, eta, code * atoms + j)];
            }
            total_cost += next;
          }
          if (total_cost <= best) {
            best = total_cost;
            best_eta = eta;
          }
        }
        const std::size_t s = dp.slot(k, prev, code);
        dp.value_[s] = best;
        dp.decision_[s] = best_eta;
      }
    }
  }
  dp.expected_cost_ = dp.value_[dp.slot(0, 0, 0)];
  return dp;
}

Age DpOraclePolicy::choose(const QueueState& state, int k) const {
  return oracle_->lookup(k, state.prev_age, state.noise_history);
}

double enumerate_expected_cost(const PlantModel& model, const CostWeights& weights,
                               const RiccatiSolution& sol, const NoiseGrid& grid,
                               const QueuingPolicy& policy) {
  check_dimensions(model, weights);
  grid.validate();
  if (model.state_dim() != 1) throw StructuralError("enumeration requires a scalar plant");
  const int N = weights.horizon;
  const std::size_t atoms = grid.atoms.size();
  std::size_t paths = 1;
  for (int i = 0; i < N; ++i) paths *= atoms;

  std::vector<Vector> noise(static_cast<std::size_t>(N), Vector::Zero(1));
  double expected = 0.0;
  for (std::size_t path = 0; path < paths; ++path) {
    double prob = 1.0;
    std::size_t digits = path;
    for (int t = N - 1; t >= 0; --t) {
      const std::size_t idx = digits % atoms;
      digits /= atoms;
      noise[t](0) = grid.atoms[idx];
      prob *= grid.probs[idx];
    }
    if (prob == 0.0) continue;

    double cost = 0.0;
    Age prev(0);
    for (int k = 0; k <= N; ++k) {
      const std::span<const Vector> history(noise.data(), static_cast<std::size_t>(k));
      const QueueState state{prev, history};
      const Age eta = policy.choose(state, k);
      if (eta > max_admissible_age(state, k)) {
        throw std::logic_error(policy.name() + " returned an inadmissible age");
      }
      const Vector e = estimation_error(history, model.A, eta);
      cost += -weights.theta(k) * eta.value() + e.dot(sol.Gamma[k] * e);
      prev = eta;
    }
    expected += prob * cost;
  }
  return expected;
}

// --- policy spec -------------------------------------------------------------

std::string PolicySpec::to_string() const {
  switch (kind) {
    case Kind::kZeroWait: return "zero-wait";
    case Kind::kGreedy: return "greedy";
    case Kind::kGreedyBounded: return "greedy-bounded:" + std::to_string(kbar);
    case Kind::kDpOracle: return "dp-oracle";
  }
  return "unknown";
}

PolicySpec parse_policy_spec(const std::string& text) {
  PolicySpec spec;
  if (text == "zero-wait") {
    spec.kind = PolicySpec::Kind::kZeroWait;
  } else if (text == "greedy") {
    spec.kind = PolicySpec::Kind::kGreedy;
  } else if (text == "dp-oracle") {
    spec.kind = PolicySpec::Kind::kDpOracle;
  } else if (text.rfind("greedy-bounded:", 0) == 0) {
    const std::string bound = text.substr(std::string("greedy-bounded:").size());
    std::size_t used = 0;
    int kbar = -1;
    try {
      kbar = std::stoi(bound, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (bound.empty() || used != bound.size() || kbar < 0) {
      throw StructuralError("greedy-bounded needs a nonnegative integer bound, got '" + bound +
                            "'");
    }
    spec.kind = PolicySpec::Kind::kGreedyBounded;
    spec.kbar = kbar;
  } else {
    throw StructuralError("unknown policy '" + text +
                          "' (expected zero-wait, greedy, greedy-bounded:<kbar>, dp-oracle)");
  }
  return spec;
}

}  // namespace staleinfo
