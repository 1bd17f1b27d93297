#include "staleinfo/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <ostream>
#include <mutex>
#include <random>
#include <stdexcept>
#include <thread>
#include <tuple>
#include <utility>

#include "staleinfo/controller.hpp"
#include "staleinfo/estimator.hpp"

namespace staleinfo {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Square root of a PSD matrix via its eigendecomposition; tolerates singular M0.
Matrix psd_factor(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (m + m.transpose()));
  const Vector roots = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return solver.eigenvectors() * roots.asDiagonal();
}

template <typename Fn>
void parallel_indexed(std::size_t count, int workers, Fn&& fn) {
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const std::size_t used = std::min(threads, count);
  pool.reserve(used);
  for (std::size_t w = 0; w < used; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += used) fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// Runs the closed loop; fills `record` when non-null.
TrajectorySummary simulate(const SimulationSetup& setup, const QueuingPolicy& policy,
                           const NoisePath& noise, TrajectoryRecord* record) {
  const PlantModel& model = setup.model();
  const CostWeights& weights = setup.weights();
  const RiccatiSolution& sol = setup.riccati();
  const int N = weights.horizon;
  if (static_cast<int>(noise.w.size()) != N + 1) {
    throw StructuralError("noise path must hold N+1 samples");
  }

  std::vector<Vector> states;
  std::vector<Vector> inputs;
  states.reserve(static_cast<std::size_t>(N) + 2);
  inputs.reserve(static_cast<std::size_t>(N) + 1);
  states.push_back(noise.x0);
  if (record) {
    record->steps.clear();
    record->steps.reserve(static_cast<std::size_t>(N) + 1);
  }

  TrajectorySummary summary;
  double age_reward = 0.0;
  Age prev(0);
  for (int k = 0; k <= N; ++k) {
    const QueueState queue{prev, std::span<const Vector>(noise.w.data(), static_cast<std::size_t>(k))};
    const Age eta = policy.choose(queue, k);
    if (eta > max_admissible_age(queue, k)) {
      throw std::logic_error(policy.name() + " returned age " + std::to_string(eta.value()) +
                             " at k=" + std::to_string(k) + " (max " +
                             std::to_string(max_admissible_age(queue, k).value()) + ")");
    }

    const ControllerInfo info{states[static_cast<std::size_t>(k - eta.value())], eta,
                              std::span<const Vector>(inputs.data(), inputs.size())};
    Vector xhat = estimate(info, model.A, model.B);
    Vector u = control_input(sol, k, xhat);
    const Vector& x = states.back();
    const Vector& w = noise.w[k];

    summary.quad_sum += x.dot(weights.Q[k] * x) + u.dot(weights.R[k] * u);
    summary.age_sum += weights.theta_check[k] * eta.value();
    age_reward += weights.theta(k) * eta.value();
    summary.peak_age = std::max(summary.peak_age, eta.value());

    Vector next = model.A * x + model.B * u + w;
    if (record) record->steps.push_back({x, xhat, u, eta, w, x - xhat});
    inputs.push_back(std::move(u));
    states.push_back(std::move(next));
    prev = eta;
  }
  const Vector& terminal = states.back();
  summary.quad_sum += terminal.dot(weights.terminal_Q() * terminal);
  summary.chi_realized = summary.quad_sum - age_reward;

  if (record) {
    record->x_terminal = terminal;
    record->age_sum = summary.age_sum;
    record->quad_sum = summary.quad_sum;
    record->chi_realized = summary.chi_realized;
  }
  return summary;
}

void put_number(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

void put_vector(std::ostream& os, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    os << ',';
    put_number(os, v(i));
  }
}

void put_blanks(std::ostream& os, Eigen::Index count) {
  for (Eigen::Index i = 0; i < count; ++i) os << ',';
}

}  // namespace

std::uint64_t RngStream::derived_seed() const {
  return splitmix64(splitmix64(master_seed) ^ splitmix64(~trajectory_index));
}

SimulationSetup SimulationSetup::create(PlantModel model, CostWeights weights,
                                        std::optional<NoiseGrid> noise_grid) {
  const ValidationReport report = validate_model(model, weights);
  if (!report.ok()) throw StructuralError("invalid model: " + report.to_string());
  return create_unchecked(std::move(model), std::move(weights), std::move(noise_grid));
}

SimulationSetup SimulationSetup::create_unchecked(PlantModel model, CostWeights weights,
                                                  std::optional<NoiseGrid> noise_grid) {
  check_dimensions(model, weights);
  if (noise_grid) {
    noise_grid->validate();
    if (model.state_dim() != 1) throw StructuralError("grid noise requires a scalar plant");
  }
  SimulationSetup setup;
  setup.riccati_ = std::make_shared<const RiccatiSolution>(solve_riccati(model, weights));
  Eigen::LLT<Matrix> llt(model.W);
  setup.noise_factor_ = llt.info() == Eigen::Success ? Matrix(llt.matrixL()) : psd_factor(model.W);
  setup.initial_factor_ = psd_factor(model.M0);
  setup.model_ = std::move(model);
  setup.weights_ = std::move(weights);
  setup.noise_grid_ = std::move(noise_grid);
  return setup;
}

SimulationSetup SimulationSetup::with_gain_offset(std::span<const Matrix> offset) const {
  if (offset.size() != riccati_->K.size()) throw StructuralError("gain offset length mismatch");
  SimulationSetup copy = *this;
  RiccatiSolution perturbed = *riccati_;
  for (std::size_t k = 0; k < offset.size(); ++k) perturbed.K[k] += offset[k];
  copy.riccati_ = std::make_shared<const RiccatiSolution>(std::move(perturbed));
  return copy;
}

std::shared_ptr<const QueuingPolicy> make_policy(const PolicySpec& spec,
                                                 const SimulationSetup& setup) {
  switch (spec.kind) {
    case PolicySpec::Kind::kZeroWait:
      return std::make_shared<const ZeroWaitPolicy>();
    case PolicySpec::Kind::kGreedy:
      return std::make_shared<const GreedyPolicy>(setup.riccati_ptr(),
                                                  age_rewards(setup.weights()), setup.model().A);
    case PolicySpec::Kind::kGreedyBounded:
      return std::make_shared<const GreedyPolicy>(
          setup.riccati_ptr(), age_rewards(setup.weights()), setup.model().A, spec.kbar);
    case PolicySpec::Kind::kDpOracle: {
      if (!setup.noise_grid()) {
        throw StructuralError("dp-oracle needs grid noise (set run.noise_grid)");
      }
      auto oracle = std::make_shared<const DpOracle>(dp_oracle_build(
          setup.model(), setup.weights(), setup.riccati(), *setup.noise_grid()));
      return std::make_shared<const DpOraclePolicy>(std::move(oracle));
    }
  }
  throw StructuralError("unknown policy kind");
}

NoisePath sample_noise(const SimulationSetup& setup, const RngStream& stream) {
  std::mt19937_64 engine(stream.derived_seed());
  std::normal_distribution<double> normal(0.0, 1.0);
  const PlantModel& model = setup.model();
  const auto n = model.A.rows();
  const int N = setup.weights().horizon;

  NoisePath path;
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(engine);
  path.x0 = model.m0 + setup.initial_factor() * z;

  path.w.reserve(static_cast<std::size_t>(N) + 1);
  if (const auto& grid = setup.noise_grid()) {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (int k = 0; k <= N; ++k) {
      const double draw = uniform(engine);
      double cumulative = 0.0;
      std::size_t pick = grid->atoms.size() - 1;
      for (std::size_t j = 0; j < grid->atoms.size(); ++j) {
        cumulative += grid->probs[j];
        if (draw < cumulative) {
          pick = j;
          break;
        }
      }
      path.w.push_back(Vector::Constant(1, grid->atoms[pick]));
    }
  } else {
    for (int k = 0; k <= N; ++k) {
      for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(engine);
      path.w.push_back(setup.noise_factor() * z);
    }
  }
  return path;
}

TrajectorySummary summarize(const TrajectoryRecord& record) {
  TrajectorySummary s;
  s.age_sum = record.age_sum;
  s.quad_sum = record.quad_sum;
  s.chi_realized = record.chi_realized;
  for (const auto& step : record.steps) s.peak_age = std::max(s.peak_age, step.eta.value());
  return s;
}

TrajectoryRecord run_trajectory(const SimulationSetup& setup, const QueuingPolicy& policy,
                                const NoisePath& noise) {
  TrajectoryRecord record;
  simulate(setup, policy, noise, &record);
  return record;
}

TrajectoryRecord run_trajectory(const SimulationSetup& setup, const QueuingPolicy& policy,
                                const RngStream& stream) {
  return run_trajectory(setup, policy, sample_noise(setup, stream));
}

TrajectorySummary run_summary(const SimulationSetup& setup, const QueuingPolicy& policy,
                              const NoisePath& noise) {
  return simulate(setup, policy, noise, nullptr);
}

std::vector<TrajectoryRecord> run_batch(const SimulationSetup& setup, const QueuingPolicy& policy,
                                        std::uint64_t master_seed, std::size_t count,
                                        int workers) {
  std::vector<TrajectoryRecord> records(count);
  parallel_indexed(count, workers, [&](std::size_t i) {
    records[i] = run_trajectory(setup, policy, RngStream{master_seed, i});
  });
  return records;
}

std::vector<TrajectorySummary> run_batch_summaries(const SimulationSetup& setup,
                                                   const QueuingPolicy& policy,
                                                   std::uint64_t master_seed, std::size_t count,
                                                   int workers) {
  std::vector<TrajectorySummary> summaries(count);
  parallel_indexed(count, workers, [&](std::size_t i) {
    summaries[i] = run_summary(setup, policy, sample_noise(setup, RngStream{master_seed, i}));
  });
  return summaries;
}

Metrics empirical_metrics(std::span<const TrajectorySummary> summaries,
                          const CostWeights& weights) {
  if (summaries.empty()) throw StructuralError("empirical_metrics: no trajectories");
  if (weights.horizon < 1) throw StructuralError("empirical_metrics: horizon must be >= 1");
  const double N = weights.horizon;

  // Mean and standard error, accumulated relative to the first sample so that
  // a constant sample gives an exact mean and a zero error.
  const auto mean_se = [&](auto field) {
    const double shift = field(summaries.front());
    const auto M = static_cast<double>(summaries.size());
    double sum = 0.0;
    for (const auto& s : summaries) sum += field(s) - shift;
    const double offset = sum / M;
    double var = 0.0;
    for (const auto& s : summaries) {
      const double d = field(s) - shift - offset;
      var += d * d;
    }
    const double se = summaries.size() > 1 ? std::sqrt(var / (M - 1.0) / M) : 0.0;
    return std::pair{shift + offset, se};
  };

  Metrics m;
  m.count = summaries.size();
  std::tie(m.A_hat, m.se_A) = mean_se([N](const TrajectorySummary& s) { return s.age_sum / N; });
  std::tie(m.J_hat, m.se_J) = mean_se([N](const TrajectorySummary& s) { return s.quad_sum / N; });
  std::tie(m.chi_hat, m.se_chi) =
      mean_se([](const TrajectorySummary& s) { return s.chi_realized; });
  return m;
}

Metrics empirical_metrics(std::span<const TrajectoryRecord> records, const CostWeights& weights) {
  std::vector<TrajectorySummary> summaries;
  summaries.reserve(records.size());
  for (const auto& r : records) summaries.push_back(summarize(r));
  return empirical_metrics(summaries, weights);
}

double IdentityCheck::residual() const { return std::abs(left - right); }

double IdentityCheck::relative_residual() const {
  const double scale = std::abs(left);
  return scale > 0.0 ? residual() / scale : residual();
}

IdentityCheck cost_identity_check(const TrajectoryRecord& record, const PlantModel& model,
                                    const RiccatiSolution& sol, const CostWeights& weights) {
  IdentityCheck check;
  if (record.steps.empty()) return check;
  const Matrix& A = model.A;
  const Matrix& B = model.B;

  const Vector& x_last = record.x_terminal;
  check.left = x_last.dot(weights.terminal_Q() * x_last);
  check.right = record.steps.front().x.dot(sol.S[0] * record.steps.front().x);
  for (std::size_t k = 0; k < record.steps.size(); ++k) {
    const auto& s = record.steps[k];
    const Matrix& S_next = sol.S[k + 1];
    check.left += s.x.dot(weights.Q[k] * s.x) + s.u.dot(weights.R[k] * s.u);

    const Vector drift = A * s.x + B * s.u;
    const Vector gap = s.u + sol.K[k] * s.x;
    const Matrix H = B.transpose() * S_next * B + weights.R[k];
    check.right += s.w.dot(S_next * s.w) + 2.0 * drift.dot(S_next * s.w) + gap.dot(H * gap);
  }
  return check;
}

void write_trajectory_csv(std::ostream& os, std::span<const TrajectoryRecord> records,
                          bool long_format, std::size_t first_index) {
  if (records.empty()) return;
  const auto n = records.front().x_terminal.size();
  const auto m = records.front().steps.empty() ? Eigen::Index{0}
                                               : records.front().steps.front().u.size();
  auto columns = [&os](const char* stem, Eigen::Index count) {
    for (Eigen::Index i = 0; i < count; ++i) os << ',' << stem << '_' << i;
  };
  if (long_format) os << "traj,";
  os << 'k';
  columns("x", n);
  columns("xhat", n);
  columns("u", m);
  os << ",eta";
  columns("w", n);
  columns("e", n);
  os << '\n';

  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    const auto prefix = [&](std::size_t k) {
      if (long_format) os << first_index + r << ',';
      os << k;
    };
    for (std::size_t k = 0; k < rec.steps.size(); ++k) {
      const auto& s = rec.steps[k];
      prefix(k);
      put_vector(os, s.x);
      put_vector(os, s.xhat);
      put_vector(os, s.u);
      os << ',' << s.eta.value();
      put_vector(os, s.w);
      put_vector(os, s.e);
      os << '\n';
    }
    prefix(rec.steps.size());
    put_vector(os, rec.x_terminal);
    put_blanks(os, n + m + 1 + n + n);
    os << '\n';
  }
}

}  // namespace staleinfo
