#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "staleinfo/model.hpp"
#include "staleinfo/queuing.hpp"
#include "staleinfo/riccati.hpp"

namespace staleinfo {

/// Identifies the random stream of one trajectory. Streams for different
/// indices are derived independently from the master seed, so a trajectory's
/// noise never depends on which worker runs it or in what order.
struct RngStream {
  std::uint64_t master_seed = 0;
  std::uint64_t trajectory_index = 0;

  [[nodiscard]] std::uint64_t derived_seed() const;
};

/// Everything a trajectory needs that does not change between trajectories.
/// Immutable once built; share freely across workers.
class SimulationSetup {
 public:
  /// Validates the model, solves the Riccati recursion and factors W and M0.
  /// With a noise grid the process noise is drawn from the grid (scalar only)
  /// instead of N(0, W). Throws StructuralError if validation fails.
  static SimulationSetup create(PlantModel model, CostWeights weights,
                                std::optional<NoiseGrid> noise_grid = std::nullopt);

  /// Same as create() but skips validate_model(); for degenerate test plants.
  static SimulationSetup create_unchecked(PlantModel model, CostWeights weights,
                                          std::optional<NoiseGrid> noise_grid = std::nullopt);

  [[nodiscard]] const PlantModel& model() const { return model_; }
  [[nodiscard]] const CostWeights& weights() const { return weights_; }
  [[nodiscard]] const RiccatiSolution& riccati() const { return *riccati_; }
  [[nodiscard]] std::shared_ptr<const RiccatiSolution> riccati_ptr() const { return riccati_; }
  [[nodiscard]] const std::optional<NoiseGrid>& noise_grid() const { return noise_grid_; }
  [[nodiscard]] const Matrix& noise_factor() const { return noise_factor_; }
  [[nodiscard]] const Matrix& initial_factor() const { return initial_factor_; }

  /// Copy whose controller uses K_k + offset[k]; queuing policies built from
  /// the original solution are unaffected.
  [[nodiscard]] SimulationSetup with_gain_offset(std::span<const Matrix> offset) const;

 private:
  SimulationSetup() = default;

  PlantModel model_;
  CostWeights weights_;
  std::shared_ptr<const RiccatiSolution> riccati_;
  std::optional<NoiseGrid> noise_grid_;
  Matrix noise_factor_;
  Matrix initial_factor_;
};

/// Builds the policy named by `spec`. dp-oracle builds the optimal-policy
/// table and needs a noise grid on the setup.
[[nodiscard]] std::shared_ptr<const QueuingPolicy> make_policy(const PolicySpec& spec,
                                                               const SimulationSetup& setup);

/// Initial state and process noise w_0 .. w_N of one trajectory.
struct NoisePath {
  Vector x0;
  std::vector<Vector> w;
};

[[nodiscard]] NoisePath sample_noise(const SimulationSetup& setup, const RngStream& stream);

struct TrajectoryStep {
  Vector x;
  Vector xhat;
  Vector u;
  Age eta;
  Vector w;
  Vector e;
};

/// Steps k = 0..N plus the terminal state x_{N+1}.
struct TrajectoryRecord {
  std::vector<TrajectoryStep> steps;
  Vector x_terminal;
  double age_sum = 0.0;       // sum theta_check_k eta_k
  double quad_sum = 0.0;      // terminal + sum x'Qx + u'Ru
  double chi_realized = 0.0;  // quad_sum - sum theta_k eta_k
};

/// Scalars of a trajectory, without the per-step rows.
struct TrajectorySummary {
  double age_sum = 0.0;
  double quad_sum = 0.0;
  double chi_realized = 0.0;
  int peak_age = 0;
};

[[nodiscard]] TrajectorySummary summarize(const TrajectoryRecord& record);

/// Closed loop: the policy picks eta_k, the controller estimates x_k from
/// x_{k-eta_k} and past inputs, applies u_k = -K_k xhat_k, and the plant
/// advances with w_k. Throws std::logic_error if the policy returns an age
/// outside [0, eta_{k-1} + 1].
[[nodiscard]] TrajectoryRecord run_trajectory(const SimulationSetup& setup,
                                              const QueuingPolicy& policy, const NoisePath& noise);
[[nodiscard]] TrajectoryRecord run_trajectory(const SimulationSetup& setup,
                                              const QueuingPolicy& policy,
                                              const RngStream& stream);
[[nodiscard]] TrajectorySummary run_summary(const SimulationSetup& setup,
                                            const QueuingPolicy& policy, const NoisePath& noise);

/// Trajectories 0..count-1 of `master_seed`, results ordered by index
/// regardless of the worker count.
[[nodiscard]] std::vector<TrajectoryRecord> run_batch(const SimulationSetup& setup,
                                                      const QueuingPolicy& policy,
                                                      std::uint64_t master_seed, std::size_t count,
                                                      int workers = 1);
[[nodiscard]] std::vector<TrajectorySummary> run_batch_summaries(const SimulationSetup& setup,
                                                                 const QueuingPolicy& policy,
                                                                 std::uint64_t master_seed,
                                                                 std::size_t count,
                                                                 int workers = 1);

struct Metrics {
  double A_hat = 0.0;
  double J_hat = 0.0;
  double chi_hat = 0.0;
  double se_A = 0.0;
  double se_J = 0.0;
  double se_chi = 0.0;
  std::size_t count = 0;
};

/// A = (1/N) sum theta_check_k eta_k, J = (1/N) quad_sum, chi = quad_sum -
/// sum theta_k eta_k, each averaged over trajectories with standard error
/// sample-std / sqrt(M). Throws StructuralError on an empty input or N = 0.
[[nodiscard]] Metrics empirical_metrics(std::span<const TrajectorySummary> summaries,
                                        const CostWeights& weights);
[[nodiscard]] Metrics empirical_metrics(std::span<const TrajectoryRecord> records,
                                        const CostWeights& weights);

struct IdentityCheck {
  double left = 0.0;
  double right = 0.0;
  [[nodiscard]] double residual() const;
  [[nodiscard]] double relative_residual() const;
};

/// Evaluates both sides of the pathwise cost identity
///   x_{N+1}'Q_{N+1}x_{N+1} + sum x'Qx + u'Ru
///     = x_0'S_0x_0 + sum [ w'S_{k+1}w + 2(Ax+Bu)'S_{k+1}w + (u+Kx)'H_k(u+Kx) ].
[[nodiscard]] IdentityCheck cost_identity_check(const TrajectoryRecord& record,
                                                  const PlantModel& model,
                                                  const RiccatiSolution& sol,
                                                  const CostWeights& weights);

/// Trajectory CSV. Header `k,x_*,xhat_*,u_*,eta,w_*,e_*`, prefixed with a
/// `traj` column in long format. Each trajectory ends with a row k = N+1
/// carrying only x_{N+1}. Values are printed round-trip exact.
void write_trajectory_csv(std::ostream& os, std::span<const TrajectoryRecord> records,
                          bool long_format, std::size_t first_index = 0);

}  // namespace staleinfo
