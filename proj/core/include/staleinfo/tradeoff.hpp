#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "staleinfo/model.hpp"
#include "staleinfo/queuing.hpp"

namespace staleinfo {

/// One multiplier's point on the staleness/performance curve.
struct TradeoffPoint {
  double lambda = 0.0;
  double A_hat = 0.0;
  double se_A = 0.0;
  double J_hat = 0.0;
  double se_J = 0.0;
  std::size_t trajectories = 0;
  int peak_age = 0;  // largest age over all trajectories
};

struct SweepOptions {
  PolicySpec policy;
  std::size_t trajectories = 1;
  std::uint64_t master_seed = 0;
  int workers = 1;
  std::optional<NoiseGrid> noise_grid;
};

/// `count` points log-spaced over [lo, hi], ascending.
[[nodiscard]] std::vector<double> log_spaced(double lo, double hi, int count);

/// 20 points log-spaced over [0.005, 5].
[[nodiscard]] std::vector<double> default_lambda_grid();

/// Runs the policy at every multiplier with theta_k = theta_check_k / lambda.
/// All points share the master seed, so every lambda sees the same noise.
/// Points come back sorted by lambda, largest first. Since the policies are
/// restricted, the traced (J, A) pairs are a lower bound on the best
/// achievable staleness for each control cost.
[[nodiscard]] std::vector<TradeoffPoint> sweep(const PlantModel& model,
                                               const CostWeights& weights_base,
                                               std::span<const double> lambdas,
                                               const SweepOptions& options);

/// CSV `lambda,A_hat,se_A,J_hat,se_J,M`, sorted by lambda descending.
void write_curve_csv(std::ostream& os, std::span<const TradeoffPoint> points);

/// Standalone SVG: A_hat against J_hat with 1-SE error bars.
void write_curve_svg(std::ostream& os, std::span<const TradeoffPoint> points);

/// Writes the CSV to `path` and, with `plot`, an SVG next to it
/// (same stem, .svg). Throws StructuralError on empty input, before any file
/// is touched, and std::runtime_error if a file cannot be written.
void emit_curve(std::span<const TradeoffPoint> points, const std::filesystem::path& path,
                bool plot = false);

}  // namespace staleinfo
