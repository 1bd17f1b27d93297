#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"

namespace staleinfo::cli {

enum ExitCode : int { kSuccess = 0, kCheckFailed = 1, kUsageError = 2 };

/// Command-line values that take precedence over the config file.
struct CliOverrides {
  std::optional<std::string> policy;
  std::optional<double> lambda;
  std::optional<std::size_t> trajectories;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> workers;
  bool plot = false;
  bool per_trajectory = false;
};

void apply_overrides(RunConfig& config, const CliOverrides& overrides);

/// S_k, K_k, Gamma_k as CSV: `k,S_i_j...,K_i_j...,Gamma_i_j...`, row-major.
/// Row N+1 only carries S.
int cmd_riccati(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Trajectory CSV (to run.out, or `out` when unset) and a metrics summary.
int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Lambda sweep written as curve CSV (+ SVG with run.plot).
int cmd_tradeoff(const RunConfig& config, std::ostream& out, std::ostream& err);

struct VerifyOptions {
  std::string policy = "all";
  bool corrupt_first_record = false;  // negative control for tests
};

/// Riccati residual, pathwise cost identity, estimator consistency, record
/// invariants, zero-wait dominance and the small-instance optimal-policy
/// checks. Prints one PASS/FAIL line per check; returns kCheckFailed if any
/// check fails.
int cmd_verify(const RunConfig& config, const VerifyOptions& options, std::ostream& out,
               std::ostream& err);

/// Full command-line entry point.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace staleinfo::cli
