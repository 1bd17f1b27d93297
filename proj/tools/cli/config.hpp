#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "staleinfo/model.hpp"
#include "staleinfo/queuing.hpp"

namespace staleinfo::cli {

/// Malformed, missing or invalid configuration. The message names the file,
/// the line, or the dotted field path at fault.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunSettings {
  std::string policy = "greedy";
  std::size_t trajectories = 1;
  std::uint64_t seed = 42;
  int workers = 1;
  int kbar = 2;
  std::vector<double> lambda_grid;  // empty: default grid
  std::string out;
  bool plot = false;
  bool per_trajectory = false;
  std::optional<NoiseGrid> noise_grid;
};

/// Parsed experiment description:
///
///   {
///     "model":   { "n": 1, "m": 1, "A": [1.5], "B": [0.5], "W": [4],
///                  "m0": [0], "M0": [0] },
///     "weights": { "N": 100, "Q": [5], "R": [0.1], "Q_terminal": [10],
///                  "theta_check": 1, "lambda": 0.1 },
///     "run":     { "policy": "greedy", "trajectories": 1, "seed": 42, ... }
///   }
///
/// Matrices are flat row-major arrays (a bare number is accepted for 1x1).
/// Q, R and theta_check are broadcast over the horizon unless
/// Q_sequence / R_sequence / theta_check is given per step.
struct RunConfig {
  PlantModel model;
  CostWeights weights;
  RunSettings run;
};

/// Applies `dotted.key=value` to the document; value is read as JSON when it
/// parses, as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

[[nodiscard]] RunConfig parse_config(const nlohmann::json& doc);

/// Reads, overrides and parses. Throws ConfigError.
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path,
                                    const std::vector<std::string>& overrides = {});

}  // namespace staleinfo::cli
