#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "staleinfo/staleinfo.hpp"

namespace staleinfo::cli {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void put_matrix(std::ostream& os, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
      os << ',' << buf;
    }
  }
}

void header_block(std::ostream& os, const char* stem, Eigen::Index rows, Eigen::Index cols) {
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) os << ',' << stem << '_' << r << '_' << c;
  }
}

// dp-oracle needs grid noise; the default grid is the two-point law matching W.
std::optional<NoiseGrid> noise_for(const RunConfig& config, const PolicySpec& spec) {
  if (config.run.noise_grid) return config.run.noise_grid;
  if (spec.kind == PolicySpec::Kind::kDpOracle) {
    if (config.model.state_dim() != 1) {
      throw StructuralError("dp-oracle requires a scalar plant");
    }
    return NoiseGrid::two_point(config.model.W(0, 0));
  }
  return std::nullopt;
}

struct Check {
  std::string name;
  bool pass = true;
  std::string detail;
};

void report(std::ostream& out, const Check& c) {
  out << (c.pass ? "PASS  " : "FAIL  ") << c.name;
  if (!c.detail.empty()) out << "  (" << c.detail << ")";
  out << '\n';
}

// Independent pass over a record: dynamics, admissibility, e = x - xhat, and
// e against the noise-sum formula.
struct RecordAudit {
  double dynamics = 0.0;
  double error_identity = 0.0;
  double consistency = 0.0;
  bool admissible = true;
};

RecordAudit audit(const TrajectoryRecord& rec, const PlantModel& model,
                  std::span<const Vector> noise) {
  RecordAudit a;
  int prev = 0;
  for (std::size_t k = 0; k < rec.steps.size(); ++k) {
    const auto& s = rec.steps[k];
    const Vector& next = k + 1 < rec.steps.size() ? rec.steps[k + 1].x : rec.x_terminal;
    const double scale = std::max(1.0, next.cwiseAbs().maxCoeff());
    a.dynamics = std::max(a.dynamics,
                          (next - (model.A * s.x + model.B * s.u + s.w)).cwiseAbs().maxCoeff() / scale);

    const int eta = s.eta.value();
    const int limit = k == 0 ? 0 : prev + 1;
    if (eta < 0 || eta > limit) a.admissible = false;
    prev = eta;

    const double xs = std::max({1.0, s.x.cwiseAbs().maxCoeff(), s.xhat.cwiseAbs().maxCoeff()});
    a.error_identity = std::max(a.error_identity, (s.e - (s.x - s.xhat)).cwiseAbs().maxCoeff() / xs);
    const Vector formula = estimation_error(noise.first(k), model.A, s.eta);
    const double terms =
        estimation_error_magnitude(noise.first(k), model.A, s.eta).cwiseAbs().maxCoeff();
    a.consistency =
        std::max(a.consistency, (s.e - formula).cwiseAbs().maxCoeff() / std::max(xs, terms));
  }
  return a;
}

std::vector<Vector> noise_of(const TrajectoryRecord& rec) {
  std::vector<Vector> w;
  w.reserve(rec.steps.size());
  for (const auto& s : rec.steps) w.push_back(s.w);
  return w;
}

}  // namespace

void apply_overrides(RunConfig& config, const CliOverrides& o) {
  if (o.policy) config.run.policy = *o.policy;
  if (o.lambda) config.weights.lambda = *o.lambda;
  if (o.trajectories) config.run.trajectories = *o.trajectories;
  if (o.seed) config.run.seed = *o.seed;
  if (o.out) config.run.out = *o.out;
  if (o.workers) config.run.workers = *o.workers;
  if (o.plot) config.run.plot = true;
  if (o.per_trajectory) config.run.per_trajectory = true;
}

int cmd_riccati(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const ValidationReport report = validate_model(config.model, config.weights);
  if (!report.ok()) {
    err << "invalid model:\n" << report.to_string();
    return kUsageError;
  }
  const RiccatiSolution sol = solve_riccati(config.model, config.weights);
  const auto n = config.model.A.rows();
  const auto m = config.model.B.cols();

  std::ofstream file;
  std::ostream* sink = &out;
  if (!config.run.out.empty()) {
    file.open(config.run.out, std::ios::binary);
    if (!file) {
      err << "cannot write '" << config.run.out << "'\n";
      return kUsageError;
    }
    sink = &file;
  }
  std::ostream& os = *sink;
  os << 'k';
  header_block(os, "S", n, n);
  header_block(os, "K", m, n);
  header_block(os, "Gamma", n, n);
  os << '\n';
  for (int k = 0; k <= sol.horizon() + 1; ++k) {
    os << k;
    put_matrix(os, sol.S[k]);
    if (k <= sol.horizon()) {
      put_matrix(os, sol.K[k]);
      put_matrix(os, sol.Gamma[k]);
    } else {
      for (Eigen::Index i = 0; i < m * n + n * n; ++i) os << ',';
    }
    os << '\n';
  }
  return kSuccess;
}

int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const PolicySpec spec = parse_policy_spec(config.run.policy);
  const SimulationSetup setup =
      SimulationSetup::create(config.model, config.weights, noise_for(config, spec));
  const auto policy = make_policy(spec, setup);
  const auto records =
      run_batch(setup, *policy, config.run.seed, config.run.trajectories, config.run.workers);
  const Metrics metrics = empirical_metrics(records, setup.weights());

  const bool to_file = !config.run.out.empty();
  if (config.run.per_trajectory) {
    if (!to_file) {
      err << "per-trajectory output needs --out\n";
      return kUsageError;
    }
    const std::filesystem::path base(config.run.out);
    for (std::size_t i = 0; i < records.size(); ++i) {
      std::filesystem::path path = base.parent_path() /
                                   (base.stem().string() + "_" + std::to_string(i) +
                                    base.extension().string());
      std::ofstream file(path, std::ios::binary);
      if (!file) {
        err << "cannot write '" << path.string() << "'\n";
        return kUsageError;
      }
      write_trajectory_csv(file, std::span(records).subspan(i, 1), false);
    }
  } else if (to_file) {
    std::ofstream file(config.run.out, std::ios::binary);
    if (!file) {
      err << "cannot write '" << config.run.out << "'\n";
      return kUsageError;
    }
    write_trajectory_csv(file, records, true);
  } else {
    write_trajectory_csv(out, records, true);
  }

  std::ostream& summary = to_file ? out : err;
  summary << "policy=" << policy->name() << " lambda=" << fmt(config.weights.lambda)
          << " M=" << metrics.count << " A_hat=" << fmt(metrics.A_hat) << " se_A="
          << fmt(metrics.se_A) << " J_hat=" << fmt(metrics.J_hat) << " se_J=" << fmt(metrics.se_J)
          << " chi_hat=" << fmt(metrics.chi_hat) << " se_chi=" << fmt(metrics.se_chi) << '\n';
  return kSuccess;
}

int cmd_tradeoff(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const PolicySpec spec = parse_policy_spec(config.run.policy);
  const std::vector<double> lambdas =
      config.run.lambda_grid.empty() ? default_lambda_grid() : config.run.lambda_grid;

  SweepOptions options;
  options.policy = spec;
  options.trajectories = config.run.trajectories;
  options.master_seed = config.run.seed;
  options.workers = config.run.workers;
  options.noise_grid = noise_for(config, spec);
  const auto points = sweep(config.model, config.weights, lambdas, options);

  if (config.run.out.empty()) {
    if (config.run.plot) {
      err << "--plot needs --out\n";
      return kUsageError;
    }
    write_curve_csv(out, points);
  } else {
    emit_curve(points, config.run.out, config.run.plot);
    out << "wrote " << points.size() << " points to " << config.run.out << '\n';
  }
  return kSuccess;
}

int cmd_verify(const RunConfig& config, const VerifyOptions& options, std::ostream& out,
               std::ostream& err) {
  const ValidationReport validation = validate_model(config.model, config.weights);
  if (!validation.ok()) {
    err << "invalid model:\n" << validation.to_string();
    return kUsageError;
  }

  std::vector<PolicySpec> specs;
  if (options.policy == "all") {
    specs = {parse_policy_spec("zero-wait"), parse_policy_spec("greedy"),
             parse_policy_spec("greedy-bounded:" + std::to_string(config.run.kbar)),
             parse_policy_spec("dp-oracle")};
  } else {
    specs = {parse_policy_spec(options.policy)};
  }

  std::vector<Check> checks;
  const SimulationSetup main_setup =
      SimulationSetup::create(config.model, config.weights, config.run.noise_grid);
  {
    const double residual = riccati_residual(config.model, config.weights, main_setup.riccati());
    checks.push_back({"riccati recursion residual", residual <= kRiccatiTol,
                      "max " + fmt(residual) + " <= " + fmt(kRiccatiTol)});
  }

  // The optimal-policy oracle only exists on a short scalar horizon with grid
  // noise, so dp-oracle runs on that reduced instance.
  const bool scalar = config.model.state_dim() == 1;
  const int small_horizon = std::min(config.weights.horizon, 4);
  std::optional<SimulationSetup> small_setup;
  if (scalar && small_horizon >= 1) {
    CostWeights small = CostWeights::constant(small_horizon, config.weights.Q.front(),
                                              config.weights.R.front(),
                                              config.weights.terminal_Q(),
                                              config.weights.theta_check.front(),
                                              config.weights.lambda);
    NoiseGrid grid = config.run.noise_grid.value_or(NoiseGrid::two_point(config.model.W(0, 0)));
    small_setup = SimulationSetup::create(config.model, small, grid);
  }

  const std::size_t count = std::max<std::size_t>(config.run.trajectories, 2);
  bool corrupted = false;
  for (const PolicySpec& spec : specs) {
    const bool oracle = spec.kind == PolicySpec::Kind::kDpOracle;
    if (oracle && !small_setup) {
      checks.push_back({"dp-oracle", true, "skipped: needs a scalar plant with N >= 1"});
      continue;
    }
    const SimulationSetup& setup = oracle ? *small_setup : main_setup;
    const auto policy = make_policy(spec, setup);
    const auto baseline = make_policy(parse_policy_spec("zero-wait"), setup);
    auto records = run_batch(setup, *policy, config.run.seed, count, config.run.workers);
    if (options.corrupt_first_record && !corrupted && !records.empty() &&
        !records.front().steps.empty()) {
      records.front().steps.front().u.array() += 1.0;
      corrupted = true;
    }

    double identity = 0.0;
    RecordAudit worst;
    for (const auto& rec : records) {
      identity = std::max(identity, cost_identity_check(rec, setup.model(), setup.riccati(),
                                                          setup.weights())
                                        .relative_residual());
      const auto w = noise_of(rec);
      const RecordAudit a = audit(rec, setup.model(), w);
      worst.dynamics = std::max(worst.dynamics, a.dynamics);
      worst.error_identity = std::max(worst.error_identity, a.error_identity);
      worst.consistency = std::max(worst.consistency, a.consistency);
      worst.admissible = worst.admissible && a.admissible;
    }
    const std::string tag = policy->name() + ": ";
    checks.push_back({tag + "cost identity", identity <= 1e-7, "max relative residual " + fmt(identity)});
    checks.push_back({tag + "estimator consistency", worst.consistency <= 1e-10,
                      "max relative gap " + fmt(worst.consistency)});
    checks.push_back({tag + "record invariants",
                      worst.admissible && worst.dynamics <= 1e-12 && worst.error_identity <= 1e-12,
                      "dynamics " + fmt(worst.dynamics) + ", e=x-xhat " + fmt(worst.error_identity)});

    if (spec.kind == PolicySpec::Kind::kZeroWait) {
      checks.push_back({tag + "dominance over zero-wait", true, "trivially equal"});
    } else {
      std::vector<double> diff(count);
      double mean = 0.0;
      for (std::size_t i = 0; i < count; ++i) {
        const NoisePath noise = sample_noise(setup, RngStream{config.run.seed, i});
        diff[i] = run_summary(setup, *baseline, noise).chi_realized -
                  run_summary(setup, *policy, noise).chi_realized;
        mean += diff[i];
      }
      mean /= static_cast<double>(count);
      double var = 0.0;
      for (double d : diff) var += (d - mean) * (d - mean);
      const double se = std::sqrt(var / static_cast<double>(count - 1) / static_cast<double>(count));
      checks.push_back({tag + "dominance over zero-wait", mean >= -2.0 * se,
                        "paired chi gain " + fmt(mean) + " +/- " + fmt(se)});
    }
  }

  if (small_setup) {
    const SimulationSetup& s = *small_setup;
    const DpOracle oracle =
        dp_oracle_build(s.model(), s.weights(), s.riccati(), *s.noise_grid());
    const DpOraclePolicy dp_policy(std::make_shared<const DpOracle>(oracle));
    const auto greedy = make_policy(parse_policy_spec("greedy"), s);
    const double dp_value = oracle.expected_cost();
    const double dp_enum =
        enumerate_expected_cost(s.model(), s.weights(), s.riccati(), *s.noise_grid(), dp_policy);
    const double greedy_value =
        enumerate_expected_cost(s.model(), s.weights(), s.riccati(), *s.noise_grid(), *greedy);
    const double zero_value = enumerate_expected_cost(s.model(), s.weights(), s.riccati(),
                                                      *s.noise_grid(), ZeroWaitPolicy{});
    const double gap = std::abs(dp_value - dp_enum) / std::max(1.0, std::abs(dp_value));
    checks.push_back({"dp-oracle value matches path enumeration", gap <= 1e-10,
                      "N=" + std::to_string(small_horizon) + ", gap " + fmt(gap)});
    checks.push_back({"dp-oracle <= greedy <= zero-wait",
                      dp_value <= greedy_value && greedy_value <= zero_value,
                      fmt(dp_value) + " <= " + fmt(greedy_value) + " <= " + fmt(zero_value)});
  }

  bool all = true;
  for (const auto& c : checks) {
    report(out, c);
    all = all && c.pass;
  }
  out << (all ? "all checks passed" : "some checks FAILED") << '\n';
  return all ? kSuccess : kCheckFailed;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stochastic control with stale information: Riccati gains, closed-loop "
               "simulation, staleness/performance trade-off curves and verification."};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  CliOverrides overrides;
  std::string policy;
  double lambda = 0.0;
  std::size_t trajectories = 0;
  std::uint64_t seed = 0;
  std::string out_path;
  int workers = 1;
  bool corrupt = false;

  app.add_option("--config", config_path, "experiment configuration (JSON)")->required();
  auto* policy_opt = app.add_option("--policy", policy,
                                    "zero-wait | greedy | greedy-bounded:<kbar> | dp-oracle"
                                    " (verify also accepts all)");
  auto* lambda_opt = app.add_option("--lambda", lambda, "Lagrange multiplier")
                         ->check(CLI::PositiveNumber);
  auto* traj_opt = app.add_option("--trajectories", trajectories, "Monte Carlo trajectories")
                       ->check(CLI::PositiveNumber);
  auto* seed_opt = app.add_option("--seed", seed, "master seed");
  auto* out_opt = app.add_option("--out", out_path, "output file (default: stdout)");
  app.add_flag("--plot", overrides.plot, "tradeoff: also write an SVG next to --out");
  auto* workers_opt = app.add_option("--workers", workers, "concurrent trajectory workers")
                          ->check(CLI::PositiveNumber);
  app.add_option("--set", sets, "override a config field, e.g. --set weights.N=50");
  app.add_flag("--per-trajectory", overrides.per_trajectory,
               "simulate: one CSV per trajectory instead of a long-format file");
  app.add_flag("--corrupt-for-test", corrupt, "verify: corrupt one record (negative control)")
      ->group("");
  app.fallthrough();

  auto* riccati = app.add_subcommand("riccati", "write S_k, K_k, Gamma_k as CSV");
  auto* simulate = app.add_subcommand("simulate", "run closed-loop trajectories");
  auto* tradeoff = app.add_subcommand("tradeoff", "sweep lambda and write the trade-off curve");
  auto* verify = app.add_subcommand("verify", "run the invariant checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  if (policy_opt->count()) overrides.policy = policy;
  if (lambda_opt->count()) overrides.lambda = lambda;
  if (traj_opt->count()) overrides.trajectories = trajectories;
  if (seed_opt->count()) overrides.seed = seed;
  if (out_opt->count()) overrides.out = out_path;
  if (workers_opt->count()) overrides.workers = workers;

  try {
    RunConfig config = load_config(config_path, sets);
    VerifyOptions verify_options;
    if (overrides.policy) verify_options.policy = *overrides.policy;
    verify_options.corrupt_first_record = corrupt;
    if (verify->parsed()) overrides.policy.reset();
    apply_overrides(config, overrides);

    if (riccati->parsed()) return cmd_riccati(config, out, err);
    if (simulate->parsed()) return cmd_simulate(config, out, err);
    if (tradeoff->parsed()) return cmd_tradeoff(config, out, err);
    if (verify->parsed()) return cmd_verify(config, verify_options, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const StructuralError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const StateSpaceTooLarge& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kCheckFailed;
  }
  return kUsageError;
}

}  // namespace staleinfo::cli
