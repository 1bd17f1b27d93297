#include "config.hpp"

#include <fstream>
#include <sstream>

namespace staleinfo::cli {

using nlohmann::json;

namespace {

const json& require(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ConfigError("missing field '" + where + "." + key + "'");
  }
  return obj.at(key);
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError("field '" + where + "' must be a number");
  return v.get<double>();
}

long long integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ConfigError("field '" + where + "' must be an integer");
  return v.get<long long>();
}

Matrix matrix(const json& v, Eigen::Index rows, Eigen::Index cols, const std::string& where) {
  Matrix m(rows, cols);
  if (v.is_number()) {
    if (rows != 1 || cols != 1) {
      throw ConfigError("field '" + where + "' must be a " + std::to_string(rows) + "x" +
                        std::to_string(cols) + " row-major array");
    }
    m(0, 0) = v.get<double>();
    return m;
  }
  if (!v.is_array() || static_cast<Eigen::Index>(v.size()) != rows * cols) {
    throw ConfigError("field '" + where + "' must hold " + std::to_string(rows * cols) +
                      " row-major entries");
  }
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto idx = static_cast<std::size_t>(r * cols + c);
      m(r, c) = number(v[idx], where + "[" + std::to_string(idx) + "]");
    }
  }
  return m;
}

std::vector<Matrix> matrix_sequence(const json& obj, const std::string& single,
                                    const std::string& sequence, std::size_t length,
                                    Eigen::Index dim, const std::string& where) {
  if (obj.contains(sequence)) {
    const json& seq = obj.at(sequence);
    if (!seq.is_array() || seq.size() != length) {
      throw ConfigError("field '" + where + "." + sequence + "' must hold " +
                        std::to_string(length) + " matrices");
    }
    std::vector<Matrix> out;
    for (std::size_t k = 0; k < length; ++k) {
      out.push_back(matrix(seq[k], dim, dim, where + "." + sequence + "[" + std::to_string(k) + "]"));
    }
    return out;
  }
  const Matrix m = matrix(require(obj, single, where), dim, dim, where + "." + single);
  return std::vector<Matrix>(length, m);
}

std::optional<NoiseGrid> noise_grid(const json& v, const Matrix& W) {
  if (v.is_null()) return std::nullopt;
  if (v.is_string()) {
    if (v.get<std::string>() != "two-point") {
      throw ConfigError("field 'run.noise_grid' must be \"two-point\" or {atoms, probs}");
    }
    if (W.rows() != 1) throw ConfigError("field 'run.noise_grid' requires a scalar plant");
    return NoiseGrid::two_point(W(0, 0));
  }
  NoiseGrid grid;
  for (const auto& a : require(v, "atoms", "run.noise_grid")) {
    grid.atoms.push_back(number(a, "run.noise_grid.atoms"));
  }
  for (const auto& p : require(v, "probs", "run.noise_grid")) {
    grid.probs.push_back(number(p, "run.noise_grid.probs"));
  }
  try {
    grid.validate();
  } catch (const StructuralError& e) {
    throw ConfigError(std::string("field 'run.noise_grid': ") + e.what());
  }
  return grid;
}

}  // namespace

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("--set expects key=value, got '" + assignment + "'");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("--set key '" + key + "' has an empty component");
    if (!node->is_object()) *node = json::object();
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = std::move(value);
}

RunConfig parse_config(const json& doc) {
  RunConfig cfg;
  const json& model = require(doc, "model", "<root>");
  const json& weights = require(doc, "weights", "<root>");

  const long long n = integer(require(model, "n", "model"), "model.n");
  const long long m = integer(require(model, "m", "model"), "model.m");
  if (n < 1 || m < 1) throw ConfigError("fields 'model.n' and 'model.m' must be positive");

  PlantModel& plant = cfg.model;
  plant.A = matrix(require(model, "A", "model"), n, n, "model.A");
  plant.B = matrix(require(model, "B", "model"), n, m, "model.B");
  plant.W = matrix(require(model, "W", "model"), n, n, "model.W");
  plant.m0 = model.contains("m0") ? Vector(matrix(model.at("m0"), n, 1, "model.m0"))
                                  : Vector(Vector::Zero(n));
  plant.M0 = model.contains("M0") ? matrix(model.at("M0"), n, n, "model.M0")
                                  : Matrix(Matrix::Zero(n, n));

  CostWeights& w = cfg.weights;
  const long long N = integer(require(weights, "N", "weights"), "weights.N");
  if (N < 0) throw ConfigError("field 'weights.N' must be nonnegative");
  w.horizon = static_cast<int>(N);
  const auto steps = static_cast<std::size_t>(N) + 1;
  w.Q = matrix_sequence(weights, "Q", "Q_sequence", steps, n, "weights");
  w.Q.push_back(matrix(require(weights, "Q_terminal", "weights"), n, n, "weights.Q_terminal"));
  w.R = matrix_sequence(weights, "R", "R_sequence", steps, m, "weights");

  const json& theta = weights.contains("theta_check") ? weights.at("theta_check") : json(1.0);
  if (theta.is_array()) {
    if (theta.size() != steps) {
      throw ConfigError("field 'weights.theta_check' must hold N+1 values");
    }
    for (std::size_t k = 0; k < steps; ++k) {
      w.theta_check.push_back(number(theta[k], "weights.theta_check[" + std::to_string(k) + "]"));
    }
  } else {
    w.theta_check.assign(steps, number(theta, "weights.theta_check"));
  }
  w.lambda = number(require(weights, "lambda", "weights"), "weights.lambda");

  const json run = doc.contains("run") ? doc.at("run") : json::object();
  RunSettings& r = cfg.run;
  if (run.contains("policy")) r.policy = run.at("policy").get<std::string>();
  if (run.contains("trajectories")) {
    const long long count = integer(run.at("trajectories"), "run.trajectories");
    if (count < 1) throw ConfigError("field 'run.trajectories' must be >= 1");
    r.trajectories = static_cast<std::size_t>(count);
  }
  if (run.contains("seed")) {
    const json& seed = run.at("seed");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
      throw ConfigError("field 'run.seed' must be a nonnegative integer");
    }
    r.seed = seed.get<std::uint64_t>();
  }
  if (run.contains("workers")) r.workers = static_cast<int>(integer(run.at("workers"), "run.workers"));
  if (run.contains("kbar")) r.kbar = static_cast<int>(integer(run.at("kbar"), "run.kbar"));
  if (run.contains("lambda_grid")) {
    for (const auto& v : run.at("lambda_grid")) r.lambda_grid.push_back(number(v, "run.lambda_grid"));
  }
  if (run.contains("out")) r.out = run.at("out").get<std::string>();
  if (run.contains("plot")) r.plot = run.at("plot").get<bool>();
  if (run.contains("format")) {
    const auto format = run.at("format").get<std::string>();
    if (format != "long" && format != "per-trajectory") {
      throw ConfigError("field 'run.format' must be \"long\" or \"per-trajectory\"");
    }
    r.per_trajectory = format == "per-trajectory";
  }
  if (run.contains("noise_grid")) r.noise_grid = noise_grid(run.at("noise_grid"), plant.W);

  try {
    check_dimensions(cfg.model, cfg.weights);
  } catch (const StructuralError& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path,
                      const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  for (const auto& o : overrides) apply_override(doc, o);
  try {
    return parse_config(doc);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace staleinfo::cli
