#include "staleinfo/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace staleinfo {

namespace {

std::string shape(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

void expect_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols,
                  const std::string& name) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream os;
    os << name << " has shape " << shape(m) << ", expected " << rows << "x"
       << cols;
    throw StructuralError(os.str());
  }
}

bool is_symmetric(const Matrix& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= kPsdTol * scale;
}

// Smallest eigenvalue and largest eigenvalue magnitude of the symmetric part.
std::pair<double, double> eigen_extent(const Matrix& m) {
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  const Vector& ev = solver.eigenvalues();
  return {ev.minCoeff(), ev.cwiseAbs().maxCoeff()};
}

void check_definite(const Matrix& m, const std::string& name, bool strict,
                    std::vector<Violation>& out) {
  if (!is_symmetric(m)) {
    out.push_back({name + " not symmetric", "asymmetry exceeds tolerance"});
    return;
  }
  const auto [min_eig, max_abs] = eigen_extent(m);
  std::ostringstream os;
  os << "smallest eigenvalue " << min_eig;
  if (strict) {
    if (!(min_eig > kPsdTol * max_abs) || max_abs == 0.0) {
      out.push_back({name + " not positive definite", os.str()});
    }
  } else if (min_eig < -kPsdTol * max_abs) {
    out.push_back({name + " not positive semi-definite", os.str()});
  }
}

}  // namespace

CostWeights CostWeights::constant(int horizon, const Matrix& Q, const Matrix& R,
                                  const Matrix& Q_terminal, double theta_check,
                                  double lambda) {
  if (horizon < 0) throw StructuralError("horizon must be nonnegative");
  CostWeights w;
  w.horizon = horizon;
  w.Q.assign(static_cast<std::size_t>(horizon) + 1, Q);
  w.Q.push_back(Q_terminal);
  w.R.assign(static_cast<std::size_t>(horizon) + 1, R);
  w.theta_check.assign(static_cast<std::size_t>(horizon) + 1, theta_check);
  w.lambda = lambda;
  return w;
}

double CostWeights::theta(int k) const {
  return theta_check.at(static_cast<std::size_t>(k)) / lambda;
}

CostWeights CostWeights::with_lambda(double new_lambda) const {
  CostWeights copy = *this;
  copy.lambda = new_lambda;
  return copy;
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (const auto& v : violations) os << v.assumption << " (" << v.detail << ")\n";
  return os.str();
}

void check_dimensions(const PlantModel& model, const CostWeights& weights) {
  const auto n = model.A.rows();
  const auto m = model.B.cols();
  if (n < 1) throw StructuralError("state dimension must be positive");
  if (m < 1) throw StructuralError("input dimension must be positive");
  expect_shape(model.A, n, n, "A");
  expect_shape(model.B, n, m, "B");
  expect_shape(model.W, n, n, "W");
  expect_shape(model.M0, n, n, "M0");
  if (model.m0.size() != n) throw StructuralError("m0 length does not match state dimension");

  if (weights.horizon < 0) throw StructuralError("horizon must be nonnegative");
  const auto steps = static_cast<std::size_t>(weights.horizon) + 1;
  if (weights.Q.size() != steps + 1) {
    throw StructuralError("Q must hold N+2 matrices (terminal last)");
  }
  if (weights.R.size() != steps) throw StructuralError("R must hold N+1 matrices");
  if (weights.theta_check.size() != steps) {
    throw StructuralError("theta_check must hold N+1 values");
  }
  for (std::size_t k = 0; k < weights.Q.size(); ++k) {
    expect_shape(weights.Q[k], n, n, "Q[" + std::to_string(k) + "]");
  }
  for (std::size_t k = 0; k < weights.R.size(); ++k) {
    expect_shape(weights.R[k], m, m, "R[" + std::to_string(k) + "]");
  }
}

ValidationReport validate_model(const PlantModel& model, const CostWeights& weights) {
  check_dimensions(model, weights);
  ValidationReport report;
  auto& out = report.violations;

  check_definite(model.W, "W", /*strict=*/true, out);
  check_definite(model.M0, "M0", /*strict=*/false, out);

  const int n = model.state_dim();
  const int rank = controllability_rank(model.A, model.B);
  if (rank < n) {
    out.push_back({"(A,B) not controllable",
                   "controllability rank " + std::to_string(rank) + " < " + std::to_string(n)});
  }

  for (std::size_t k = 0; k < weights.Q.size(); ++k) {
    check_definite(weights.Q[k], "Q[" + std::to_string(k) + "]", false, out);
  }
  for (std::size_t k = 0; k < weights.R.size(); ++k) {
    check_definite(weights.R[k], "R[" + std::to_string(k) + "]", true, out);
  }

  if (!(weights.lambda > 0.0) || !std::isfinite(weights.lambda)) {
    std::ostringstream os;
    os << "lambda = " << weights.lambda;
    out.push_back({"lambda not positive", os.str()});
  } else {
    for (std::size_t k = 0; k < weights.theta_check.size(); ++k) {
      const double theta = weights.theta_check[k] / weights.lambda;
      if (!std::isfinite(theta) || theta < 0.0) {
        std::ostringstream os;
        os << "theta[" << k << "] = " << theta;
        out.push_back({"age weight not finite and nonnegative", os.str()});
      }
    }
  }
  return report;
}

int controllability_rank(const Matrix& A, const Matrix& B) {
  const auto n = A.rows();
  if (A.cols() != n || B.rows() != n) {
    throw StructuralError("controllability_rank: A is " + shape(A) + ", B is " + shape(B));
  }
  const auto m = B.cols();
  Matrix ctrb(n, n * m);
  Matrix block = B;
  for (Eigen::Index i = 0; i < n; ++i) {
    ctrb.middleCols(i * m, m) = block;
    block = A * block;
  }
  Eigen::JacobiSVD<Matrix> svd(ctrb);
  const Vector& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double cutoff = kRankTol * sv(0);
  return static_cast<int>((sv.array() > cutoff).count());
}

}  // namespace staleinfo
