#pragma once

#include <compare>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace staleinfo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Thrown when inputs are dimensionally inconsistent or otherwise malformed.
/// Distinct from a violated modelling assumption, which is reported by
/// validate_model() instead of thrown.
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a linear solve that should be well posed fails.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Relative tolerances shared by validation and the numerical kernels.
inline constexpr double kPsdTol = 1e-9;
inline constexpr double kRankTol = 1e-9;
inline constexpr double kRiccatiTol = 1e-8;

/// Age of information: steps elapsed since the newest measurement held by the
/// controller was generated.
class Age {
 public:
  constexpr Age() = default;
  constexpr explicit Age(int value) : value_(value) {
    if (value < 0) throw StructuralError("age must be nonnegative");
  }

  [[nodiscard]] constexpr int value() const { return value_; }
  [[nodiscard]] constexpr Age next() const { return Age(value_ + 1); }

  friend constexpr auto operator<=>(Age, Age) = default;

 private:
  int value_ = 0;
};

/// x_{k+1} = A x_k + B u_k + w_k with w_k ~ N(0, W) and x_0 ~ N(m0, M0).
struct PlantModel {
  Matrix A;
  Matrix B;
  Matrix W;
  Vector m0;
  Matrix M0;

  [[nodiscard]] int state_dim() const { return static_cast<int>(A.rows()); }
  [[nodiscard]] int input_dim() const { return static_cast<int>(B.cols()); }
};

/// Time-indexed quadratic weights plus the age reward of the relaxed problem.
///
/// Q has N+2 entries (index N+1 is terminal), R and theta_check have N+1.
/// The per-step age reward used by the queuing policies is
/// theta(k) = theta_check[k] / lambda.
struct CostWeights {
  int horizon = 0;
  std::vector<Matrix> Q;
  std::vector<Matrix> R;
  std::vector<double> theta_check;
  double lambda = 1.0;

  /// Broadcasts time-invariant weights across the horizon.
  static CostWeights constant(int horizon, const Matrix& Q, const Matrix& R,
                              const Matrix& Q_terminal, double theta_check,
                              double lambda);

  [[nodiscard]] double theta(int k) const;
  [[nodiscard]] const Matrix& terminal_Q() const { return Q.back(); }

  /// Copy with a different multiplier; everything else shared.
  [[nodiscard]] CostWeights with_lambda(double new_lambda) const;
};

struct Violation {
  std::string assumption;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;

  [[nodiscard]] bool ok() const { return violations.empty(); }
  [[nodiscard]] std::string to_string() const;
};

/// Checks the structural assumptions on the plant and the weights.
/// Throws StructuralError on dimension mismatch; every violated assumption is
/// returned in the report with the offending eigenvalue or rank.
[[nodiscard]] ValidationReport validate_model(const PlantModel& model,
                                              const CostWeights& weights);

/// Rank of [B AB ... A^{n-1}B], singular values below kRankTol times the
/// largest one count as zero.
[[nodiscard]] int controllability_rank(const Matrix& A, const Matrix& B);

/// Throws StructuralError unless the sequence lengths and matrix shapes agree
/// with the plant.
void check_dimensions(const PlantModel& model, const CostWeights& weights);

}  // namespace staleinfo
