#include "staleinfo/estimator.hpp"

#include <string>

namespace staleinfo {

Vector estimate(const ControllerInfo& info, const Matrix& A, const Matrix& B) {
  const int age = info.age.value();
  const auto available = static_cast<int>(info.control_history.size());
  if (available < age) {
    throw StructuralError("estimate: age " + std::to_string(age) + " but only " +
                          std::to_string(available) + " past inputs");
  }
  if (info.latest_measurement.size() != A.rows()) {
    throw StructuralError("estimate: measurement dimension mismatch");
  }

  // Roll the measurement forward through the inputs applied since it was
  // taken, in the same order the plant applied them.
  Vector xhat = info.latest_measurement;
  for (int t = age; t >= 1; --t) {
    xhat = A * xhat + B * info.control_history[available - t];
  }
  return xhat;
}

Vector estimation_error(std::span<const Vector> noise_history, const Matrix& A, Age age) {
  const int eta = age.value();
  const auto available = static_cast<int>(noise_history.size());
  if (available < eta) {
    throw StructuralError("estimation_error: age " + std::to_string(eta) + " but only " +
                          std::to_string(available) + " noise samples");
  }
  Vector error = Vector::Zero(A.rows());
  for (int t = eta; t >= 1; --t) error = A * error + noise_history[available - t];
  return error;
}

Vector estimation_error_magnitude(std::span<const Vector> noise_history, const Matrix& A,
                                  Age age) {
  const int eta = age.value();
  const auto available = static_cast<int>(noise_history.size());
  if (available < eta) {
    throw StructuralError("estimation_error_magnitude: age " + std::to_string(eta) +
                          " but only " + std::to_string(available) + " noise samples");
  }
  const Matrix abs_A = A.cwiseAbs();
  Vector bound = Vector::Zero(A.rows());
  for (int t = eta; t >= 1; --t) bound = abs_A * bound + noise_history[available - t].cwiseAbs();
  return bound;
}

}  // namespace staleinfo
