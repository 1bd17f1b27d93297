#pragma once

#include <span>

#include "staleinfo/model.hpp"

namespace staleinfo {

/// Operational form of the controller's information set at step k.
///
/// control_history is chronological and ends at u_{k-1}; only its last
/// `age` entries (u_{k-age} .. u_{k-1}) are used, so it must hold at least
/// that many.
struct ControllerInfo {
  Vector latest_measurement;  // x_{k - age}
  Age age;
  std::span<const Vector> control_history;
};

/// Minimum mean-square error estimate of x_k from stale information:
///   xhat_k = A^age x_{k-age} + sum_{t=1}^{age} A^{t-1} B u_{k-t}.
/// Throws StructuralError if the history is shorter than the age.
[[nodiscard]] Vector estimate(const ControllerInfo& info, const Matrix& A, const Matrix& B);

/// e_k = sum_{t=1}^{age} A^{t-1} w_{k-t}.
/// noise_history is chronological and ends at w_{k-1}.
[[nodiscard]] Vector estimation_error(std::span<const Vector> noise_history, const Matrix& A,
                                      Age age);

/// Componentwise sum_{t=1}^{age} |A|^{t-1} |w_{k-t}|. With an unstable A the
/// terms of e_k can be orders of magnitude larger than e_k itself, so this,
/// not |e_k|, is the scale against which its rounding error is judged.
[[nodiscard]] Vector estimation_error_magnitude(std::span<const Vector> noise_history,
                                                const Matrix& A, Age age);

}  // namespace staleinfo
