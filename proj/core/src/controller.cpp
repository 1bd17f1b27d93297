#include "staleinfo/controller.hpp"

#include <string>

namespace staleinfo {

Vector control_input(const RiccatiSolution& sol, int k, const Vector& xhat) {
  if (k < 0 || k >= static_cast<int>(sol.K.size())) {
    throw StructuralError("control_input: step " + std::to_string(k) + " out of range");
  }
  const Matrix& K = sol.K[k];
  if (xhat.size() != K.cols()) {
    throw StructuralError("control_input: estimate dimension mismatch");
  }
  return -(K * xhat);
}

}  // namespace staleinfo
