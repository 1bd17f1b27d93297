#pragma once

#include "staleinfo/riccati.hpp"

namespace staleinfo {

/// Certainty-equivalence input u_k = -K_k xhat_k.
[[nodiscard]] Vector control_input(const RiccatiSolution& sol, int k, const Vector& xhat);

}  // namespace staleinfo
