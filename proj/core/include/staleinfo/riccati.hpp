#pragma once

#include <vector>

#include "staleinfo/model.hpp"

namespace staleinfo {

/// Finite-horizon Riccati quantities.
///
///   S_{N+1} = Q_{N+1}
///   H_k     = R_k + B' S_{k+1} B
///   K_k     = H_k^{-1} B' S_{k+1} A
///   S_k     = Q_k + A' S_{k+1} A - K_k' H_k K_k
///   Gamma_k = K_k' H_k K_k
///
/// S has N+2 entries; K, H and Gamma have N+1.
struct RiccatiSolution {
  std::vector<Matrix> S;
  std::vector<Matrix> K;
  std::vector<Matrix> H;
  std::vector<Matrix> Gamma;

  [[nodiscard]] int horizon() const { return static_cast<int>(K.size()) - 1; }
};

/// Backward recursion. Does not validate the model; call validate_model()
/// first. Throws NumericalError if some H_k is not positive definite.
[[nodiscard]] RiccatiSolution solve_riccati(const PlantModel& model,
                                            const CostWeights& weights);

/// Gamma_k, the weight on the estimation error at step k.
[[nodiscard]] const Matrix& gamma_at(const RiccatiSolution& sol, int k);

/// Largest recursion residual over k, relative to max(1, |S_k|_max).
[[nodiscard]] double riccati_residual(const PlantModel& model, const CostWeights& weights,
                                      const RiccatiSolution& sol);

}  // namespace staleinfo
