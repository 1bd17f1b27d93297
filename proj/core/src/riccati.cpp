#include "staleinfo/riccati.hpp"

#include <algorithm>
#include <string>

namespace staleinfo {

RiccatiSolution solve_riccati(const PlantModel& model, const CostWeights& weights) {
  check_dimensions(model, weights);
  const int N = weights.horizon;
  const Matrix& A = model.A;
  const Matrix& B = model.B;

  RiccatiSolution sol;
  sol.S.resize(static_cast<std::size_t>(N) + 2);
  sol.K.resize(static_cast<std::size_t>(N) + 1);
  sol.H.resize(static_cast<std::size_t>(N) + 1);
  sol.Gamma.resize(static_cast<std::size_t>(N) + 1);

  sol.S[N + 1] = weights.terminal_Q();
  for (int k = N; k >= 0; --k) {
    const Matrix& S_next = sol.S[k + 1];
    const Matrix SB = S_next * B;
    Matrix H = weights.R[k] + B.transpose() * SB;
    H = (0.5 * (H + H.transpose())).eval();

    Eigen::LLT<Matrix> llt(H);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("R_k + B'S_{k+1}B not positive definite at k=" + std::to_string(k));
    }
    Matrix K = llt.solve(SB.transpose() * A);
    Matrix Gamma = K.transpose() * H * K;
    Gamma = (0.5 * (Gamma + Gamma.transpose())).eval();

    Matrix S = weights.Q[k] + A.transpose() * S_next * A - Gamma;
    sol.S[k] = 0.5 * (S + S.transpose());
    sol.K[k] = std::move(K);
    sol.H[k] = std::move(H);
    sol.Gamma[k] = std::move(Gamma);
  }
  return sol;
}

const Matrix& gamma_at(const RiccatiSolution& sol, int k) {
  if (k < 0 || k >= static_cast<int>(sol.Gamma.size())) {
    throw StructuralError("gamma_at: index " + std::to_string(k) + " out of range");
  }
  return sol.Gamma[k];
}

double riccati_residual(const PlantModel& model, const CostWeights& weights,
                        const RiccatiSolution& sol) {
  const Matrix& A = model.A;
  const Matrix& B = model.B;
  double worst = (sol.S.back() - weights.terminal_Q()).cwiseAbs().maxCoeff();
  for (int k = 0; k <= sol.horizon(); ++k) {
    const Matrix& S_next = sol.S[k + 1];
    const Matrix H = weights.R[k] + B.transpose() * S_next * B;
    const Matrix rhs =
        weights.Q[k] + A.transpose() * S_next * A - sol.K[k].transpose() * H * sol.K[k];
    const double scale = std::max(1.0, sol.S[k].cwiseAbs().maxCoeff());
    worst = std::max(worst, (sol.S[k] - rhs).cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

}  // namespace staleinfo
