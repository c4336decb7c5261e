#pragma once

#include "detail/certificate.hpp"

#include <edgemarket/market_model.hpp>

#include <optional>

namespace edgemarket::detail {

struct PrimalSolveOptions {
  MarketKind kind = MarketKind::basic;
  int max_iters = 200000;
  /// Raw (unpolished) iterates are accepted only below this certificate level.
  double certificate_tol = 1e-6;
  SolveMethod method = SolveMethod::eg_projected_gradient;
  /// Initial allocation; x = 1 / (2N) everywhere when empty.
  std::optional<Eigen::MatrixXd> start_x;
};

/// Spectral projected gradient ascent on
///   sum_i B_i ln u_i - [kind == netprofit] sum_i s_i,  u_i = sum_j a_ij x_ij + s_i,
/// over column-capped non-negative x (and s >= 0 for the net-profit market).
/// Every 50 iterations the iterate is handed to polish_equilibrium. Without an
/// exact polish, an iterate is returned once the objective stalls (relative
/// change below 1e-10 over 50 iterations) and its raw certificate passes.
[[nodiscard]] EquilibriumSolution solve_primal(const MarketInstance& instance,
                                               const PrimalSolveOptions& opts);

/// p_j = max_i B_i a_ij / u_i with u_i including the surplus.
[[nodiscard]] Eigen::VectorXd recovered_prices(const MarketInstance& instance,
                                               const Eigen::MatrixXd& x,
                                               const Eigen::VectorXd& surpluses);

}  // namespace edgemarket::detail
