#pragma once

#include <edgemarket/market_model.hpp>

namespace edgemarket {

enum class EgEngine {
  /// Proportional response dynamics followed by an exact support polish.
  proportional_response,
  /// Spectral projected gradient on the primal program; cross-check engine.
  projected_gradient,
};

struct EgOptions {
  EgEngine engine = EgEngine::proportional_response;
  /// Relative price change between sweeps at which the dynamics stop.
  double tol = 1e-8;
  int max_iters = 200000;
  /// Residual threshold a returned solution must certify at.
  double certificate_tol = 1e-6;
  /// Solve with budgets rescaled to sum to one. Utilities are unaffected;
  /// prices come back in the normalized money unit.
  bool normalize_budgets = false;
  /// Damping of the proportional response update (1 = plain update).
  double damping = 1.0;
};

/// Market equilibrium of the basic (revenue-maximizing) model, i.e. the
/// maximizer of sum_i B_i ln u_i over column-capped non-negative allocations.
///
/// Throws NonConvergenceError (with the best iterate) if neither the support
/// polish nor the raw iterate certifies within `opts.max_iters`.
[[nodiscard]] EquilibriumSolution solve_eg(const MarketInstance& instance,
                                           const EgOptions& opts = {});

/// p_j = max_i B_i a_ij / u_i(x_i). Throws DegenerateAllocationError if some u_i is zero.
[[nodiscard]] PriceVector recover_prices(const MarketInstance& instance,
                                         const Allocation& allocation);

/// Same rule with each utility shifted by the service's surplus money.
[[nodiscard]] PriceVector recover_prices(const MarketInstance& instance,
                                         const Allocation& allocation,
                                         const Eigen::VectorXd& surpluses);

/// sum_i B_i ln u_i (u_i from the allocation). -inf if some u_i <= 0.
[[nodiscard]] double eg_objective(const MarketInstance& instance, const Allocation& allocation);

/// sum_j p_j - sum_i B_i ln eta_i + sum_i (B_i ln B_i - B_i).
///
/// The constant makes the value directly comparable with eg_objective: it is
/// an upper bound for every feasible allocation and equal to the optimum at
/// eta_i = B_i / u_i*. Throws FeasibilityError if p_j < a_ij eta_i for some
/// pair or some eta_i <= 0.
[[nodiscard]] double dual_value(const MarketInstance& instance, const PriceVector& prices,
                                const Eigen::VectorXd& eta);

/// Largest feasible eta for the given prices: eta_i = min_{j: a_ij > 0} p_j / a_ij.
[[nodiscard]] Eigen::VectorXd best_dual_eta(const MarketInstance& instance,
                                            const PriceVector& prices);

/// KKT residuals of a basic-model solution (surpluses are included in the
/// budget identity but are expected to be zero).
[[nodiscard]] CertificateReport kkt_certificate(const MarketInstance& instance,
                                                const EquilibriumSolution& solution);

}  // namespace edgemarket
