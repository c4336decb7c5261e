#pragma once

#include <edgemarket/market_model.hpp>

#include <vector>

namespace edgemarket {

struct NetProfitOptions {
  int max_iters = 200000;
  /// Residual threshold for accepting an unpolished iterate.
  double certificate_tol = 1e-6;
};

/// Equilibrium of the market in which unspent money keeps its value: the
/// maximizer of sum_i (B_i ln u_i - s_i), u_i = sum_j a_ij x_ij + s_i, over
/// column-capped non-negative x and s >= 0. Prices follow
/// p_j = max_i B_i a_ij / u_i.
///
/// Throws NonConvergenceError with the best iterate when no certified
/// solution is found within `opts.max_iters`.
[[nodiscard]] EquilibriumSolution solve_netprofit(const MarketInstance& instance,
                                                  const NetProfitOptions& opts = {});

/// Residuals of the net-profit optimality system. On top of the basic fields,
/// max_kkt_residual folds in the utility floor (B_i - u_i)_+ / B_i and the
/// surplus complementarity s_i |u_i - B_i| / B_i^2.
[[nodiscard]] CertificateReport netprofit_certificate(const MarketInstance& instance,
                                                      const EquilibriumSolution& solution);

/// Dual value of the net-profit program: as dual_value, with the extra
/// constraint eta_i <= 1. Throws FeasibilityError on infeasible (p, eta).
[[nodiscard]] double netprofit_dual_value(const MarketInstance& instance,
                                          const PriceVector& prices, const Eigen::VectorXd& eta);

/// sum_i (B_i ln u_i - s_i); -inf if some u_i <= 0.
[[nodiscard]] double netprofit_objective(const MarketInstance& instance,
                                         const EquilibriumSolution& solution);

struct BudgetSweepRow {
  double scale = 1.0;
  Eigen::VectorXd prices;
  Eigen::VectorXd utilities;
  Eigen::VectorXd surpluses;
  /// s_i / B_i at this scale.
  Eigen::VectorXd surplus_ratios;
};

/// solve_netprofit on the instance with every budget multiplied by each scale.
/// Scales must be positive and ascending. Solver errors are rethrown with the
/// offending scale in the message.
[[nodiscard]] std::vector<BudgetSweepRow> budget_sweep(const MarketInstance& instance,
                                                       const std::vector<double>& scales,
                                                       const NetProfitOptions& opts = {});

}  // namespace edgemarket
