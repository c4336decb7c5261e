#pragma once

#include <edgemarket/eg_core.hpp>
#include <edgemarket/market_model.hpp>

#include <string>
#include <vector>

namespace edgemarket {

/// x_ij = B_i / sum(B) on every EN.
[[nodiscard]] Allocation proportional_allocation(const MarketInstance& instance);

/// Each EN goes to argmax_i w_i a_ij; maximizers within a relative 1e-12 of
/// the best split it equally.
[[nodiscard]] Allocation welfare_max(const MarketInstance& instance,
                                     const Eigen::VectorXd& weights);

struct MaxMinOptions {
  /// Bisection stops once the bracket is narrower than tol * min_i u_i(C).
  double tol = 1e-5;
  /// Gradient iterations per feasibility check.
  int inner_iters = 20000;
};

/// Allocation approximately maximizing min_i u_i. Bisection on the target
/// level t; each level is tested by minimizing sum_i max(0, 1 - u_i / t)^2
/// over the capped-simplex product. Capacity left over at the end goes to the
/// service valuing it most.
[[nodiscard]] Allocation maxmin_allocation(const MarketInstance& instance,
                                           const MaxMinOptions& opts = {});

struct FairnessReport {
  /// min(1, min_{i != k} (u_i(x_i) / B_i) / (u_i(x_k) / B_k)). Pairs with
  /// u_i(x_k) = 0 are skipped.
  double ef_index = 1.0;
  /// u_i(x_i) / ((B_i / sum B) u_i(C)), C = every EN in full.
  Eigen::VectorXd proportionality_ratios;
  /// u_i(x_i) - u_i(x_hat_i) against the proportional allocation.
  Eigen::VectorXd sharing_incentive_margins;
  /// |sum_j p_j x_ij + s_i - B_i| at the audited prices.
  Eigen::VectorXd budget_exhaustion_slacks;
  bool pareto_certified = false;
  /// Largest normalized certificate residual behind `pareto_certified`.
  double pareto_gap = 0.0;
};

/// Audits a bare allocation; prices come from recover_prices. If some
/// service has zero utility no prices exist, slacks are set to B_i and the
/// Pareto flag is false.
[[nodiscard]] FairnessReport audit(const MarketInstance& instance, const Allocation& allocation,
                                   double certificate_tol = 1e-6);

/// Audits a solution's allocation. Budget slacks use the solution's own
/// prices and surpluses; the Pareto flag still uses recovered prices.
[[nodiscard]] FairnessReport audit(const MarketInstance& instance,
                                   const EquilibriumSolution& solution,
                                   double certificate_tol = 1e-6);

struct SchemeResult {
  std::string scheme;
  Allocation allocation;
  Eigen::VectorXd utilities;
  FairnessReport report;

  [[nodiscard]] double total_utility() const { return utilities.sum(); }
  [[nodiscard]] double min_utility() const { return utilities.minCoeff(); }
};

struct CompareOptions {
  EgOptions eg;
  MaxMinOptions maxmin;
};

/// Market equilibrium ("ME"), proportional ("Prop"), equal-weight welfare
/// ("SW1"), budget-weighted welfare ("SW2") and "maxmin", in that order.
[[nodiscard]] std::vector<SchemeResult> compare_schemes(const MarketInstance& instance,
                                                        const CompareOptions& opts = {});

}  // namespace edgemarket
