#pragma once

#include <edgemarket/market_model.hpp>

#include <optional>

namespace edgemarket {

/// b_ij: money service i bids on EN j.
struct BidMatrix {
  Eigen::MatrixXd b;
};

/// Uniform initial bids b_ij = B_i / M.
[[nodiscard]] BidMatrix uniform_bids(const MarketInstance& instance);

/// Prices, allocation and utilities implied by a bid matrix under
/// proportional sharing: p_j = sum_i b_ij, x_ij = b_ij / p_j. ENs without bids
/// get price zero and stay unallocated.
[[nodiscard]] EquilibriumSolution solution_from_bids(const MarketInstance& instance,
                                                     const BidMatrix& bids, SolveMethod method);

// -- Proportional response --------------------------------------------------

/// One proportional response update: each service re-splits its budget in
/// proportion to the utility each EN delivered under the current bids.
/// Bids that fall below the smallest normal double are set to zero.
/// Throws StalledEnError if some EN receives no bids.
[[nodiscard]] BidMatrix propdyn_step(const MarketInstance& instance, const BidMatrix& bids);

struct PropDynOptions {
  /// Stop when max_j |p_j(t+1) - p_j(t)| / p_j(t) drops below this.
  double tol = 1e-8;
  int max_iters = 200000;
  /// New bids are (1 - damping) * old + damping * response.
  double damping = 1.0;
  std::optional<BidMatrix> initial_bids;
  bool record_trace = true;
  bool record_bids = false;
};

struct DynamicsResult {
  EquilibriumSolution solution;
  DynamicsTrace trace;
};

/// Iterates propdyn_step from uniform (or given) bids until prices settle.
/// Throws NonConvergenceError carrying the last iterate and trace.
[[nodiscard]] DynamicsResult propdyn_run(const MarketInstance& instance,
                                         const PropDynOptions& opts = {});

// -- CES dual decomposition -------------------------------------------------

/// Closed-form demand of a CES buyer with exponent rho at prices p; spends
/// exactly B_i. Computed in log space, so large 1 / (1 - rho) is safe.
[[nodiscard]] Eigen::VectorXd ces_demand(const MarketInstance& instance,
                                         const PriceVector& prices, Eigen::Index service,
                                         double rho);

/// (sum_j (a_ij x_j)^rho)^(1/rho).
[[nodiscard]] double ces_utility(const Eigen::Ref<const Eigen::VectorXd>& valuations,
                                 const Eigen::Ref<const Eigen::VectorXd>& bundle, double rho);

struct CesOptions {
  double rho = 0.99;
  /// Price step alpha.
  double step = 0.001;
  /// Use alpha / sqrt(t + 1) instead of a constant step.
  bool diminishing_step = false;
  /// Stop once |p_j(t+1) - p_j(t)| < tol for every EN.
  double tol = 1e-9;
  int max_iters = 2000000;
  /// Initial price of every EN (used when `initial_prices` is empty).
  double p0 = 0.2;
  std::optional<PriceVector> initial_prices;
  bool record_trace = true;
};

/// Price-adjustment loop: buyers report CES demand at the posted prices and
/// each price moves by step * (excess demand), floored just above zero.
/// Throws StepSizeError when the price vector diverges.
[[nodiscard]] DynamicsResult ces_dual_decomposition(const MarketInstance& instance,
                                                    const CesOptions& opts = {});

// -- Proportional sharing best response -------------------------------------

/// Utility-maximizing bids of one buyer against fixed opponent bids on every
/// EN, allocation by proportional sharing. Opponent bids below 1e-12 are
/// raised to 1e-12.
[[nodiscard]] Eigen::VectorXd best_response(const MarketInstance& instance, Eigen::Index service,
                                            const Eigen::Ref<const Eigen::VectorXd>& other_bids,
                                            double budget);

/// sum_j a_j b_j / (b_j + y_j), the proportional-sharing payoff of bids b.
[[nodiscard]] double proportional_share_payoff(const Eigen::Ref<const Eigen::VectorXd>& valuations,
                                               const Eigen::Ref<const Eigen::VectorXd>& bids,
                                               const Eigen::Ref<const Eigen::VectorXd>& other_bids);

struct PropBrOptions {
  /// Stop when no bid moved by more than tol * sum(B) in a round.
  double tol = 1e-9;
  int max_rounds = 10000;
  std::optional<BidMatrix> initial_bids;
  bool record_trace = true;
};

/// Round-robin best responses in ascending service order. A detected cycle
/// of period 2 to 8 returns with converged = false; exhausting max_rounds
/// throws NonConvergenceError.
[[nodiscard]] DynamicsResult propbr_run(const MarketInstance& instance,
                                        const PropBrOptions& opts = {});

}  // namespace edgemarket
