#pragma once

#include <edgemarket/market_model.hpp>

namespace edgemarket::detail {

enum class MarketKind { basic, netprofit };

/// Residuals shared by the basic and net-profit certificates. For the
/// net-profit market the utility floor (u_i >= B_i) and the surplus
/// complementarity s_i (u_i - B_i) = 0 are folded into max_kkt_residual.
[[nodiscard]] CertificateReport certify(const MarketInstance& instance, const Eigen::MatrixXd& x,
                                        const Eigen::VectorXd& prices,
                                        const Eigen::VectorXd& surpluses, MarketKind kind);

/// Primal objective: sum_i B_i ln u_i, minus sum_i s_i for the net-profit market.
[[nodiscard]] double primal_objective(const MarketInstance& instance, const Eigen::MatrixXd& x,
                                      const Eigen::VectorXd& surpluses, MarketKind kind);

/// sum_j p_j - sum_i B_i ln eta_i + sum_i (B_i ln B_i - B_i) after checking
/// p_j >= a_ij eta_i, eta_i > 0 and, when `cap_eta` is set, eta_i <= 1.
[[nodiscard]] double adjusted_dual(const MarketInstance& instance, const Eigen::VectorXd& prices,
                                   const Eigen::VectorXd& eta, bool cap_eta);

/// Largest feasible eta for the given prices, optionally capped at one.
[[nodiscard]] Eigen::VectorXd feasible_eta(const MarketInstance& instance,
                                           const Eigen::VectorXd& prices, bool cap_eta);

/// max_i B_i, used to scale absolute money residuals.
[[nodiscard]] inline double budget_scale(const MarketInstance& instance) {
  return instance.budgets().maxCoeff();
}

}  // namespace edgemarket::detail
