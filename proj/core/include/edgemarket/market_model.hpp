#pragma once

#include <edgemarket/errors.hpp>
#include <edgemarket/trace.hpp>

#include <Eigen/Core>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace edgemarket {

namespace tol {
/// Algebraic identities (utility bookkeeping, budget identities).
inline constexpr double num = 1e-9;
/// Relative slack for membership in an MBB demand set.
inline constexpr double mbb = 1e-6;
/// Column-sum feasibility of allocations.
inline constexpr double feas = 1e-7;
}  // namespace tol

/// A linear Fisher market over normalized EN capacities.
///
/// N services with budgets B_i buy fractions of M edge nodes whose capacity is
/// normalized to one. Service i gains a_ij utility per unit of EN j. Raw EN
/// capacities (computing-unit counts) are kept only as display metadata.
///
/// Construction rejects: non-positive or non-finite budgets, negative or
/// non-finite valuations, services that value no EN, and ENs that no service
/// values. Instances are immutable afterwards.
class MarketInstance {
 public:
  MarketInstance(Eigen::VectorXd budgets, Eigen::MatrixXd valuations, std::string label = {},
                 std::vector<double> raw_capacity = {});

  [[nodiscard]] Eigen::Index n_services() const noexcept { return valuations_.rows(); }
  [[nodiscard]] Eigen::Index n_ens() const noexcept { return valuations_.cols(); }
  [[nodiscard]] const Eigen::VectorXd& budgets() const noexcept { return budgets_; }
  [[nodiscard]] const Eigen::MatrixXd& valuations() const noexcept { return valuations_; }
  [[nodiscard]] const std::string& label() const noexcept { return label_; }
  [[nodiscard]] const std::vector<double>& raw_capacity() const noexcept { return raw_capacity_; }
  [[nodiscard]] double total_budget() const noexcept { return budgets_.sum(); }

  /// Same valuations and metadata, different budgets (validated).
  [[nodiscard]] MarketInstance with_budgets(Eigen::VectorXd budgets) const;
  /// Budgets rescaled so they sum to one.
  [[nodiscard]] MarketInstance with_normalized_budgets() const;

 private:
  Eigen::VectorXd budgets_;
  Eigen::MatrixXd valuations_;
  std::string label_;
  std::vector<double> raw_capacity_;
};

/// x_ij: fraction of EN j's capacity held by service i.
struct Allocation {
  Eigen::MatrixXd x;
};

/// p_j: money per unit of EN capacity.
struct PriceVector {
  Eigen::VectorXd p;
};

enum class SolveMethod {
  eg,
  eg_projected_gradient,
  propdyn,
  ces,
  propbr,
  netprofit,
  baseline,
};

[[nodiscard]] std::string_view to_string(SolveMethod method) noexcept;
[[nodiscard]] std::optional<SolveMethod> parse_solve_method(std::string_view name) noexcept;

struct EquilibriumSolution {
  Allocation allocation;
  PriceVector prices;
  /// u_i = sum_j a_ij x_ij + s_i.
  Eigen::VectorXd utilities;
  /// Unspent money; identically zero in the basic model.
  Eigen::VectorXd surpluses;
  int iterations = 0;
  bool converged = false;
  SolveMethod method = SolveMethod::eg;
};

/// Optimality residuals of a candidate equilibrium.
struct CertificateReport {
  /// Largest of the stationarity, complementarity, feasibility residuals (relative).
  double max_kkt_residual = 0.0;
  /// Adjusted dual objective minus primal objective; >= 0 up to rounding when x is feasible.
  double duality_gap = 0.0;
  /// max_j |1 - sum_i x_ij|.
  double clearing_slack = 0.0;
  /// max_i |sum_j p_j x_ij + s_i - B_i| in money units.
  double budget_slack = 0.0;
  /// max_ij max(0, a_ij B_i / u_i - p_j) / p_j.
  double mbb_violation = 0.0;

  /// True when every residual is below `tolerance`. The budget slack is
  /// measured against max(1, budget_scale) and the gap against max(1, |primal|).
  [[nodiscard]] bool passes(double tolerance, double budget_scale = 1.0,
                            double primal = 0.0) const noexcept;
};

/// Thrown by iterative solvers that exhaust their iteration budget.
///
/// Carries the best iterate found, its certificate, and the trace (possibly
/// empty) so callers can still write diagnostics.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, EquilibriumSolution best,
                      CertificateReport certificate, DynamicsTrace trace = {})
      : Error(what),
        best_(std::move(best)),
        certificate_(certificate),
        trace_(std::move(trace)) {}

  [[nodiscard]] const EquilibriumSolution& best_iterate() const noexcept { return best_; }
  [[nodiscard]] const CertificateReport& certificate() const noexcept { return certificate_; }
  [[nodiscard]] const DynamicsTrace& trace() const noexcept { return trace_; }

 private:
  EquilibriumSolution best_;
  CertificateReport certificate_;
  DynamicsTrace trace_;
};

/// sum_j a_ij x_ij for one service.
[[nodiscard]] double utility(const MarketInstance& instance, const Allocation& allocation,
                             Eigen::Index service);

/// Linear utilities of every service (no surplus term).
[[nodiscard]] Eigen::VectorXd utilities(const MarketInstance& instance,
                                        const Allocation& allocation);

struct MbbResult {
  double alpha = 0.0;
  std::vector<Eigen::Index> demand_set;
};

/// Maximum bang-per-buck alpha_i = max_j a_ij / p_j and the ENs attaining it
/// within a relative slack of tol::mbb.
[[nodiscard]] MbbResult mbb(const MarketInstance& instance, const PriceVector& prices,
                            Eigen::Index service);

/// Throws DimensionError unless the allocation is N x M.
void check_shape(const MarketInstance& instance, const Allocation& allocation);
/// Throws DimensionError unless the price vector has M entries.
void check_shape(const MarketInstance& instance, const PriceVector& prices);
/// Throws DimensionError when any solution component has the wrong length.
void check_shape(const MarketInstance& instance, const EquilibriumSolution& solution);

}  // namespace edgemarket
