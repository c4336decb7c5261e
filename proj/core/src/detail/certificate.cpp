#include "detail/certificate.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <sstream>

namespace edgemarket::detail {

namespace {

// Feasibility of the dual point is checked up to rounding of p_j / a_ij.
constexpr double kDualRelTol = 1e-12;

}  // namespace

double primal_objective(const MarketInstance& instance, const Eigen::MatrixXd& x,
                        const Eigen::VectorXd& surpluses, MarketKind kind) {
  const Eigen::VectorXd u =
      (instance.valuations().array() * x.array()).rowwise().sum().matrix() + surpluses;
  if ((u.array() <= 0.0).any()) return -std::numeric_limits<double>::infinity();
  double value = instance.budgets().dot(u.array().log().matrix());
  if (kind == MarketKind::netprofit) value -= surpluses.sum();
  return value;
}

Eigen::VectorXd feasible_eta(const MarketInstance& instance, const Eigen::VectorXd& prices,
                             bool cap_eta) {
  const auto& a = instance.valuations();
  Eigen::VectorXd eta(instance.n_services());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (a(i, j) > 0.0) best = std::min(best, prices(j) / a(i, j));
    }
    eta(i) = cap_eta ? std::min(best, 1.0) : best;
  }
  return eta;
}

double adjusted_dual(const MarketInstance& instance, const Eigen::VectorXd& prices,
                     const Eigen::VectorXd& eta, bool cap_eta) {
  if (prices.size() != instance.n_ens() || eta.size() != instance.n_services()) {
    throw DimensionError("dual point does not match the instance dimensions");
  }
  const auto& a = instance.valuations();
  const auto& budgets = instance.budgets();
  std::vector<std::pair<Eigen::Index, Eigen::Index>> violated;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (!(eta(i) > 0.0) || (cap_eta && eta(i) > 1.0 + kDualRelTol)) {
      violated.emplace_back(i, -1);
      continue;
    }
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (prices(j) < a(i, j) * eta(i) * (1.0 - kDualRelTol)) violated.emplace_back(i, j);
    }
  }
  if (!violated.empty()) {
    std::ostringstream os;
    os << "infeasible dual point, violated pairs:";
    for (const auto& [i, j] : violated) os << " (" << i << "," << j << ")";
    throw FeasibilityError(os.str(), std::move(violated));
  }
  double value = prices.sum();
  for (Eigen::Index i = 0; i < budgets.size(); ++i) {
    value += -budgets(i) * std::log(eta(i)) + budgets(i) * std::log(budgets(i)) - budgets(i);
  }
  return value;
}

CertificateReport certify(const MarketInstance& instance, const Eigen::MatrixXd& x,
                          const Eigen::VectorXd& prices, const Eigen::VectorXd& surpluses,
                          MarketKind kind) {
  const auto& a = instance.valuations();
  const auto& budgets = instance.budgets();
  const Eigen::Index n = a.rows();
  const Eigen::Index m = a.cols();

  const Eigen::VectorXd u = (a.array() * x.array()).rowwise().sum().matrix() + surpluses;
  const Eigen::VectorXd u_safe = u.cwiseMax(DBL_MIN);
  const Eigen::VectorXd p_safe = prices.cwiseMax(DBL_MIN);

  CertificateReport report;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double filled = x.col(j).sum();
    const double slack = prices(j) > 0.0 ? std::abs(1.0 - filled) : std::max(0.0, filled - 1.0);
    report.clearing_slack = std::max(report.clearing_slack, slack);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double spent = prices.dot(x.row(i).transpose()) + surpluses(i);
    report.budget_slack = std::max(report.budget_slack, std::abs(spent - budgets(i)));
  }

  double complementarity = 0.0;
  double sign_violation = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double marginal = a(i, j) * budgets(i) / u_safe(i);
      report.mbb_violation =
          std::max(report.mbb_violation, std::max(0.0, marginal - prices(j)) / p_safe(j));
      if (x(i, j) > tol::feas) {
        complementarity =
            std::max(complementarity, x(i, j) * std::abs(prices(j) - marginal) / p_safe(j));
      }
      sign_violation = std::max(sign_violation, -x(i, j));
    }
  }
  sign_violation = std::max(sign_violation, -prices.minCoeff());

  double worst = std::max({report.mbb_violation, complementarity, report.clearing_slack,
                           report.budget_slack / budget_scale(instance), sign_violation});
  if (kind == MarketKind::netprofit) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double floor_violation = std::max(0.0, budgets(i) - u(i)) / budgets(i);
      const double surplus_comp =
          std::max(0.0, surpluses(i)) * std::abs(u(i) - budgets(i)) / (budgets(i) * budgets(i));
      const double negative_surplus = std::max(0.0, -surpluses(i)) / budgets(i);
      worst = std::max({worst, floor_violation, surplus_comp, negative_surplus});
    }
  } else {
    worst = std::max(worst, surpluses.cwiseAbs().maxCoeff() / budget_scale(instance));
  }
  report.max_kkt_residual = worst;

  const bool cap = kind == MarketKind::netprofit;
  const double primal = primal_objective(instance, x, surpluses, kind);
  if ((prices.array() <= 0.0).any() || !std::isfinite(primal)) {
    report.duality_gap = DBL_MAX;
  } else {
    report.duality_gap = adjusted_dual(instance, prices, feasible_eta(instance, prices, cap), cap) -
                         primal;
  }
  return report;
}

}  // namespace edgemarket::detail
