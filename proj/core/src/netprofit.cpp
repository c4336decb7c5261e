#include <edgemarket/netprofit.hpp>

#include "detail/certificate.hpp"
#include "detail/pg_engine.hpp"

#include <sstream>

namespace edgemarket {

EquilibriumSolution solve_netprofit(const MarketInstance& instance, const NetProfitOptions& opts) {
  detail::PrimalSolveOptions pg;
  pg.kind = detail::MarketKind::netprofit;
  pg.max_iters = opts.max_iters;
  pg.certificate_tol = opts.certificate_tol;
  pg.method = SolveMethod::netprofit;
  return detail::solve_primal(instance, pg);
}

CertificateReport netprofit_certificate(const MarketInstance& instance,
                                        const EquilibriumSolution& solution) {
  check_shape(instance, solution);
  return detail::certify(instance, solution.allocation.x, solution.prices.p, solution.surpluses,
                         detail::MarketKind::netprofit);
}

double netprofit_dual_value(const MarketInstance& instance, const PriceVector& prices,
                            const Eigen::VectorXd& eta) {
  check_shape(instance, prices);
  if (eta.size() != instance.n_services()) {
    throw DimensionError("eta length does not match the number of services");
  }
  return detail::adjusted_dual(instance, prices.p, eta, true);
}

double netprofit_objective(const MarketInstance& instance, const EquilibriumSolution& solution) {
  check_shape(instance, solution);
  return detail::primal_objective(instance, solution.allocation.x, solution.surpluses,
                                  detail::MarketKind::netprofit);
}

std::vector<BudgetSweepRow> budget_sweep(const MarketInstance& instance,
                                         const std::vector<double>& scales,
                                         const NetProfitOptions& opts) {
  for (std::size_t k = 0; k < scales.size(); ++k) {
    if (!(scales[k] > 0.0) || (k > 0 && scales[k] < scales[k - 1])) {
      throw ConfigError("budget scales must be positive and ascending");
    }
  }
  std::vector<BudgetSweepRow> rows;
  rows.reserve(scales.size());
  for (double scale : scales) {
    const MarketInstance scaled = instance.with_budgets(instance.budgets() * scale);
    EquilibriumSolution sol;
    try {
      sol = solve_netprofit(scaled, opts);
    } catch (const NonConvergenceError& e) {
      std::ostringstream os;
      os << "budget scale " << scale << ": " << e.what();
      throw NonConvergenceError(os.str(), e.best_iterate(), e.certificate(), e.trace());
    }
    BudgetSweepRow row;
    row.scale = scale;
    row.prices = sol.prices.p;
    row.utilities = sol.utilities;
    row.surpluses = sol.surpluses;
    row.surplus_ratios = (sol.surpluses.array() / scaled.budgets().array()).matrix();
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace edgemarket
