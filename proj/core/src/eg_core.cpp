#include <edgemarket/eg_core.hpp>

#include <edgemarket/dynamics.hpp>

#include "detail/certificate.hpp"
#include "detail/pg_engine.hpp"
#include "detail/polish.hpp"

#include <cmath>

namespace edgemarket {

namespace {

double max_relative_change(const Eigen::VectorXd& now, const Eigen::VectorXd& before) {
  return ((now - before).array().abs() / before.array()).maxCoeff();
}

EquilibriumSolution solve_by_dynamics(const MarketInstance& instance, const EgOptions& opts) {
  const Eigen::Index n = instance.n_services();
  const Eigen::VectorXd no_surplus = Eigen::VectorXd::Zero(n);
  const double scale = detail::budget_scale(instance);

  BidMatrix bids = uniform_bids(instance);
  Eigen::VectorXd previous = bids.b.colwise().sum().transpose();
  int next_polish = 16;
  for (int t = 1; t <= opts.max_iters; ++t) {
    BidMatrix next = propdyn_step(instance, bids);
    if (opts.damping < 1.0) next.b = (1.0 - opts.damping) * bids.b + opts.damping * next.b;
    bids = std::move(next);
    const Eigen::VectorXd prices = bids.b.colwise().sum().transpose();
    const bool settled = max_relative_change(prices, previous) < opts.tol;
    previous = prices;
    const bool checkpoint = t == next_polish;
    if (checkpoint) next_polish *= 2;
    if (!settled && !checkpoint) continue;

    if (auto exact = detail::polish_equilibrium(instance, bids.b, no_surplus,
                                                detail::MarketKind::basic)) {
      exact->method = SolveMethod::eg;
      exact->iterations = t;
      exact->converged = true;
      return *exact;
    }
    if (settled) {
      auto raw = solution_from_bids(instance, bids, SolveMethod::eg);
      raw.iterations = t;
      const auto report = kkt_certificate(instance, raw);
      if (report.passes(opts.certificate_tol, scale, eg_objective(instance, raw.allocation))) {
        raw.converged = true;
        return raw;
      }
      // Prices have settled but the support is still blurred; proportional
      // response only sharpens it at a sublinear rate. Finish with projected
      // gradient from the current allocation.
      if (t == opts.max_iters) break;
      detail::PrimalSolveOptions pg;
      pg.kind = detail::MarketKind::basic;
      pg.max_iters = opts.max_iters - t;
      pg.certificate_tol = opts.certificate_tol;
      pg.method = SolveMethod::eg;
      pg.start_x = std::move(raw.allocation.x);
      auto finished = detail::solve_primal(instance, pg);
      finished.iterations += t;
      return finished;
    }
  }
  auto best = solution_from_bids(instance, bids, SolveMethod::eg);
  best.iterations = opts.max_iters;
  const auto report = kkt_certificate(instance, best);
  throw NonConvergenceError("EG solve did not certify within max_iters", std::move(best), report);
}

}  // namespace

EquilibriumSolution solve_eg(const MarketInstance& instance, const EgOptions& opts) {
  if (!(opts.tol > 0.0) || opts.max_iters < 1 || !(opts.certificate_tol > 0.0) ||
      !(opts.damping > 0.0) || opts.damping > 1.0) {
    throw ConfigError("EG solve needs positive tolerances, max_iters >= 1 and damping in (0, 1]");
  }
  if (opts.normalize_budgets) {
    EgOptions inner = opts;
    inner.normalize_budgets = false;
    return solve_eg(instance.with_normalized_budgets(), inner);
  }
  if (opts.engine == EgEngine::projected_gradient) {
    detail::PrimalSolveOptions pg;
    pg.kind = detail::MarketKind::basic;
    pg.max_iters = opts.max_iters;
    pg.certificate_tol = opts.certificate_tol;
    pg.method = SolveMethod::eg_projected_gradient;
    return detail::solve_primal(instance, pg);
  }
  return solve_by_dynamics(instance, opts);
}

PriceVector recover_prices(const MarketInstance& instance, const Allocation& allocation) {
  return recover_prices(instance, allocation, Eigen::VectorXd::Zero(instance.n_services()));
}

PriceVector recover_prices(const MarketInstance& instance, const Allocation& allocation,
                           const Eigen::VectorXd& surpluses) {
  check_shape(instance, allocation);
  if (surpluses.size() != instance.n_services()) {
    throw DimensionError("surplus vector length does not match the number of services");
  }
  return PriceVector{detail::recovered_prices(instance, allocation.x, surpluses)};
}

double eg_objective(const MarketInstance& instance, const Allocation& allocation) {
  check_shape(instance, allocation);
  return detail::primal_objective(instance, allocation.x,
                                  Eigen::VectorXd::Zero(instance.n_services()),
                                  detail::MarketKind::basic);
}

double dual_value(const MarketInstance& instance, const PriceVector& prices,
                  const Eigen::VectorXd& eta) {
  check_shape(instance, prices);
  if (eta.size() != instance.n_services()) {
    throw DimensionError("eta length does not match the number of services");
  }
  return detail::adjusted_dual(instance, prices.p, eta, false);
}

Eigen::VectorXd best_dual_eta(const MarketInstance& instance, const PriceVector& prices) {
  check_shape(instance, prices);
  return detail::feasible_eta(instance, prices.p, false);
}

CertificateReport kkt_certificate(const MarketInstance& instance,
                                  const EquilibriumSolution& solution) {
  check_shape(instance, solution);
  return detail::certify(instance, solution.allocation.x, solution.prices.p, solution.surpluses,
                         detail::MarketKind::basic);
}

}  // namespace edgemarket
