#include <edgemarket/baselines.hpp>

#include <edgemarket/projection.hpp>

#include "detail/spg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace edgemarket {

namespace {

constexpr double kTieRelTol = 1e-12;

// Gives each column's unallocated capacity to the services valuing it most.
void fill_leftover(const MarketInstance& instance, Eigen::MatrixXd& x) {
  const auto& a = instance.valuations();
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const double leftover = 1.0 - x.col(j).sum();
    if (leftover <= 0.0) continue;
    const double best = a.col(j).maxCoeff();
    const auto winners = (a.col(j).array() >= best * (1.0 - kTieRelTol)).count();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (a(i, j) >= best * (1.0 - kTieRelTol)) x(i, j) += leftover / static_cast<double>(winners);
    }
  }
}

double normalized_residual(const CertificateReport& r, double scale, double primal) {
  return std::max({r.max_kkt_residual, r.clearing_slack, r.budget_slack / std::max(1.0, scale),
                   r.mbb_violation, std::abs(r.duality_gap) / std::max(1.0, std::abs(primal))});
}

FairnessReport audit_bundles(const MarketInstance& instance, const Allocation& allocation,
                             double certificate_tol) {
  const auto& a = instance.valuations();
  const auto& budgets = instance.budgets();
  const Eigen::Index n = instance.n_services();

  FairnessReport report;
  // cross(i, k) = u_i(x_k)
  const Eigen::MatrixXd cross = a * allocation.x.transpose();
  const Eigen::VectorXd own = cross.diagonal();

  double ef = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k == i || !(cross(i, k) > 0.0)) continue;
      ef = std::min(ef, (own(i) / budgets(i)) / (cross(i, k) / budgets(k)));
    }
  }
  report.ef_index = std::max(0.0, ef);

  const double total_budget = instance.total_budget();
  const Eigen::VectorXd whole = a.rowwise().sum();
  report.proportionality_ratios =
      (own.array() / (budgets.array() / total_budget * whole.array())).matrix();
  // Evaluated with the same product as `own`, so auditing x_hat gives exact zeros.
  const Eigen::MatrixXd x_hat = proportional_allocation(instance).x;
  report.sharing_incentive_margins = own - (a * x_hat.transpose()).diagonal();

  if ((own.array() <= 0.0).any()) {
    report.budget_exhaustion_slacks = budgets;
    report.pareto_certified = false;
    report.pareto_gap = std::numeric_limits<double>::infinity();
    return report;
  }
  EquilibriumSolution candidate;
  candidate.allocation = allocation;
  candidate.prices = recover_prices(instance, allocation);
  candidate.utilities = own;
  candidate.surpluses = Eigen::VectorXd::Zero(n);
  const auto cert = kkt_certificate(instance, candidate);
  const double primal = eg_objective(instance, allocation);
  const double scale = budgets.maxCoeff();
  report.budget_exhaustion_slacks =
      ((allocation.x * candidate.prices.p) - budgets).cwiseAbs();
  report.pareto_gap = normalized_residual(cert, scale, primal);
  report.pareto_certified = cert.passes(certificate_tol, scale, primal);
  return report;
}

}  // namespace

Allocation proportional_allocation(const MarketInstance& instance) {
  Allocation out;
  out.x = (instance.budgets() / instance.total_budget()).replicate(1, instance.n_ens());
  return out;
}

Allocation welfare_max(const MarketInstance& instance, const Eigen::VectorXd& weights) {
  if (weights.size() != instance.n_services()) {
    throw DimensionError("weight vector length does not match the number of services");
  }
  if (!weights.allFinite() || (weights.array() < 0.0).any() || !(weights.sum() > 0.0)) {
    throw ConfigError("welfare weights must be finite, non-negative and not all zero");
  }
  const auto& a = instance.valuations();
  Allocation out;
  out.x = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const Eigen::VectorXd score = weights.cwiseProduct(a.col(j));
    const double best = score.maxCoeff();
    const Eigen::ArrayX<bool> winners = score.array() >= best * (1.0 - kTieRelTol);
    const auto count = static_cast<double>(winners.count());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (winners(i)) out.x(i, j) = 1.0 / count;
    }
  }
  return out;
}

Allocation maxmin_allocation(const MarketInstance& instance, const MaxMinOptions& opts) {
  if (!(opts.tol > 0.0) || opts.inner_iters < 1) throw ConfigError("invalid maxmin options");
  const auto& a = instance.valuations();
  const Eigen::Index n = a.rows();
  const Eigen::Index m = a.cols();

  auto min_utility = [&](const Eigen::VectorXd& z) {
    const Eigen::Map<const Eigen::MatrixXd> x(z.data(), n, m);
    return (a.array() * x.array()).rowwise().sum().minCoeff();
  };

  Eigen::MatrixXd start = proportional_allocation(instance).x;
  Eigen::VectorXd best = Eigen::Map<const Eigen::VectorXd>(start.data(), n * m);
  double lo = min_utility(best);
  const double upper = a.rowwise().sum().minCoeff();
  double hi = upper;

  while (hi - lo > opts.tol * upper) {
    const double level = 0.5 * (lo + hi);
    // Aim slightly above the level so the iterate crosses it.
    const double target = level * (1.0 + 1e-9);
    detail::SpectralProjectedGradient::Problem problem;
    auto shortfall = [&](const Eigen::VectorXd& z) {
      const Eigen::Map<const Eigen::MatrixXd> x(z.data(), n, m);
      const Eigen::ArrayXd u = (a.array() * x.array()).rowwise().sum();
      return Eigen::ArrayXd((1.0 - u / target).max(0.0));
    };
    problem.value = [&](const Eigen::VectorXd& z) { return -0.5 * shortfall(z).square().sum(); };
    problem.gradient = [&](const Eigen::VectorXd& z) {
      const Eigen::ArrayXd w = shortfall(z) / target;
      Eigen::VectorXd g(z.size());
      Eigen::Map<Eigen::MatrixXd>(g.data(), n, m) = (a.array().colwise() * w).matrix();
      return g;
    };
    problem.project = [&](Eigen::VectorXd& z) {
      Eigen::Map<Eigen::MatrixXd> x(z.data(), n, m);
      for (Eigen::Index j = 0; j < m; ++j) x.col(j) = project_capped_simplex(x.col(j));
    };

    detail::SpectralProjectedGradient spg(problem, best);
    bool reached = min_utility(spg.point()) >= level;
    for (int t = 0; t < opts.inner_iters && !reached; ++t) {
      if (!spg.step()) break;
      reached = min_utility(spg.point()) >= level;
    }
    if (reached) {
      best = spg.point();
      lo = min_utility(best);
    } else {
      hi = level;
    }
  }

  Allocation out;
  out.x = Eigen::Map<const Eigen::MatrixXd>(best.data(), n, m);
  fill_leftover(instance, out.x);
  return out;
}

FairnessReport audit(const MarketInstance& instance, const Allocation& allocation,
                     double certificate_tol) {
  check_shape(instance, allocation);
  return audit_bundles(instance, allocation, certificate_tol);
}

FairnessReport audit(const MarketInstance& instance, const EquilibriumSolution& solution,
                     double certificate_tol) {
  check_shape(instance, solution);
  auto report = audit_bundles(instance, solution.allocation, certificate_tol);
  report.budget_exhaustion_slacks =
      (solution.allocation.x * solution.prices.p + solution.surpluses - instance.budgets())
          .cwiseAbs();
  return report;
}

std::vector<SchemeResult> compare_schemes(const MarketInstance& instance,
                                          const CompareOptions& opts) {
  std::vector<SchemeResult> rows;
  auto add = [&](std::string name, Allocation allocation, FairnessReport report) {
    SchemeResult row;
    row.scheme = std::move(name);
    row.utilities = utilities(instance, allocation);
    row.allocation = std::move(allocation);
    row.report = std::move(report);
    rows.push_back(std::move(row));
  };

  const auto me = solve_eg(instance, opts.eg);
  add("ME", me.allocation, audit(instance, me));
  const auto prop = proportional_allocation(instance);
  add("Prop", prop, audit(instance, prop));
  const auto sw1 = welfare_max(instance, Eigen::VectorXd::Ones(instance.n_services()));
  add("SW1", sw1, audit(instance, sw1));
  const auto sw2 = welfare_max(instance, instance.budgets());
  add("SW2", sw2, audit(instance, sw2));
  const auto mm = maxmin_allocation(instance, opts.maxmin);
  add("maxmin", mm, audit(instance, mm));
  return rows;
}

}  // namespace edgemarket
