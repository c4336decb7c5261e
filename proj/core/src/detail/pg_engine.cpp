#include "detail/pg_engine.hpp"

#include "detail/polish.hpp"
#include "detail/spg.hpp"

#include <edgemarket/projection.hpp>

#include <cmath>
#include <limits>

namespace edgemarket::detail {

namespace {

constexpr int kCheckEvery = 50;
constexpr double kStallRelChange = 1e-10;

}  // namespace

Eigen::VectorXd recovered_prices(const MarketInstance& instance, const Eigen::MatrixXd& x,
                                 const Eigen::VectorXd& surpluses) {
  const auto& a = instance.valuations();
  const Eigen::VectorXd u = (a.array() * x.array()).rowwise().sum().matrix() + surpluses;
  if ((u.array() <= 0.0).any()) {
    throw DegenerateAllocationError("price recovery needs every utility to be positive");
  }
  const Eigen::ArrayXd weight = instance.budgets().array() / u.array();
  return (a.array().colwise() * weight).colwise().maxCoeff().transpose().matrix();
}

EquilibriumSolution solve_primal(const MarketInstance& instance, const PrimalSolveOptions& opts) {
  if (opts.max_iters < 1 || !(opts.certificate_tol > 0.0)) {
    throw ConfigError("projected gradient needs max_iters >= 1 and certificate_tol > 0");
  }
  const Eigen::Index n = instance.n_services();
  const Eigen::Index m = instance.n_ens();
  const Eigen::Index nx = n * m;
  const bool with_surplus = opts.kind == MarketKind::netprofit;
  const auto& a = instance.valuations();
  const auto& budgets = instance.budgets();

  // z = [vec(x) column-major, s]
  auto split = [&](const Eigen::VectorXd& z, Eigen::MatrixXd& x, Eigen::VectorXd& s) {
    x = Eigen::Map<const Eigen::MatrixXd>(z.data(), n, m);
    s = with_surplus ? Eigen::VectorXd(z.tail(n)) : Eigen::VectorXd::Zero(n);
  };
  auto utilities_of = [&](const Eigen::VectorXd& z) {
    Eigen::MatrixXd x;
    Eigen::VectorXd s;
    split(z, x, s);
    return Eigen::VectorXd((a.array() * x.array()).rowwise().sum().matrix() + s);
  };

  SpectralProjectedGradient::Problem problem;
  problem.value = [&](const Eigen::VectorXd& z) {
    const Eigen::VectorXd u = utilities_of(z);
    if ((u.array() <= 0.0).any()) return -std::numeric_limits<double>::infinity();
    double f = (budgets.array() * u.array().log()).sum();
    if (with_surplus) f -= z.tail(n).sum();
    return f;
  };
  problem.gradient = [&](const Eigen::VectorXd& z) {
    const Eigen::ArrayXd weight = budgets.array() / utilities_of(z).array();
    Eigen::VectorXd g(z.size());
    Eigen::Map<Eigen::MatrixXd>(g.data(), n, m) = (a.array().colwise() * weight).matrix();
    if (with_surplus) g.tail(n) = (weight - 1.0).matrix();
    return g;
  };
  problem.project = [&](Eigen::VectorXd& z) {
    Eigen::Map<Eigen::MatrixXd> x(z.data(), n, m);
    for (Eigen::Index j = 0; j < m; ++j) x.col(j) = project_capped_simplex(x.col(j));
    if (with_surplus) z.tail(n) = z.tail(n).cwiseMax(0.0);
  };

  Eigen::VectorXd start(nx + (with_surplus ? n : 0));
  if (opts.start_x) {
    if (opts.start_x->rows() != n || opts.start_x->cols() != m) {
      throw DimensionError("warm-start allocation does not match the instance");
    }
    start.head(nx) = Eigen::Map<const Eigen::VectorXd>(opts.start_x->data(), nx);
  } else {
    start.head(nx).setConstant(1.0 / (2.0 * static_cast<double>(n)));
  }
  if (with_surplus) start.tail(n) = budgets / 2.0;

  SpectralProjectedGradient spg(problem, start);

  auto raw_solution = [&](int iterations) {
    EquilibriumSolution out;
    out.method = opts.method;
    split(spg.point(), out.allocation.x, out.surpluses);
    out.utilities = utilities_of(spg.point());
    out.prices.p = recovered_prices(instance, out.allocation.x, out.surpluses);
    out.iterations = iterations;
    return out;
  };
  auto raw_passes = [&](const EquilibriumSolution& sol) {
    const auto report =
        certify(instance, sol.allocation.x, sol.prices.p, sol.surpluses, opts.kind);
    const double primal = primal_objective(instance, sol.allocation.x, sol.surpluses, opts.kind);
    return report.passes(opts.certificate_tol, budget_scale(instance), primal);
  };

  double checkpoint_value = spg.value();
  for (int t = 1; t <= opts.max_iters; ++t) {
    const bool moved = spg.step();
    if (moved && t % kCheckEvery != 0 && t != opts.max_iters) continue;

    auto raw = raw_solution(t);
    Eigen::MatrixXd spending = raw.allocation.x.array().rowwise() * raw.prices.p.transpose().array();
    if (auto exact = polish_equilibrium(instance, spending, raw.surpluses, opts.kind)) {
      exact->method = opts.method;
      exact->iterations = t;
      exact->converged = true;
      return *exact;
    }
    const double value = spg.value();
    const bool stalled =
        !moved || std::abs(value - checkpoint_value) <= kStallRelChange * std::max(1.0, std::abs(value));
    checkpoint_value = value;
    if (stalled && raw_passes(raw)) {
      raw.converged = true;
      return raw;
    }
    if (!moved) break;
  }
  auto best = raw_solution(opts.max_iters);
  const auto report = certify(instance, best.allocation.x, best.prices.p, best.surpluses, opts.kind);
  throw NonConvergenceError("projected gradient did not reach a certified optimum", std::move(best),
                            report);
}

}  // namespace edgemarket::detail
