#include <edgemarket/dynamics.hpp>

#include <edgemarket/eg_core.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

namespace edgemarket {

namespace {

constexpr double kOpponentBidFloor = 1e-12;
constexpr std::size_t kCycleMemory = 8;

void check_bids(const MarketInstance& instance, const BidMatrix& bids) {
  if (bids.b.rows() != instance.n_services() || bids.b.cols() != instance.n_ens()) {
    throw DimensionError("bid matrix shape does not match the instance");
  }
  if (!bids.b.allFinite() || (bids.b.array() < 0.0).any()) {
    throw ConfigError("bids must be finite and non-negative");
  }
}

double max_relative_change(const Eigen::VectorXd& now, const Eigen::VectorXd& before) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < now.size(); ++j) {
    worst = std::max(worst, std::abs(now(j) - before(j)) / before(j));
  }
  return worst;
}

}  // namespace

BidMatrix uniform_bids(const MarketInstance& instance) {
  const auto m = static_cast<double>(instance.n_ens());
  BidMatrix out;
  out.b = (instance.budgets() / m).replicate(1, instance.n_ens());
  return out;
}

EquilibriumSolution solution_from_bids(const MarketInstance& instance, const BidMatrix& bids,
                                       SolveMethod method) {
  check_bids(instance, bids);
  EquilibriumSolution out;
  out.method = method;
  out.prices.p = bids.b.colwise().sum().transpose();
  out.allocation.x = Eigen::MatrixXd::Zero(instance.n_services(), instance.n_ens());
  for (Eigen::Index j = 0; j < instance.n_ens(); ++j) {
    if (out.prices.p(j) > 0.0) out.allocation.x.col(j) = bids.b.col(j) / out.prices.p(j);
  }
  out.utilities = utilities(instance, out.allocation);
  out.surpluses = Eigen::VectorXd::Zero(instance.n_services());
  return out;
}

BidMatrix propdyn_step(const MarketInstance& instance, const BidMatrix& bids) {
  check_bids(instance, bids);
  const Eigen::VectorXd prices = bids.b.colwise().sum().transpose();
  for (Eigen::Index j = 0; j < prices.size(); ++j) {
    if (!(prices(j) > 0.0)) {
      std::ostringstream os;
      os << "EN " << j << " received no bids";
      throw StalledEnError(os.str());
    }
  }
  // u_ij = a_ij * b_ij / p_j
  const Eigen::ArrayXXd gains =
      instance.valuations().array() * (bids.b.array().rowwise() / prices.transpose().array());
  const Eigen::ArrayXd totals = gains.rowwise().sum();
  if ((totals <= 0.0).any()) {
    throw DegenerateAllocationError("a service receives zero utility from its bids");
  }
  BidMatrix next;
  next.b = (gains.colwise() * (instance.budgets().array() / totals)).matrix();
  // Off-support bids decay geometrically; once subnormal they are worth
  // nothing at double precision but make every later step far slower.
  next.b = (next.b.array() < std::numeric_limits<double>::min()).select(0.0, next.b);
  return next;
}

DynamicsResult propdyn_run(const MarketInstance& instance, const PropDynOptions& opts) {
  if (!(opts.tol > 0.0) || opts.max_iters < 1 || !(opts.damping > 0.0) || opts.damping > 1.0) {
    throw ConfigError("propdyn needs tol > 0, max_iters >= 1 and damping in (0, 1]");
  }
  BidMatrix bids = opts.initial_bids ? *opts.initial_bids : uniform_bids(instance);
  check_bids(instance, bids);
  const Eigen::VectorXd row_sums = bids.b.rowwise().sum();
  if (((row_sums - instance.budgets()).array().abs() >
       tol::num * instance.budgets().array().max(1.0))
          .any()) {
    throw ConfigError("initial bids must spend exactly each service's budget");
  }

  DynamicsResult result;
  Eigen::VectorXd previous = bids.b.colwise().sum().transpose();
  for (int t = 1; t <= opts.max_iters; ++t) {
    BidMatrix next = propdyn_step(instance, bids);
    if (opts.damping < 1.0) next.b = (1.0 - opts.damping) * bids.b + opts.damping * next.b;
    bids = std::move(next);
    const Eigen::VectorXd prices = bids.b.colwise().sum().transpose();
    const double change = max_relative_change(prices, previous);
    if (opts.record_trace) {
      result.trace.record(t, prices, change);
      if (opts.record_bids) result.trace.bids.push_back(bids.b);
    }
    if (change < opts.tol) {
      result.solution = solution_from_bids(instance, bids, SolveMethod::propdyn);
      result.solution.iterations = t;
      result.solution.converged = true;
      return result;
    }
    previous = prices;
  }
  auto best = solution_from_bids(instance, bids, SolveMethod::propdyn);
  best.iterations = opts.max_iters;
  const auto report = kkt_certificate(instance, best);
  throw NonConvergenceError("proportional response did not settle within max_iters",
                            std::move(best), report, std::move(result.trace));
}

Eigen::VectorXd ces_demand(const MarketInstance& instance, const PriceVector& prices,
                           Eigen::Index service, double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("CES exponent rho must lie in (0, 1)");
  check_shape(instance, prices);
  if (service < 0 || service >= instance.n_services()) {
    throw DimensionError("service index out of range");
  }
  if ((prices.p.array() <= 0.0).any()) throw InvalidPriceError("CES demand needs positive prices");

  const double k = rho / (1.0 - rho);
  const auto a = instance.valuations().row(service);
  const Eigen::Index m = instance.n_ens();
  Eigen::VectorXd log_weight(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    log_weight(j) = a(j) > 0.0 ? k * (std::log(a(j)) - std::log(prices.p(j)))
                               : -std::numeric_limits<double>::infinity();
  }
  const double top = log_weight.maxCoeff();
  Eigen::VectorXd share = (log_weight.array() - top).exp().matrix();
  share /= share.sum();
  return (instance.budgets()(service) * share.array() / prices.p.array()).matrix();
}

double ces_utility(const Eigen::Ref<const Eigen::VectorXd>& valuations,
                   const Eigen::Ref<const Eigen::VectorXd>& bundle, double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("CES exponent rho must lie in (0, 1)");
  return std::pow((valuations.array() * bundle.array()).pow(rho).sum(), 1.0 / rho);
}

DynamicsResult ces_dual_decomposition(const MarketInstance& instance, const CesOptions& opts) {
  if (!(opts.rho > 0.0 && opts.rho < 1.0)) throw ConfigError("CES exponent rho must lie in (0, 1)");
  if (!(opts.step > 0.0)) throw ConfigError("price step must be positive");
  if (!(opts.tol > 0.0) || opts.max_iters < 1) throw ConfigError("invalid CES stopping rule");

  const Eigen::Index n = instance.n_services();
  const Eigen::Index m = instance.n_ens();
  PriceVector prices;
  if (opts.initial_prices) {
    prices = *opts.initial_prices;
    check_shape(instance, prices);
  } else {
    prices.p = Eigen::VectorXd::Constant(m, opts.p0);
  }
  if ((prices.p.array() <= 0.0).any()) throw ConfigError("initial prices must be positive");

  const double total_budget = instance.total_budget();
  const double floor = 1e-12 * total_budget / static_cast<double>(m);
  const double blow_up = 1e3 * total_budget;

  DynamicsResult result;
  Eigen::MatrixXd demand(n, m);
  auto fill_demand = [&] {
    for (Eigen::Index i = 0; i < n; ++i) {
      demand.row(i) = ces_demand(instance, prices, i, opts.rho).transpose();
    }
  };

  bool converged = false;
  int t = 0;
  while (t < opts.max_iters) {
    fill_demand();
    const Eigen::VectorXd excess = demand.colwise().sum().transpose().array() - 1.0;
    const double step = opts.diminishing_step ? opts.step / std::sqrt(static_cast<double>(t + 1))
                                              : opts.step;
    // Excess demand raises the price.
    const Eigen::VectorXd next = (prices.p + step * excess).cwiseMax(floor);
    ++t;
    if (!next.allFinite() || next.norm() > blow_up) {
      std::ostringstream os;
      os << "price vector diverged at iteration " << t << " (step " << opts.step << ")";
      throw StepSizeError(os.str());
    }
    const double change = (next - prices.p).lpNorm<Eigen::Infinity>();
    prices.p = next;
    if (opts.record_trace) result.trace.record(t, prices.p, change);
    if (change < opts.tol) {
      converged = true;
      break;
    }
  }
  fill_demand();

  auto& sol = result.solution;
  sol.method = SolveMethod::ces;
  sol.prices = prices;
  sol.allocation.x = demand;
  sol.utilities = utilities(instance, sol.allocation);
  sol.surpluses = Eigen::VectorXd::Zero(n);
  sol.iterations = t;
  sol.converged = converged;
  if (!converged) {
    const auto report = kkt_certificate(instance, sol);
    throw NonConvergenceError("CES price adjustment did not settle within max_iters", sol,
                              report, std::move(result.trace));
  }
  return result;
}

double proportional_share_payoff(const Eigen::Ref<const Eigen::VectorXd>& valuations,
                                 const Eigen::Ref<const Eigen::VectorXd>& bids,
                                 const Eigen::Ref<const Eigen::VectorXd>& other_bids) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < valuations.size(); ++j) {
    const double denom = bids(j) + other_bids(j);
    if (denom > 0.0) total += valuations(j) * bids(j) / denom;
  }
  return total;
}

Eigen::VectorXd best_response(const MarketInstance& instance, Eigen::Index service,
                              const Eigen::Ref<const Eigen::VectorXd>& other_bids, double budget) {
  if (service < 0 || service >= instance.n_services()) {
    throw DimensionError("service index out of range");
  }
  if (other_bids.size() != instance.n_ens()) {
    throw DimensionError("opponent bid vector length does not match the number of ENs");
  }
  const Eigen::Index m = instance.n_ens();
  const Eigen::VectorXd a = instance.valuations().row(service).transpose();
  const Eigen::VectorXd y = other_bids.cwiseMax(kOpponentBidFloor);
  const double spend = std::max(0.0, budget);

  // 1. ENs by decreasing a_j / y_j.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index l, Eigen::Index r) { return a(l) / y(l) > a(r) / y(r); });

  // 2. Largest prefix length k whose last bid is non-negative.
  std::size_t best_k = 0;
  double root_sum = 0.0;
  double opponent_sum = 0.0;
  double best_root_sum = 0.0;
  double best_opponent_sum = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Eigen::Index j = order[k];
    const double root = std::sqrt(a(j) * y(j));
    root_sum += root;
    opponent_sum += y(j);
    if (root_sum > 0.0 && root / root_sum * (spend + opponent_sum) - y(j) >= 0.0) {
      best_k = k + 1;
      best_root_sum = root_sum;
      best_opponent_sum = opponent_sum;
    }
  }

  // 3. Closed-form bids on the first k ENs, zero elsewhere.
  Eigen::VectorXd bids = Eigen::VectorXd::Zero(m);
  for (std::size_t l = 0; l < best_k; ++l) {
    const Eigen::Index j = order[l];
    const double root = std::sqrt(a(j) * y(j));
    bids(j) = std::max(0.0, root / best_root_sum * (spend + best_opponent_sum) - y(j));
  }
  const double used = bids.sum();
  if (used > spend && used > 0.0) bids *= spend / used;
  return bids;
}

DynamicsResult propbr_run(const MarketInstance& instance, const PropBrOptions& opts) {
  if (!(opts.tol > 0.0) || opts.max_rounds < 1) throw ConfigError("invalid PropBR stopping rule");
  BidMatrix bids = opts.initial_bids ? *opts.initial_bids : uniform_bids(instance);
  check_bids(instance, bids);

  const double threshold = opts.tol * instance.total_budget();
  DynamicsResult result;
  // Recent end-of-round bids, newest last; a short cycle shows up as a match
  // with one of them at lag >= 2.
  std::deque<Eigen::MatrixXd> recent;
  int cycling_rounds = 0;
  for (int round = 1; round <= opts.max_rounds; ++round) {
    const Eigen::MatrixXd before = bids.b;
    for (Eigen::Index i = 0; i < instance.n_services(); ++i) {
      const Eigen::VectorXd others =
          bids.b.colwise().sum().transpose() - bids.b.row(i).transpose();
      bids.b.row(i) = best_response(instance, i, others, instance.budgets()(i)).transpose();
    }
    const double change = (bids.b - before).cwiseAbs().maxCoeff();
    if (opts.record_trace) result.trace.record(round, bids.b.colwise().sum().transpose(), change);

    if (change < threshold) {
      result.solution = solution_from_bids(instance, bids, SolveMethod::propbr);
      result.solution.iterations = round;
      result.solution.converged = true;
      return result;
    }
    bool repeats = false;
    for (std::size_t lag = 2; lag <= recent.size() && !repeats; ++lag) {
      repeats = (bids.b - recent[recent.size() - lag]).cwiseAbs().maxCoeff() < threshold;
    }
    cycling_rounds = repeats ? cycling_rounds + 1 : 0;
    if (cycling_rounds >= 3) {
      result.solution = solution_from_bids(instance, bids, SolveMethod::propbr);
      result.solution.iterations = round;
      result.solution.converged = false;
      return result;
    }
    recent.push_back(bids.b);
    if (recent.size() > kCycleMemory) recent.pop_front();
  }
  auto best = solution_from_bids(instance, bids, SolveMethod::propbr);
  best.iterations = opts.max_rounds;
  const auto report = kkt_certificate(instance, best);
  throw NonConvergenceError("best-response rounds did not settle within max_rounds",
                            std::move(best), report, std::move(result.trace));
}

}  // namespace edgemarket
