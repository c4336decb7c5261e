#include <doctest.h>

#include <edgemarket/dynamics.hpp>
#include <edgemarket/eg_core.hpp>

#include "test_support.hpp"

#include <algorithm>
#include <cmath>

using namespace edgemarket;
using testsupport::vec;

namespace {

BidMatrix six_equilibrium_bids() {
  BidMatrix b;
  b.b = Eigen::MatrixXd(2, 3);
  b.b << 0, 1, 0, 1, 1, 2;
  return b;
}

// Best bid split of one buyer over two ENs, by grid search on the budget.
std::pair<Eigen::VectorXd, double> grid_best_response_2(const Eigen::VectorXd& a,
                                                        const Eigen::VectorXd& y, double budget,
                                                        int steps) {
  Eigen::VectorXd best(2);
  double best_value = -1;
  for (int k = 0; k <= steps; ++k) {
    const Eigen::VectorXd b = vec({budget * k / steps, budget * (steps - k) / steps});
    const double v = proportional_share_payoff(a, b, y);
    if (v > best_value) {
      best_value = v;
      best = b;
    }
  }
  return {best, best_value};
}

double grid_best_payoff_3(const Eigen::VectorXd& a, const Eigen::VectorXd& y, double budget,
                          int steps) {
  double best = -1;
  for (int k = 0; k <= steps; ++k) {
    for (int l = 0; k + l <= steps; ++l) {
      const Eigen::VectorXd b =
          vec({budget * k / steps, budget * l / steps, budget * (steps - k - l) / steps});
      best = std::max(best, proportional_share_payoff(a, b, y));
    }
  }
  return best;
}

}  // namespace

TEST_CASE("the worked equilibrium is a fixed point of proportional response") {
  const auto inst = testsupport::six();
  const auto bids = six_equilibrium_bids();
  const auto next = propdyn_step(inst, bids);
  CHECK((next.b - bids.b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("a single buyer converges in one step") {
  const MarketInstance inst(vec({3}), Eigen::RowVector3d(1, 2, 5));
  BidMatrix bids;
  bids.b = Eigen::RowVector3d(0.2, 2.5, 0.3);
  const auto next = propdyn_step(inst, bids);
  CHECK(next.b.isApprox(Eigen::RowVector3d(3.0 / 8, 6.0 / 8, 15.0 / 8)));
  PropDynOptions o;
  const auto run = propdyn_run(inst, o);
  CHECK(run.solution.iterations <= 2);
  CHECK(run.solution.converged);
}

TEST_CASE("uniform bids are a fixed point on a symmetric market") {
  const MarketInstance inst(vec({1, 1}), Eigen::MatrixXd::Constant(2, 2, 3.0));
  const auto bids = uniform_bids(inst);
  CHECK(propdyn_step(inst, bids).b.isApprox(bids.b));
}

TEST_CASE("proportional response keeps budgets and total price exact") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = testsupport::random_instance(rng, 8, 8);
    BidMatrix bids = uniform_bids(inst);
    for (int t = 0; t < 20; ++t) {
      bids = propdyn_step(inst, bids);
      CHECK((bids.b.rowwise().sum() - inst.budgets()).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(bids.b.sum() == doctest::Approx(inst.total_budget()).epsilon(1e-12));
      CHECK(bids.b.minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("an EN without bids stalls proportional response") {
  const auto inst = testsupport::six();
  BidMatrix bids;
  bids.b = Eigen::MatrixXd(2, 3);
  bids.b << 0.5, 0.5, 0, 2, 2, 0;
  CHECK_THROWS_AS((void)propdyn_step(inst, bids), StalledEnError);
}

TEST_CASE("proportional response reaches the worked equilibrium") {
  const auto inst = testsupport::six();
  const auto run = propdyn_run(inst);
  CHECK(run.solution.converged);
  CHECK((run.solution.prices.p - vec({1, 2, 2})).lpNorm<Eigen::Infinity>() < 1e-6);
  CHECK(run.trace.consistent());
  CHECK(run.trace.size() == static_cast<std::size_t>(run.solution.iterations));
  CHECK(run.trace.residuals.back() < 1e-8);
}

TEST_CASE("proportional response on the base case settles in a few dozen iterations") {
  const auto inst = testsupport::load("base_case.json");
  PropDynOptions o;
  o.tol = 1e-4;
  const auto run = propdyn_run(inst, o);
  CHECK(run.solution.iterations < 500);
}

TEST_CASE("proportional response iteration cap carries the trace") {
  std::mt19937_64 rng(32);
  const auto inst = testsupport::dense_instance(rng, 5, 5);
  PropDynOptions o;
  o.max_iters = 3;
  o.record_bids = true;
  try {
    (void)propdyn_run(inst, o);
    FAIL("expected NonConvergenceError");
  } catch (const NonConvergenceError& e) {
    CHECK(e.trace().size() == 3);
    CHECK(e.trace().bids.size() == 3);
    CHECK(e.trace().consistent());
  }
}

TEST_CASE("CES demand closed form") {
  const MarketInstance one(vec({2.5}), Eigen::MatrixXd::Constant(1, 1, 4.0));
  for (double rho : {0.1, 0.5, 0.99}) {
    CHECK(ces_demand(one, PriceVector{vec({0.5})}, 0, rho)(0) == doctest::Approx(5.0));
  }
  const MarketInstance sym(vec({1}), Eigen::RowVector2d(2, 2));
  for (double rho : {0.2, 0.9, 0.999}) {
    CHECK(ces_demand(sym, PriceVector{vec({1, 1})}, 0, rho).isApprox(vec({0.5, 0.5})));
  }
  const auto six = testsupport::six();
  const Eigen::VectorXd p = vec({1, 2, 2});
  const Eigen::VectorXd x = ces_demand(six, PriceVector{p}, 1, 0.99);
  CHECK(std::abs(p.dot(x) - 4.0) < 1e-12);
  CHECK_THROWS_AS((void)ces_demand(six, PriceVector{p}, 0, 1.0), ConfigError);
  CHECK_THROWS_AS((void)ces_demand(six, PriceVector{p}, 0, 0.0), ConfigError);
  CHECK_THROWS_AS((void)ces_demand(six, PriceVector{vec({1, 0, 2})}, 0, 0.5), InvalidPriceError);
}

TEST_CASE("CES demand matches the explicit formula and spends the budget") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = testsupport::random_instance(rng, 3, 6);
    Eigen::VectorXd p(inst.n_ens());
    for (Eigen::Index j = 0; j < p.size(); ++j) p(j) = testsupport::uniform(rng, 0.2, 3);
    const double rho = testsupport::uniform(rng, 0.05, 0.9);
    const Eigen::VectorXd x = ces_demand(inst, PriceVector{p}, 0, rho);
    const auto a = inst.valuations().row(0);
    const double b = inst.budgets()(0);
    double denom = 0;
    for (Eigen::Index k = 0; k < p.size(); ++k) denom += std::pow(a(k) / p(k), rho / (1 - rho));
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      const double want = std::pow(std::pow(a(j), rho) / p(j), 1 / (1 - rho)) * b / denom;
      CHECK(x(j) == doctest::Approx(want).epsilon(1e-9));
    }
    CHECK(std::abs(p.dot(x) - b) <= 1e-10 * b);
  }
}

TEST_CASE("CES demand is a stationary point of B ln U - p.x") {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = testsupport::dense_instance(rng, 1, 4);
    Eigen::VectorXd p(4);
    for (int j = 0; j < 4; ++j) p(j) = testsupport::uniform(rng, 0.2, 3);
    const double rho = testsupport::uniform(rng, 0.1, 0.9);
    const Eigen::VectorXd x = ces_demand(inst, PriceVector{p}, 0, rho);
    const Eigen::VectorXd a = inst.valuations().row(0).transpose();
    const double b = inst.budgets()(0);
    for (int j = 0; j < 4; ++j) {
      auto f = [&](double v) {
        Eigen::VectorXd y = x;
        y(j) = v;
        return b * std::log(ces_utility(a, y, rho)) - p.dot(y);
      };
      const double h = 1e-5 * x(j);
      CHECK(std::abs(testsupport::central_difference(f, x(j), h)) < 1e-5 * p(j));
    }
  }
}

TEST_CASE("CES price adjustment on the worked example") {
  const auto inst = testsupport::six();
  CesOptions o;
  o.rho = 0.99;
  o.step = 0.001;
  o.p0 = 0.2;
  const auto run = ces_dual_decomposition(inst, o);
  CHECK(run.solution.converged);
  CHECK((run.solution.prices.p - vec({1, 2, 2})).lpNorm<Eigen::Infinity>() < 1e-2);
  CHECK(run.trace.consistent());
  // Demand spends each budget exactly at the final prices.
  CHECK(((run.solution.allocation.x * run.solution.prices.p) - inst.budgets())
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("CES prices are equal on a symmetric market") {
  const MarketInstance inst(vec({1, 1}), Eigen::MatrixXd::Constant(2, 2, 1.0));
  const auto run = ces_dual_decomposition(inst);
  CHECK(run.solution.prices.p(0) == doctest::Approx(run.solution.prices.p(1)).epsilon(1e-12));
  CHECK(run.solution.prices.p(0) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("CES diminishing step also settles") {
  const auto inst = testsupport::six();
  CesOptions o;
  o.rho = 0.5;
  o.step = 0.5;
  o.diminishing_step = true;
  o.tol = 1e-7;
  const auto run = ces_dual_decomposition(inst, o);
  CHECK(run.solution.converged);
  CHECK((run.solution.allocation.x.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-3);
}

TEST_CASE("an oversized CES step is reported as divergence") {
  const auto inst = testsupport::six();
  CesOptions o;
  o.step = 1e6;
  CHECK_THROWS_AS((void)ces_dual_decomposition(inst, o), StepSizeError);
  o = {};
  o.step = -1;
  CHECK_THROWS_AS((void)ces_dual_decomposition(inst, o), ConfigError);
}

TEST_CASE("best response on a single EN spends the whole budget") {
  const MarketInstance inst(vec({2}), Eigen::MatrixXd::Constant(1, 1, 5.0));
  const Eigen::VectorXd b = best_response(inst, 0, vec({3}), 2.0);
  CHECK(b(0) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("best response on two ENs matches the grid oracle") {
  const MarketInstance inst(vec({1, 1}), Eigen::Matrix2d{{4, 1}, {1, 1}});
  const Eigen::VectorXd y = vec({1, 1});
  const Eigen::VectorXd b = best_response(inst, 0, y, 1.0);
  const auto [grid, grid_value] = grid_best_response_2(vec({4, 1}), y, 1.0, 1000);
  CHECK((b - grid).lpNorm<Eigen::Infinity>() <= 1e-3 + 1e-12);
  CHECK(proportional_share_payoff(vec({4, 1}), b, y) >= grid_value - 1e-12);
  CHECK(b.sum() <= 1.0 + 1e-12);
}

TEST_CASE("best response vanishes with the budget") {
  const auto inst = testsupport::six();
  CHECK(best_response(inst, 0, vec({1, 1, 1}), 0.0).isZero());
  CHECK(best_response(inst, 0, vec({1, 1, 1}), 1e-9).lpNorm<Eigen::Infinity>() <= 1e-9);
}

TEST_CASE("best response matches grid oracles on random 2- and 3-EN markets") {
  std::mt19937_64 rng(35);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = testsupport::dense_instance(rng, 1, 2);
    const Eigen::VectorXd a = inst.valuations().row(0).transpose();
    const Eigen::VectorXd y = vec({testsupport::uniform(rng, 0.05, 2), testsupport::uniform(rng, 0.05, 2)});
    const double budget = testsupport::uniform(rng, 0.1, 3);
    const Eigen::VectorXd b = best_response(inst, 0, y, budget);
    const auto [grid, grid_value] = grid_best_response_2(a, y, budget, 1000);
    CHECK((b - grid).lpNorm<Eigen::Infinity>() <= budget * 1e-3 * (1 + 1e-9));
    CHECK(proportional_share_payoff(a, b, y) >= grid_value - 1e-12);
  }
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = testsupport::dense_instance(rng, 1, 3);
    const Eigen::VectorXd a = inst.valuations().row(0).transpose();
    Eigen::VectorXd y(3);
    for (int j = 0; j < 3; ++j) y(j) = testsupport::uniform(rng, 0.05, 2);
    const double budget = testsupport::uniform(rng, 0.1, 3);
    const Eigen::VectorXd b = best_response(inst, 0, y, budget);
    CHECK(proportional_share_payoff(a, b, y) >= grid_best_payoff_3(a, y, budget, 300) - 1e-12);
    CHECK(b.sum() == doctest::Approx(budget).epsilon(1e-12));
  }
}

TEST_CASE("best response floors zero opponent bids") {
  const MarketInstance inst(vec({1}), Eigen::RowVector2d(1, 1));
  const Eigen::VectorXd b = best_response(inst, 0, vec({0, 1}), 1.0);
  CHECK(b.allFinite());
  CHECK(b.minCoeff() >= 0.0);
  CHECK(b(0) > 0.0);
  CHECK(b.sum() <= 1.0 + 1e-12);
}

TEST_CASE("two buyers on one EN bid their budgets in one round") {
  const MarketInstance inst(vec({1, 3}), Eigen::MatrixXd::Constant(2, 1, 2.0));
  const auto run = propbr_run(inst);
  CHECK(run.solution.converged);
  CHECK(run.solution.prices.p(0) == doctest::Approx(4.0));
  CHECK(run.solution.allocation.x(0, 0) == doctest::Approx(0.25));
  CHECK(run.solution.iterations <= 2);
}

TEST_CASE("best-response rounds are symmetric on a symmetric market") {
  const MarketInstance inst(vec({1, 1}), Eigen::Matrix2d{{2, 1}, {2, 1}});
  const auto run = propbr_run(inst);
  CHECK(run.solution.converged);
  CHECK(run.solution.allocation.x.row(0).isApprox(run.solution.allocation.x.row(1)));
}

TEST_CASE("best-response round cap is reported") {
  const auto inst = testsupport::load("golden_10x20.json");
  PropBrOptions o;
  o.max_rounds = 1;
  CHECK_THROWS_AS((void)propbr_run(inst, o), NonConvergenceError);
}

TEST_CASE("best responses leave most buyers below their market-equilibrium utility") {
  const auto inst = testsupport::load("golden_10x20.json");
  const auto br = propbr_run(inst);
  const auto pd = propdyn_run(inst);
  std::vector<double> ratios;
  for (Eigen::Index i = 0; i < inst.n_services(); ++i) {
    ratios.push_back(br.solution.utilities(i) / pd.solution.utilities(i));
  }
  std::sort(ratios.begin(), ratios.end());
  const double median = 0.5 * (ratios[4] + ratios[5]);
  CHECK(median <= 1.0);
}

TEST_CASE("proportional response keeps bids out of the subnormal range") {
  const MarketInstance inst(vec({1, 1}), Eigen::Matrix2d{{1, 0.5}, {0.5, 1}});
  BidMatrix bids;
  bids.b = Eigen::Matrix2d{{1 - 1e-300, 1e-300}, {1e-300, 1 - 1e-300}};
  for (int t = 0; t < 50; ++t) {
    bids = propdyn_step(inst, bids);
    for (Eigen::Index k = 0; k < bids.b.size(); ++k) {
      CHECK(std::fpclassify(bids.b.data()[k]) != FP_SUBNORMAL);
    }
  }
  CHECK(bids.b(0, 1) == 0.0);
  CHECK((bids.b.rowwise().sum() - inst.budgets()).cwiseAbs().maxCoeff() < 1e-15);
}
