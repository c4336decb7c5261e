#include <doctest.h>

#include <edgemarket/eg_core.hpp>
#include <edgemarket/scenario.hpp>

#include "test_support.hpp"

#include <cmath>

using namespace edgemarket;
using testsupport::vec;

namespace {

EquilibriumSolution six_equilibrium() {
  EquilibriumSolution s;
  s.allocation.x = testsupport::six_allocation();
  s.prices.p = vec({1, 2, 2});
  s.utilities = vec({5, 16});
  s.surpluses = vec({0, 0});
  s.converged = true;
  return s;
}

EgOptions with_engine(EgEngine engine) {
  EgOptions o;
  o.engine = engine;
  return o;
}

}  // namespace

TEST_CASE("both engines reproduce the worked example") {
  const auto inst = testsupport::six();
  for (auto engine : {EgEngine::proportional_response, EgEngine::projected_gradient}) {
    const auto sol = solve_eg(inst, with_engine(engine));
    CHECK(sol.converged);
    CHECK((sol.prices.p - vec({1, 2, 2})).lpNorm<Eigen::Infinity>() < 1e-9);
    CHECK((sol.utilities - vec({5, 16})).lpNorm<Eigen::Infinity>() < 1e-9);
    CHECK(sol.surpluses.isZero());
    CHECK(kkt_certificate(inst, sol).passes(1e-9, 4.0, eg_objective(inst, sol.allocation)));
  }
}

TEST_CASE("solutions clear the market, exhaust budgets and buy only MBB") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const auto inst = testsupport::random_instance(rng, 8, 8);
    const auto sol = solve_eg(inst);
    const auto& x = sol.allocation.x;
    const auto& p = sol.prices.p;
    CHECK((x.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-8);
    CHECK(((x * p) - inst.budgets()).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(p.sum() == doctest::Approx(inst.total_budget()).epsilon(1e-9));
    for (Eigen::Index i = 0; i < inst.n_services(); ++i) {
      const auto best = mbb(inst, sol.prices, i);
      for (Eigen::Index j = 0; j < inst.n_ens(); ++j) {
        if (x(i, j) > 1e-8) CHECK(inst.valuations()(i, j) / p(j) >= (1 - 1e-8) * best.alpha);
      }
    }
  }
}

TEST_CASE("equilibrium utilities do not depend on the engine") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = testsupport::random_instance(rng, 7, 7);
    const auto a = solve_eg(inst, with_engine(EgEngine::proportional_response));
    const auto b = solve_eg(inst, with_engine(EgEngine::projected_gradient));
    CHECK(((a.utilities - b.utilities).array().abs() / a.utilities.array()).maxCoeff() < 1e-6);
    CHECK(((a.prices.p - b.prices.p).array().abs() / a.prices.p.array()).maxCoeff() < 1e-6);
  }
}

TEST_CASE("scaling a valuation row scales utilities and keeps prices") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = testsupport::random_instance(rng, 6, 6);
    const double e = testsupport::uniform(rng, 0.1, 10);
    Eigen::MatrixXd a = inst.valuations();
    a.row(0) *= e;
    const MarketInstance scaled(inst.budgets(), a);
    const auto base = solve_eg(inst);
    const auto moved = solve_eg(scaled);
    CHECK(moved.utilities(0) == doctest::Approx(e * base.utilities(0)).epsilon(1e-7));
    CHECK(((moved.prices.p - base.prices.p).array().abs() / base.prices.p.array()).maxCoeff() <
          1e-7);
  }
}

TEST_CASE("splitting a budget into two identical services changes nothing in aggregate") {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = testsupport::random_instance(rng, 5, 6);
    const Eigen::Index n = inst.n_services();
    Eigen::MatrixXd a(n + 1, inst.n_ens());
    a.topRows(n) = inst.valuations();
    a.row(n) = inst.valuations().row(0);
    Eigen::VectorXd b(n + 1);
    b.head(n) = inst.budgets();
    const double share = testsupport::uniform(rng, 0.2, 0.8);
    b(0) = share * inst.budgets()(0);
    b(n) = (1 - share) * inst.budgets()(0);
    const auto whole = solve_eg(inst);
    const auto split = solve_eg(MarketInstance(b, a));
    CHECK(((split.prices.p - whole.prices.p).array().abs() / whole.prices.p.array()).maxCoeff() <
          1e-7);
    const Eigen::RowVectorXd merged = split.allocation.x.row(0) + split.allocation.x.row(n);
    CHECK(inst.valuations().row(0).dot(merged) ==
          doctest::Approx(whole.utilities(0)).epsilon(1e-7));
  }
}

TEST_CASE("objective matches a grid oracle on 2x2 markets") {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = testsupport::dense_instance(rng, 2, 2);
    const auto sol = solve_eg(inst);
    const double grid = testsupport::grid_eg_2x2(inst, 1e-3);
    const double got = eg_objective(inst, sol.allocation);
    CHECK(got >= grid - 1e-12);
    CHECK(got - grid < 1e-4);
  }
}

TEST_CASE("budget normalization keeps utilities and rescales prices") {
  const auto inst = testsupport::six();
  EgOptions o;
  o.normalize_budgets = true;
  const auto norm = solve_eg(inst, o);
  CHECK((norm.utilities - vec({5, 16})).lpNorm<Eigen::Infinity>() < 1e-9);
  CHECK((norm.prices.p - vec({0.2, 0.4, 0.4})).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("an exhausted iteration budget reports the best iterate") {
  std::mt19937_64 rng(26);
  const auto inst = testsupport::dense_instance(rng, 6, 6);
  EgOptions o;
  o.max_iters = 2;
  try {
    (void)solve_eg(inst, o);
    FAIL("expected NonConvergenceError");
  } catch (const NonConvergenceError& e) {
    CHECK(e.best_iterate().allocation.x.rows() == 6);
    CHECK_FALSE(e.best_iterate().converged);
    CHECK(e.certificate().max_kkt_residual > 0.0);
  }
  o.max_iters = 0;
  CHECK_THROWS_AS((void)solve_eg(inst, o), ConfigError);
}

TEST_CASE("certificate of the exact worked example") {
  const auto inst = testsupport::six();
  const auto r = kkt_certificate(inst, six_equilibrium());
  CHECK(r.max_kkt_residual <= 1e-9);
  CHECK(std::abs(r.duality_gap) <= 1e-9);
  CHECK(r.clearing_slack <= 1e-9);
  CHECK(r.budget_slack <= 1e-9);
  CHECK(r.mbb_violation <= 1e-9);
}

TEST_CASE("perturbed prices break budget exhaustion") {
  const auto inst = testsupport::six();
  auto s = six_equilibrium();
  s.prices.p.array() += 0.01;
  const auto r = kkt_certificate(inst, s);
  CHECK(r.budget_slack >= 0.01 * s.allocation.x.row(0).sum() - 1e-15);
}

TEST_CASE("feasible non-equilibrium allocations violate MBB") {
  std::mt19937_64 rng(27);
  int checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = testsupport::dense_instance(rng, 2, 2);
    const auto eq = solve_eg(inst);
    EquilibriumSolution s;
    s.allocation.x = Eigen::MatrixXd(2, 2);
    const double t = testsupport::uniform(rng, 0.05, 0.95);
    const double r = testsupport::uniform(rng, 0.05, 0.95);
    s.allocation.x << t, r, 1 - t, 1 - r;
    s.utilities = utilities(inst, s.allocation);
    if ((s.utilities - eq.utilities).cwiseAbs().maxCoeff() < 1e-3) continue;
    s.surpluses = Eigen::VectorXd::Zero(2);
    s.prices = eq.prices;
    // Direct evaluation of max(0, a_ij B_i / u_i - p_j) / p_j.
    double oracle = 0.0;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        const double want = inst.valuations()(i, j) * inst.budgets()(i) / s.utilities(i);
        oracle = std::max(oracle, (want - s.prices.p(j)) / s.prices.p(j));
      }
    }
    const auto rep = kkt_certificate(inst, s);
    CHECK(rep.mbb_violation > 0.0);
    CHECK(rep.mbb_violation == doctest::Approx(oracle).epsilon(1e-12));
    ++checked;
  }
  CHECK(checked > 40);
}

TEST_CASE("dual value equals the primal at the worked equilibrium") {
  const auto inst = testsupport::six();
  const PriceVector p{vec({1, 2, 2})};
  const double primal = std::log(5.0) + 4.0 * std::log(16.0);
  CHECK(dual_value(inst, p, vec({1.0 / 5.0, 1.0 / 4.0})) == doctest::Approx(primal).epsilon(1e-12));
  CHECK(eg_objective(inst, Allocation{testsupport::six_allocation()}) ==
        doctest::Approx(primal).epsilon(1e-12));
  CHECK(dual_value(inst, p, vec({0.1, 0.125})) > primal + 1e-3);
  const Eigen::VectorXd eta = best_dual_eta(inst, p);
  CHECK(eta.isApprox(vec({0.2, 0.25})));
}

TEST_CASE("weak duality holds for random feasible points") {
  std::mt19937_64 rng(28);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = testsupport::random_instance(rng, 6, 6);
    Eigen::VectorXd p(inst.n_ens());
    for (Eigen::Index j = 0; j < p.size(); ++j) p(j) = testsupport::uniform(rng, 0.1, 3);
    const Eigen::VectorXd eta = best_dual_eta(inst, {p}) * testsupport::uniform(rng, 0.3, 1.0);
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(inst.n_services(), inst.n_ens()).cwiseAbs();
    for (Eigen::Index j = 0; j < x.cols(); ++j) x.col(j) /= std::max(1.0, x.col(j).sum());
    const double primal = eg_objective(inst, {x});
    if (!std::isfinite(primal)) continue;
    CHECK(dual_value(inst, {p}, eta) >= primal - 1e-9);
  }
}

TEST_CASE("infeasible dual points name the violated pairs") {
  const auto inst = testsupport::six();
  try {
    (void)dual_value(inst, PriceVector{vec({1, 1, 2})}, vec({0.2, 0.25}));
    FAIL("expected FeasibilityError");
  } catch (const FeasibilityError& e) {
    const auto& pairs = e.violated_pairs();
    CHECK(std::find(pairs.begin(), pairs.end(), std::make_pair(Eigen::Index{0}, Eigen::Index{1})) !=
          pairs.end());
    CHECK(std::find(pairs.begin(), pairs.end(), std::make_pair(Eigen::Index{1}, Eigen::Index{1})) !=
          pairs.end());
  }
  CHECK_THROWS_AS((void)dual_value(inst, PriceVector{vec({1, 2, 2})}, vec({0.2, -1})),
                  FeasibilityError);
}

TEST_CASE("price recovery follows the max bang-per-buck rule") {
  const auto inst = testsupport::six();
  const auto p = recover_prices(inst, Allocation{testsupport::six_allocation()});
  CHECK(p.p.isApprox(vec({1, 2, 2})));
  Eigen::MatrixXd starve = Eigen::MatrixXd::Zero(2, 3);
  starve.row(1).setOnes();
  CHECK_THROWS_AS((void)recover_prices(inst, Allocation{starve}), DegenerateAllocationError);
}

TEST_CASE("the default engine certifies a larger generated market") {
  GenerationConfig config;
  config.n_services = 40;
  config.n_ens = 80;
  const auto inst = build_instance(generate(config, 1)).instance;
  const auto sol = solve_eg(inst);
  CHECK(sol.converged);
  CHECK(sol.method == SolveMethod::eg);
  const auto c = kkt_certificate(inst, sol);
  CHECK(c.passes(1e-6, 1.0, eg_objective(inst, sol.allocation)));
}
