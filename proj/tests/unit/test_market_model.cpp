#include <doctest.h>

#include <edgemarket/market_model.hpp>
#include <edgemarket/projection.hpp>

#include "test_support.hpp"

#include <cmath>
#include <limits>

using namespace edgemarket;
using testsupport::vec;

namespace {

MarketInstance two_by_two(double a11, double a12, double a21, double a22) {
  Eigen::MatrixXd a(2, 2);
  a << a11, a12, a21, a22;
  return {vec({1, 1}), a};
}

}  // namespace

TEST_CASE("instance construction rejects invalid markets") {
  Eigen::MatrixXd a(2, 2);
  a << 1, 0, 0, 1;
  CHECK_NOTHROW(MarketInstance(vec({1, 2}), a));
  CHECK_THROWS_AS(MarketInstance(vec({1, 0}), a), InvalidInstanceError);
  CHECK_THROWS_AS(MarketInstance(vec({1, -2}), a), InvalidInstanceError);
  CHECK_THROWS_AS(MarketInstance(vec({1, std::nan("")}), a), InvalidInstanceError);
  CHECK_THROWS_AS(MarketInstance(vec({1}), a), DimensionError);

  Eigen::MatrixXd negative = a;
  negative(0, 1) = -0.5;
  CHECK_THROWS_AS(MarketInstance(vec({1, 1}), negative), InvalidInstanceError);

  Eigen::MatrixXd dead_row(2, 2);
  dead_row << 1, 1, 0, 0;
  CHECK_THROWS_AS(MarketInstance(vec({1, 1}), dead_row), InvalidInstanceError);

  Eigen::MatrixXd dead_col(2, 2);
  dead_col << 1, 0, 1, 0;
  CHECK_THROWS_AS(MarketInstance(vec({1, 1}), dead_col), InvalidInstanceError);

  CHECK_THROWS_AS(MarketInstance(vec({1, 1}), a, "", {1.0}), DimensionError);
  CHECK_THROWS_AS(MarketInstance(Eigen::VectorXd(0), Eigen::MatrixXd(0, 0)), InvalidInstanceError);
}

TEST_CASE("budget rescaling keeps valuations and metadata") {
  const MarketInstance inst(vec({1, 3}), Eigen::MatrixXd::Ones(2, 2), "tag", {5, 7});
  const auto norm = inst.with_normalized_budgets();
  CHECK(norm.budgets()(0) == doctest::Approx(0.25));
  CHECK(norm.budgets()(1) == doctest::Approx(0.75));
  CHECK(norm.label() == "tag");
  CHECK(norm.raw_capacity() == std::vector<double>{5, 7});
  CHECK_THROWS_AS((void)inst.with_budgets(vec({1, 0})), InvalidInstanceError);
}

TEST_CASE("utility of the worked example and simple bundles") {
  const auto inst = testsupport::six();
  Allocation alloc{Eigen::MatrixXd::Zero(2, 3)};
  alloc.x(0, 1) = 0.5;
  CHECK(utility(inst, alloc, 0) == doctest::Approx(5.0));

  CHECK(utility(inst, Allocation{Eigen::MatrixXd::Zero(2, 3)}, 1) == 0.0);

  const auto small = two_by_two(2, 3, 1, 1);
  Allocation x{Eigen::MatrixXd::Zero(2, 2)};
  x.x(0, 0) = 0.25;
  x.x(0, 1) = 0.5;
  CHECK(utility(small, x, 0) == doctest::Approx(2.0));

  CHECK_THROWS_AS((void)utility(inst, Allocation{Eigen::MatrixXd::Zero(3, 3)}, 0), DimensionError);
  CHECK_THROWS_AS((void)utility(inst, alloc, 2), DimensionError);
}

TEST_CASE("utility is additive and positively homogeneous") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = testsupport::random_instance(rng, 6, 6);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(inst.n_services(), inst.n_ens()).cwiseAbs();
    const Eigen::MatrixXd y = Eigen::MatrixXd::Random(inst.n_services(), inst.n_ens()).cwiseAbs();
    const double scale = testsupport::uniform(rng, 0, 3);
    for (Eigen::Index i = 0; i < inst.n_services(); ++i) {
      const double ux = utility(inst, {x}, i);
      const double uy = utility(inst, {y}, i);
      CHECK(utility(inst, {x + y}, i) == doctest::Approx(ux + uy).epsilon(1e-12));
      CHECK(utility(inst, {scale * x}, i) == doctest::Approx(scale * ux).epsilon(1e-12));
    }
  }
}

TEST_CASE("mbb demand sets of the worked example") {
  const auto inst = testsupport::six();
  const PriceVector p{vec({1, 2, 2})};
  const auto first = mbb(inst, p, 0);
  CHECK(first.alpha == doctest::Approx(5.0));
  CHECK(first.demand_set == std::vector<Eigen::Index>{1});
  const auto second = mbb(inst, p, 1);
  CHECK(second.alpha == doctest::Approx(4.0));
  CHECK(second.demand_set == std::vector<Eigen::Index>{0, 1, 2});

  const auto sym = two_by_two(3, 3, 1, 2);
  const auto tie = mbb(sym, PriceVector{vec({1, 1})}, 0);
  CHECK(tie.alpha == doctest::Approx(3.0));
  CHECK(tie.demand_set == std::vector<Eigen::Index>{0, 1});

  CHECK_THROWS_AS((void)mbb(inst, PriceVector{vec({1, 0, 2})}, 0), InvalidPriceError);
  CHECK_THROWS_AS((void)mbb(inst, PriceVector{vec({1, 2})}, 0), DimensionError);
}

TEST_CASE("mbb demand sets are scale-free in each row") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = testsupport::random_instance(rng, 5, 6);
    Eigen::VectorXd p(inst.n_ens());
    for (Eigen::Index j = 0; j < p.size(); ++j) p(j) = testsupport::uniform(rng, 0.1, 2.0);
    const Eigen::Index i = 0;
    const double e = testsupport::uniform(rng, 0.01, 100.0);
    Eigen::MatrixXd scaled = inst.valuations();
    scaled.row(i) *= e;
    const MarketInstance other(inst.budgets(), scaled);
    const auto base = mbb(inst, {p}, i);
    const auto moved = mbb(other, {p}, i);
    CHECK(moved.demand_set == base.demand_set);
    CHECK(moved.alpha == doctest::Approx(e * base.alpha).epsilon(1e-12));
  }
}

TEST_CASE("solve method names round-trip") {
  for (auto m : {SolveMethod::eg, SolveMethod::eg_projected_gradient, SolveMethod::propdyn,
                 SolveMethod::ces, SolveMethod::propbr, SolveMethod::netprofit,
                 SolveMethod::baseline}) {
    const auto parsed = parse_solve_method(to_string(m));
    REQUIRE(parsed.has_value());
    CHECK(*parsed == m);
  }
  CHECK_FALSE(parse_solve_method("simplex").has_value());
}

TEST_CASE("certificate pass rule scales money and gap") {
  CertificateReport r;
  r.budget_slack = 5e-7 * 10.0;
  CHECK(r.passes(1e-6, 10.0));
  CHECK_FALSE(r.passes(1e-6, 1.0));
  r.budget_slack = 0;
  r.duality_gap = 5e-6;
  CHECK(r.passes(1e-6, 1.0, 10.0));
  CHECK_FALSE(r.passes(1e-6, 1.0, 1.0));
  r.duality_gap = 0;
  r.mbb_violation = 2e-6;
  CHECK_FALSE(r.passes(1e-6));
}

TEST_CASE("capped simplex projection matches a bisection oracle") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 12)(rng);
    Eigen::VectorXd v(n);
    for (int k = 0; k < n; ++k) v(k) = testsupport::uniform(rng, -1.0, 1.5);
    const Eigen::VectorXd got = project_capped_simplex(v);
    const Eigen::VectorXd want = testsupport::bisection_capped_simplex(v);
    CHECK((got - want).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK(got.minCoeff() >= 0.0);
    CHECK(got.sum() <= 1.0 + 1e-12);
  }
  CHECK(project_capped_simplex(vec({0.2, -1.0, 0.3})).isApprox(vec({0.2, 0.0, 0.3})));
  CHECK(project_capped_simplex(vec({2.0, 2.0})).isApprox(vec({0.5, 0.5})));
}

TEST_CASE("capped simplex projection is exact for huge shifted inputs") {
  const Eigen::VectorXd v = Eigen::VectorXd::Constant(3, 1e17) + testsupport::vec({0.5, 0, 0});
  const Eigen::VectorXd x = project_capped_simplex(v);
  CHECK(x.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(x.minCoeff() >= 0.0);
  CHECK(project_capped_simplex(Eigen::VectorXd::Constant(4, 1e16)).isApprox(Eigen::VectorXd::Constant(4, 0.25)));
}

TEST_CASE("column projection caps every column") {
  Eigen::MatrixXd x(2, 3);
  x << 0.8, -0.2, 0.3, 0.8, 0.4, 0.3;
  project_columns_capped_simplex(x);
  CHECK(x.col(0).isApprox(vec({0.5, 0.5})));
  CHECK(x.col(1).isApprox(vec({0.0, 0.4})));
  CHECK(x.col(2).isApprox(vec({0.3, 0.3})));
}
