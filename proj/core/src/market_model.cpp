#include <edgemarket/market_model.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace edgemarket {

namespace {

void validate(const Eigen::VectorXd& budgets, const Eigen::MatrixXd& valuations,
              const std::vector<double>& raw_capacity) {
  if (valuations.rows() == 0 || valuations.cols() == 0) {
    throw InvalidInstanceError("market needs at least one service and one EN");
  }
  if (budgets.size() != valuations.rows()) {
    std::ostringstream os;
    os << "budgets has " << budgets.size() << " entries but valuations has "
       << valuations.rows() << " rows";
    throw DimensionError(os.str());
  }
  if (!raw_capacity.empty() && static_cast<Eigen::Index>(raw_capacity.size()) != valuations.cols()) {
    throw DimensionError("raw_capacity length must match the number of ENs");
  }
  for (Eigen::Index i = 0; i < budgets.size(); ++i) {
    if (!std::isfinite(budgets(i)) || budgets(i) <= 0.0) {
      std::ostringstream os;
      os << "budget of service " << i << " must be positive and finite, got " << budgets(i);
      throw InvalidInstanceError(os.str());
    }
  }
  if (!valuations.allFinite() || (valuations.array() < 0.0).any()) {
    throw InvalidInstanceError("valuations must be finite and non-negative");
  }
  for (Eigen::Index i = 0; i < valuations.rows(); ++i) {
    if (!(valuations.row(i).array() > 0.0).any()) {
      std::ostringstream os;
      os << "service " << i << " values no EN";
      throw InvalidInstanceError(os.str());
    }
  }
  for (Eigen::Index j = 0; j < valuations.cols(); ++j) {
    if (!(valuations.col(j).array() > 0.0).any()) {
      std::ostringstream os;
      os << "EN " << j << " is valued by no service";
      throw InvalidInstanceError(os.str());
    }
  }
}

constexpr std::array<std::pair<SolveMethod, std::string_view>, 7> kMethodNames{{
    {SolveMethod::eg, "eg"},
    {SolveMethod::eg_projected_gradient, "eg-pg"},
    {SolveMethod::propdyn, "propdyn"},
    {SolveMethod::ces, "ces"},
    {SolveMethod::propbr, "propbr"},
    {SolveMethod::netprofit, "netprofit"},
    {SolveMethod::baseline, "baseline"},
}};

}  // namespace

MarketInstance::MarketInstance(Eigen::VectorXd budgets, Eigen::MatrixXd valuations,
                               std::string label, std::vector<double> raw_capacity)
    : budgets_(std::move(budgets)),
      valuations_(std::move(valuations)),
      label_(std::move(label)),
      raw_capacity_(std::move(raw_capacity)) {
  validate(budgets_, valuations_, raw_capacity_);
}

MarketInstance MarketInstance::with_budgets(Eigen::VectorXd budgets) const {
  return MarketInstance(std::move(budgets), valuations_, label_, raw_capacity_);
}

MarketInstance MarketInstance::with_normalized_budgets() const {
  return with_budgets(budgets_ / budgets_.sum());
}

std::string_view to_string(SolveMethod method) noexcept {
  for (const auto& [m, name] : kMethodNames) {
    if (m == method) return name;
  }
  return "unknown";
}

std::optional<SolveMethod> parse_solve_method(std::string_view name) noexcept {
  for (const auto& [m, n] : kMethodNames) {
    if (n == name) return m;
  }
  return std::nullopt;
}

bool CertificateReport::passes(double tolerance, double budget_scale,
                               double primal) const noexcept {
  const double budget_ref = std::max(1.0, budget_scale);
  const double gap_ref = std::max(1.0, std::abs(primal));
  return std::isfinite(max_kkt_residual) && max_kkt_residual <= tolerance &&
         clearing_slack <= tolerance && budget_slack <= tolerance * budget_ref &&
         mbb_violation <= tolerance && std::abs(duality_gap) <= tolerance * gap_ref;
}

void check_shape(const MarketInstance& instance, const Allocation& allocation) {
  if (allocation.x.rows() != instance.n_services() || allocation.x.cols() != instance.n_ens()) {
    std::ostringstream os;
    os << "allocation is " << allocation.x.rows() << "x" << allocation.x.cols()
       << ", instance is " << instance.n_services() << "x" << instance.n_ens();
    throw DimensionError(os.str());
  }
}

void check_shape(const MarketInstance& instance, const PriceVector& prices) {
  if (prices.p.size() != instance.n_ens()) {
    throw DimensionError("price vector length does not match the number of ENs");
  }
}

void check_shape(const MarketInstance& instance, const EquilibriumSolution& solution) {
  check_shape(instance, solution.allocation);
  check_shape(instance, solution.prices);
  if (solution.utilities.size() != instance.n_services() ||
      solution.surpluses.size() != instance.n_services()) {
    throw DimensionError("utility/surplus vectors do not match the number of services");
  }
}

double utility(const MarketInstance& instance, const Allocation& allocation,
               Eigen::Index service) {
  check_shape(instance, allocation);
  if (service < 0 || service >= instance.n_services()) {
    throw DimensionError("service index out of range");
  }
  return instance.valuations().row(service).dot(allocation.x.row(service));
}

Eigen::VectorXd utilities(const MarketInstance& instance, const Allocation& allocation) {
  check_shape(instance, allocation);
  return (instance.valuations().array() * allocation.x.array()).rowwise().sum();
}

MbbResult mbb(const MarketInstance& instance, const PriceVector& prices, Eigen::Index service) {
  check_shape(instance, prices);
  if (service < 0 || service >= instance.n_services()) {
    throw DimensionError("service index out of range");
  }
  if ((prices.p.array() <= 0.0).any()) {
    throw InvalidPriceError("bang-per-buck needs strictly positive prices");
  }
  const auto a = instance.valuations().row(service);
  const Eigen::ArrayXd ratio = a.transpose().array() / prices.p.array();
  MbbResult out;
  out.alpha = ratio.maxCoeff();
  const double cut = out.alpha * (1.0 - tol::mbb);
  for (Eigen::Index j = 0; j < ratio.size(); ++j) {
    if (ratio(j) >= cut) out.demand_set.push_back(j);
  }
  return out;
}

}  // namespace edgemarket
