#pragma once

#include <edgemarket/market_model.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace edgemarket {

/// Requests per time unit service i can push through EN j while meeting its
/// delay tolerance: max(mu - 1 / (t_max - net_delay), 0), and 0 once the
/// network delay alone reaches t_max.
[[nodiscard]] double effective_rate(double mu, double t_max, double net_delay) noexcept;

/// Geometric edge-computing layout plus the queueing parameters that price it.
struct EcScenario {
  double area_km = 10.0;
  double delay_per_km = 1.0;
  /// M x 2 and N x 2 coordinates in km.
  Eigen::MatrixXd en_positions;
  Eigen::MatrixXd service_positions;
  /// N x M service rates.
  Eigen::MatrixXd mu;
  /// Delay tolerance per service.
  Eigen::VectorXd t_max;
  /// N x M round-trip network delays.
  Eigen::MatrixXd net_delay;
  /// Revenue per successful request.
  Eigen::VectorXd r;
  /// Computing units per EN.
  Eigen::VectorXd raw_capacity;
  /// Service budgets; not part of the queueing model, carried so the derived
  /// instance is complete.
  Eigen::VectorXd budgets;
  std::uint64_t seed = 0;
  std::string generator = "mt19937_64";

  [[nodiscard]] Eigen::Index n_services() const noexcept { return mu.rows(); }
  [[nodiscard]] Eigen::Index n_ens() const noexcept { return mu.cols(); }
};

struct Range {
  double lo;
  double hi;
};

struct GenerationConfig {
  int n_ens = 8;
  int n_services = 4;
  double area_km = 10.0;
  double delay_per_km = 1.0;
  Range t_max{15.0, 25.0};
  Range mu{80.0, 240.0};
  Range r{2e-5, 3e-5};
  /// Integer computing-unit counts, both ends inclusive.
  Range capacity{10.0, 20.0};
  /// Total budget, split equally among services.
  double total_budget = 1.0;
};

/// Deterministic for a fixed (config, seed). ENs and services draw from
/// separate mt19937_64 streams, each entity's draws consecutive, so the first
/// k services (ENs) do not depend on how many are generated in total.
[[nodiscard]] EcScenario generate(const GenerationConfig& config, std::uint64_t seed);

/// Throws InvalidInstanceError when the scenario breaks its invariants
/// (shapes, mu > 0, t_max > 0, net_delay >= 0, r > 0, capacity >= 1, budgets > 0).
void validate(const EcScenario& scenario);

struct BuiltInstance {
  MarketInstance instance;
  std::vector<std::string> warnings;
  /// Scenario indices of the services and ENs that made it into the instance.
  std::vector<Eigen::Index> kept_services;
  std::vector<Eigen::Index> kept_ens;
};

/// a_ij = r_i * q_ij * c_j. Services valuing nothing are dropped first, then
/// ENs nobody values; each drop adds a warning. Throws EmptyMarketError when
/// nothing is left.
[[nodiscard]] BuiltInstance build_instance(const EcScenario& scenario);

}  // namespace edgemarket
