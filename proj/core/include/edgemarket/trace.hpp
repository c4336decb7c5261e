#pragma once

#include <Eigen/Core>

#include <vector>

namespace edgemarket {

/// Per-iteration record of an iterative solver.
///
/// `prices[k]` and `residuals[k]` belong to `iterations[k]`. Bid matrices are
/// only kept when the caller asks for them, so `bids` is either empty or the
/// same length as the rest.
struct DynamicsTrace {
  std::vector<int> iterations;
  std::vector<Eigen::VectorXd> prices;
  std::vector<double> residuals;
  std::vector<Eigen::MatrixXd> bids;

  void record(int iteration, const Eigen::VectorXd& p, double residual) {
    iterations.push_back(iteration);
    prices.push_back(p);
    residuals.push_back(residual);
  }

  [[nodiscard]] std::size_t size() const noexcept { return iterations.size(); }
  [[nodiscard]] bool empty() const noexcept { return iterations.empty(); }

  [[nodiscard]] bool consistent() const noexcept {
    return prices.size() == iterations.size() && residuals.size() == iterations.size() &&
           (bids.empty() || bids.size() == iterations.size());
  }
};

}  // namespace edgemarket
