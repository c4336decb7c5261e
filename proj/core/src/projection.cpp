#include <edgemarket/projection.hpp>

#include <algorithm>
#include <numeric>
#include <vector>

namespace edgemarket {

Eigen::VectorXd project_capped_simplex(const Eigen::Ref<const Eigen::VectorXd>& v) {
  Eigen::VectorXd clipped = v.cwiseMax(0.0);
  if (clipped.sum() <= 1.0) return clipped;

  // Unit simplex: find theta with sum(max(v - theta, 0)) = 1.
  const auto n = static_cast<std::size_t>(v.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v(a) > v(b); });

  // Work relative to the largest entry: for huge inputs (long spectral
  // steps) the absolute sums would cancel and lose the unit-scale answer.
  const double top = v(order[0]);
  double running = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    running += v(order[k]) - top;
    const double candidate = (running - 1.0) / static_cast<double>(k + 1);
    if (v(order[k]) - top - candidate > 0.0) theta = candidate;
  }
  return ((v.array() - top) - theta).cwiseMax(0.0).matrix();
}

void project_columns_capped_simplex(Eigen::MatrixXd& x) {
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    x.col(j) = project_capped_simplex(x.col(j));
  }
}

}  // namespace edgemarket
