#pragma once

#include <Eigen/Core>

namespace edgemarket {

/// Euclidean projection of `v` onto the capped simplex {x >= 0, sum(x) <= 1}.
///
/// Clips to the non-negative orthant first; if the clipped vector sums to more
/// than one, falls back to the sort-and-threshold projection onto the unit
/// simplex. Ties in the sort are broken by index order, so the result is
/// deterministic.
[[nodiscard]] Eigen::VectorXd project_capped_simplex(const Eigen::Ref<const Eigen::VectorXd>& v);

/// Projects each column of `x` onto the capped simplex in place.
void project_columns_capped_simplex(Eigen::MatrixXd& x);

}  // namespace edgemarket
