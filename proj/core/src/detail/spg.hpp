#pragma once

#include <Eigen/Core>

#include <deque>
#include <functional>

namespace edgemarket::detail {

/// Spectral projected gradient ascent (Birgin, Martinez, Raydan) with a
/// non-monotone Armijo backtracking search along the projected direction.
///
/// `value` must return -inf outside the objective's domain; backtracking then
/// shrinks the step until the iterate is admissible again.
class SpectralProjectedGradient {
 public:
  struct Problem {
    std::function<double(const Eigen::VectorXd&)> value;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
    std::function<void(Eigen::VectorXd&)> project;
  };

  SpectralProjectedGradient(Problem problem, Eigen::VectorXd start);

  /// One iteration. Returns false once the projected step is numerically zero.
  bool step();

  [[nodiscard]] const Eigen::VectorXd& point() const noexcept { return z_; }
  [[nodiscard]] double value() const noexcept { return f_; }
  /// Infinity norm of P(z + g) - z, a stationarity measure.
  [[nodiscard]] double projected_gradient_norm() const;

 private:
  Problem problem_;
  Eigen::VectorXd z_;
  Eigen::VectorXd g_;
  double f_;
  double spectral_ = 1.0;
  std::deque<double> history_;
};

}  // namespace edgemarket::detail
