#include "detail/spg.hpp"

#include <algorithm>
#include <cmath>

namespace edgemarket::detail {

namespace {

constexpr double kSpectralMin = 1e-30;
constexpr double kSpectralMax = 1e30;
constexpr double kArmijo = 1e-4;
constexpr std::size_t kMemory = 10;
constexpr int kMaxBacktracks = 60;

}  // namespace

SpectralProjectedGradient::SpectralProjectedGradient(Problem problem, Eigen::VectorXd start)
    : problem_(std::move(problem)), z_(std::move(start)) {
  problem_.project(z_);
  f_ = problem_.value(z_);
  g_ = problem_.gradient(z_);
  history_.push_back(f_);
  const double pg = projected_gradient_norm();
  spectral_ = pg > 0.0 ? std::clamp(1.0 / pg, kSpectralMin, kSpectralMax) : 1.0;
}

double SpectralProjectedGradient::projected_gradient_norm() const {
  Eigen::VectorXd trial = z_ + g_;
  problem_.project(trial);
  return (trial - z_).lpNorm<Eigen::Infinity>();
}

bool SpectralProjectedGradient::step() {
  Eigen::VectorXd target = z_ + spectral_ * g_;
  problem_.project(target);
  const Eigen::VectorXd direction = target - z_;
  const double scale = std::max(1.0, z_.lpNorm<Eigen::Infinity>());
  if (direction.lpNorm<Eigen::Infinity>() <= 1e-15 * scale) return false;

  const double slope = g_.dot(direction);
  const double reference = *std::min_element(history_.begin(), history_.end());
  double t = 1.0;
  Eigen::VectorXd trial = z_ + direction;
  double f_trial = problem_.value(trial);
  int backtracks = 0;
  while (!(f_trial >= reference + kArmijo * t * slope) && backtracks < kMaxBacktracks) {
    t *= 0.5;
    trial = z_ + t * direction;
    f_trial = problem_.value(trial);
    ++backtracks;
  }
  if (!std::isfinite(f_trial) || !(f_trial >= reference + kArmijo * t * slope)) {
    // No admissible progress along this direction; shrink the spectral step.
    spectral_ = std::max(kSpectralMin, spectral_ * 0.1);
    return true;
  }

  const Eigen::VectorXd g_trial = problem_.gradient(trial);
  const Eigen::VectorXd s = trial - z_;
  const Eigen::VectorXd y = g_trial - g_;
  const double curvature = -s.dot(y);
  spectral_ = curvature > 0.0 ? std::clamp(s.squaredNorm() / curvature, kSpectralMin, kSpectralMax)
                              : kSpectralMax;

  z_ = std::move(trial);
  g_ = g_trial;
  f_ = f_trial;
  history_.push_back(f_);
  if (history_.size() > kMemory) history_.pop_front();
  return true;
}

}  // namespace edgemarket::detail
