#include <edgemarket/scenario.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace edgemarket {

namespace {

constexpr std::uint64_t kEnStream = 0x454e;
constexpr std::uint64_t kServiceStream = 0x5356;

// Spelled out rather than std::uniform_real_distribution, whose output is
// implementation-defined.
class Uniform {
 public:
  Uniform(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    engine_.seed(seq);
  }
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double operator()(const Range& range) { return range.lo + (range.hi - range.lo) * unit(); }
  double integer(const Range& range) {
    const double span = range.hi - range.lo + 1.0;
    return std::min(range.hi, range.lo + std::floor(unit() * span));
  }

 private:
  std::mt19937_64 engine_;
};

void check_range(const Range& range, const char* name, bool positive) {
  if (!std::isfinite(range.lo) || !std::isfinite(range.hi) || range.lo > range.hi ||
      (positive && !(range.lo > 0.0))) {
    std::ostringstream os;
    os << "invalid " << name << " range [" << range.lo << ", " << range.hi << "]";
    throw ConfigError(os.str());
  }
}

}  // namespace

double effective_rate(double mu, double t_max, double net_delay) noexcept {
  if (!(net_delay < t_max)) return 0.0;
  return std::max(mu - 1.0 / (t_max - net_delay), 0.0);
}

EcScenario generate(const GenerationConfig& config, std::uint64_t seed) {
  if (config.n_ens < 1 || config.n_services < 1) {
    throw ConfigError("a scenario needs at least one EN and one service");
  }
  if (!(config.area_km > 0.0) || !std::isfinite(config.area_km)) {
    throw ConfigError("area must be positive");
  }
  if (!(config.delay_per_km >= 0.0) || !std::isfinite(config.delay_per_km)) {
    throw ConfigError("delay per km must be non-negative");
  }
  if (!(config.total_budget > 0.0) || !std::isfinite(config.total_budget)) {
    throw ConfigError("total budget must be positive");
  }
  check_range(config.t_max, "t_max", true);
  check_range(config.mu, "mu", true);
  check_range(config.r, "r", true);
  check_range(config.capacity, "capacity", true);
  if (config.capacity.lo < 1.0 || std::floor(config.capacity.lo) != config.capacity.lo ||
      std::floor(config.capacity.hi) != config.capacity.hi) {
    throw ConfigError("capacity range must have integer ends >= 1");
  }

  const Eigen::Index m = config.n_ens;
  const Eigen::Index n = config.n_services;
  EcScenario s;
  s.area_km = config.area_km;
  s.delay_per_km = config.delay_per_km;
  s.seed = seed;
  const Range side{0.0, config.area_km};

  Uniform en_draw(seed, kEnStream);
  s.en_positions.resize(m, 2);
  s.raw_capacity.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    s.en_positions(j, 0) = en_draw(side);
    s.en_positions(j, 1) = en_draw(side);
    s.raw_capacity(j) = en_draw.integer(config.capacity);
  }

  Uniform service_draw(seed, kServiceStream);
  s.service_positions.resize(n, 2);
  s.t_max.resize(n);
  s.r.resize(n);
  s.mu.resize(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    s.service_positions(i, 0) = service_draw(side);
    s.service_positions(i, 1) = service_draw(side);
    s.t_max(i) = service_draw(config.t_max);
    s.r(i) = service_draw(config.r);
    for (Eigen::Index j = 0; j < m; ++j) s.mu(i, j) = service_draw(config.mu);
  }

  s.net_delay.resize(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double dist = (s.service_positions.row(i) - s.en_positions.row(j)).norm();
      s.net_delay(i, j) = config.delay_per_km * dist;
    }
  }
  s.budgets = Eigen::VectorXd::Constant(n, config.total_budget / static_cast<double>(n));
  return s;
}

void validate(const EcScenario& s) {
  const Eigen::Index n = s.mu.rows();
  const Eigen::Index m = s.mu.cols();
  if (n < 1 || m < 1) throw InvalidInstanceError("scenario has no services or no ENs");
  if (s.t_max.size() != n || s.r.size() != n || s.budgets.size() != n ||
      s.net_delay.rows() != n || s.net_delay.cols() != m || s.raw_capacity.size() != m ||
      s.en_positions.rows() != m || s.service_positions.rows() != n ||
      (m > 0 && s.en_positions.cols() != 2) || (n > 0 && s.service_positions.cols() != 2)) {
    throw InvalidInstanceError("scenario arrays have inconsistent shapes");
  }
  auto all = [](const auto& v, auto pred) {
    return v.allFinite() && v.unaryExpr(pred).all();
  };
  if (!all(s.mu, [](double v) { return v > 0.0; })) {
    throw InvalidInstanceError("service rates must be positive");
  }
  if (!all(s.t_max, [](double v) { return v > 0.0; })) {
    throw InvalidInstanceError("delay tolerances must be positive");
  }
  if (!all(s.net_delay, [](double v) { return v >= 0.0; })) {
    throw InvalidInstanceError("network delays must be non-negative");
  }
  if (!all(s.r, [](double v) { return v > 0.0; })) {
    throw InvalidInstanceError("revenues per request must be positive");
  }
  if (!all(s.raw_capacity, [](double v) { return v >= 1.0; })) {
    throw InvalidInstanceError("EN capacities must be at least one unit");
  }
  if (!all(s.budgets, [](double v) { return v > 0.0; })) {
    throw InvalidInstanceError("budgets must be positive");
  }
}

BuiltInstance build_instance(const EcScenario& s) {
  validate(s);
  const Eigen::Index n = s.n_services();
  const Eigen::Index m = s.n_ens();
  Eigen::MatrixXd a(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      a(i, j) = s.r(i) * effective_rate(s.mu(i, j), s.t_max(i), s.net_delay(i, j)) *
                s.raw_capacity(j);
    }
  }

  std::vector<std::string> warnings;
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < n; ++i) {
    if ((a.row(i).array() > 0.0).any()) {
      rows.push_back(i);
    } else {
      std::ostringstream os;
      os << "service " << i << " reaches no EN within its delay tolerance; dropped";
      warnings.push_back(os.str());
    }
  }
  std::vector<Eigen::Index> cols;
  for (Eigen::Index j = 0; j < m; ++j) {
    bool wanted = false;
    for (Eigen::Index i : rows) wanted = wanted || a(i, j) > 0.0;
    if (wanted) {
      cols.push_back(j);
    } else {
      std::ostringstream os;
      os << "EN " << j << " is valued by no service; dropped";
      warnings.push_back(os.str());
    }
  }
  if (rows.empty() || cols.empty()) {
    throw EmptyMarketError("every service or every EN was dropped");
  }

  const auto kn = static_cast<Eigen::Index>(rows.size());
  const auto km = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd valuations(kn, km);
  Eigen::VectorXd budgets(kn);
  std::vector<double> capacity;
  capacity.reserve(cols.size());
  for (Eigen::Index r = 0; r < kn; ++r) {
    budgets(r) = s.budgets(rows[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < km; ++c) {
      valuations(r, c) = a(rows[static_cast<std::size_t>(r)], cols[static_cast<std::size_t>(c)]);
    }
  }
  for (Eigen::Index j : cols) capacity.push_back(s.raw_capacity(j));

  std::ostringstream label;
  label << "scenario seed " << s.seed << " (" << n << " services, " << m << " ENs)";
  return BuiltInstance{MarketInstance(std::move(budgets), std::move(valuations), label.str(),
                                      std::move(capacity)),
                       std::move(warnings), std::move(rows), std::move(cols)};
}

}  // namespace edgemarket
