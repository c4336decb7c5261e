#include "detail/polish.hpp"

#include "detail/maxflow.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <vector>

namespace edgemarket::detail {

namespace {

constexpr double kMbbRelTol = 1e-9;
constexpr double kSaturationRelTol = 1e-10;

class DisjointSets {
 public:
  explicit DisjointSets(int n) : parent_(static_cast<std::size_t>(n)) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  int find(int v) {
    while (parent_[static_cast<std::size_t>(v)] != v) {
      parent_[static_cast<std::size_t>(v)] =
          parent_[static_cast<std::size_t>(parent_[static_cast<std::size_t>(v)])];
      v = parent_[static_cast<std::size_t>(v)];
    }
    return v;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[static_cast<std::size_t>(b)] = a;
    return true;
  }

 private:
  std::vector<int> parent_;
};

struct SupportEdge {
  double weight;
  int service;
  int other;  // EN node id, or the money node
};

// Node layout: services [0, N), ENs [N, N + M), money node N + M.
std::vector<SupportEdge> support_edges(const MarketInstance& instance,
                                       const Eigen::MatrixXd& spending,
                                       const Eigen::VectorXd& surplus, MarketKind kind,
                                       double threshold) {
  const auto& a = instance.valuations();
  const auto& budgets = instance.budgets();
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  std::vector<SupportEdge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const double share = spending(i, j) / budgets(i);
      if (a(i, j) > 0.0 && share >= threshold) edges.push_back({share, i, n + j});
    }
    if (kind == MarketKind::netprofit) {
      const double share = surplus(i) / budgets(i);
      if (share >= threshold) edges.push_back({share, i, n + m});
    }
  }
  std::stable_sort(edges.begin(), edges.end(),
                   [](const SupportEdge& l, const SupportEdge& r) { return l.weight > r.weight; });
  return edges;
}

std::optional<Eigen::VectorXd> forest_prices(const MarketInstance& instance,
                                             const std::vector<SupportEdge>& edges,
                                             MarketKind kind) {
  const auto& a = instance.valuations();
  const auto& budgets = instance.budgets();
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  const bool with_money = kind == MarketKind::netprofit;
  const int n_nodes = n + m + (with_money ? 1 : 0);
  const int money = n + m;

  DisjointSets sets(n_nodes);
  std::vector<std::vector<int>> tree(static_cast<std::size_t>(n_nodes));
  for (const auto& e : edges) {
    if (sets.unite(e.service, e.other)) {
      tree[static_cast<std::size_t>(e.service)].push_back(e.other);
      tree[static_cast<std::size_t>(e.other)].push_back(e.service);
    }
  }

  // log price for ENs and money, log bang-per-buck for services.
  std::vector<double> log_value(static_cast<std::size_t>(n_nodes), 0.0);
  std::vector<bool> seen(static_cast<std::size_t>(n_nodes), false);
  Eigen::VectorXd prices(m);

  std::vector<int> roots;
  if (with_money) roots.push_back(money);
  for (int j = 0; j < m; ++j) roots.push_back(n + j);

  for (int root : roots) {
    if (seen[static_cast<std::size_t>(root)]) continue;
    std::vector<int> component_ens;
    double component_budget = 0.0;
    std::deque<int> queue{root};
    seen[static_cast<std::size_t>(root)] = true;
    log_value[static_cast<std::size_t>(root)] = 0.0;
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      if (v < n) {
        component_budget += budgets(v);
      } else if (v < n + m) {
        component_ens.push_back(v - n);
      }
      for (int w : tree[static_cast<std::size_t>(v)]) {
        if (seen[static_cast<std::size_t>(w)]) continue;
        seen[static_cast<std::size_t>(w)] = true;
        const int service = v < n ? v : w;
        const int other = v < n ? w : v;
        // Money is a good with valuation 1 and price 1.
        const double log_a = other == money ? 0.0 : std::log(a(service, other - n));
        log_value[static_cast<std::size_t>(w)] = log_a - log_value[static_cast<std::size_t>(v)];
        queue.push_back(w);
      }
    }
    if (root == money) {
      for (int j : component_ens) prices(j) = std::exp(log_value[static_cast<std::size_t>(n + j)]);
      continue;
    }
    if (component_budget <= 0.0) return std::nullopt;
    double raw_total = 0.0;
    for (int j : component_ens) raw_total += std::exp(log_value[static_cast<std::size_t>(n + j)]);
    const double scale = component_budget / raw_total;
    for (int j : component_ens) {
      prices(j) = std::exp(log_value[static_cast<std::size_t>(n + j)]) * scale;
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!seen[static_cast<std::size_t>(i)]) return std::nullopt;
  }
  if (!prices.allFinite() || (prices.array() <= 0.0).any()) return std::nullopt;
  return prices;
}

std::optional<EquilibriumSolution> allocate_by_flow(const MarketInstance& instance,
                                                    const Eigen::VectorXd& prices,
                                                    const Eigen::MatrixXd& spending,
                                                    MarketKind kind) {
  const auto& a = instance.valuations();
  const auto& budgets = instance.budgets();
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());

  std::vector<bool> may_keep_money(static_cast<std::size_t>(n), false);
  Eigen::MatrixXd flow = Eigen::MatrixXd::Zero(n, m);
  std::vector<std::vector<bool>> mbb_edge(static_cast<std::size_t>(n),
                                          std::vector<bool>(static_cast<std::size_t>(m), false));
  for (int i = 0; i < n; ++i) {
    double alpha = (a.row(i).transpose().array() / prices.array()).maxCoeff();
    if (kind == MarketKind::netprofit) {
      alpha = std::max(alpha, 1.0);
      may_keep_money[static_cast<std::size_t>(i)] = alpha <= 1.0 + kMbbRelTol;
    }
    for (int j = 0; j < m; ++j) {
      const bool tight = a(i, j) > 0.0 && a(i, j) / prices(j) >= alpha * (1.0 - kMbbRelTol);
      mbb_edge[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = tight;
      if (tight && !may_keep_money[static_cast<std::size_t>(i)]) flow(i, j) = spending(i, j);
    }
    const double row = flow.row(i).sum();
    if (row > budgets(i)) flow.row(i) *= budgets(i) / row;
  }
  for (int j = 0; j < m; ++j) {
    const double col = flow.col(j).sum();
    if (col > prices(j)) flow.col(j) *= prices(j) / col;
  }

  const int source = n + m;
  const int sink = n + m + 1;
  const double total = budgets.sum() + prices.sum();
  MaxFlow network(n + m + 2);
  std::vector<int> source_arc(static_cast<std::size_t>(n));
  std::vector<int> sink_arc(static_cast<std::size_t>(m));
  std::vector<std::vector<int>> pair_arc(static_cast<std::size_t>(n),
                                         std::vector<int>(static_cast<std::size_t>(m), -1));
  for (int i = 0; i < n; ++i) {
    const bool optional = may_keep_money[static_cast<std::size_t>(i)];
    source_arc[static_cast<std::size_t>(i)] =
        network.add_arc(source, i, optional ? 0.0 : budgets(i), flow.row(i).sum());
    for (int j = 0; j < m; ++j) {
      if (mbb_edge[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) {
        pair_arc[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            network.add_arc(i, n + j, total, flow(i, j));
      }
    }
  }
  for (int j = 0; j < m; ++j) {
    sink_arc[static_cast<std::size_t>(j)] = network.add_arc(n + j, sink, prices(j), flow.col(j).sum());
  }

  const double eps = 1e-14 * total;
  // Services that must spend everything are routed first; flow out of the
  // source is never cancelled by later augmentations.
  network.augment(source, sink, eps);
  for (int i = 0; i < n; ++i) {
    if (may_keep_money[static_cast<std::size_t>(i)]) {
      network.set_capacity(source_arc[static_cast<std::size_t>(i)], budgets(i));
    }
  }
  network.augment(source, sink, eps);

  for (int i = 0; i < n; ++i) {
    if (!may_keep_money[static_cast<std::size_t>(i)] &&
        network.flow(source_arc[static_cast<std::size_t>(i)]) <
            budgets(i) * (1.0 - kSaturationRelTol)) {
      return std::nullopt;
    }
  }
  for (int j = 0; j < m; ++j) {
    if (network.flow(sink_arc[static_cast<std::size_t>(j)]) <
        prices(j) * (1.0 - kSaturationRelTol)) {
      return std::nullopt;
    }
  }

  EquilibriumSolution out;
  out.allocation.x = Eigen::MatrixXd::Zero(n, m);
  out.surpluses = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    double spent = 0.0;
    for (int j = 0; j < m; ++j) {
      const int arc = pair_arc[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (arc < 0) continue;
      const double f = std::max(0.0, network.flow(arc));
      out.allocation.x(i, j) = f / prices(j);
      spent += f;
    }
    if (may_keep_money[static_cast<std::size_t>(i)]) {
      out.surpluses(i) = std::max(0.0, budgets(i) - spent);
    }
  }
  out.prices.p = prices;
  out.utilities =
      (a.array() * out.allocation.x.array()).rowwise().sum().matrix() + out.surpluses;
  out.converged = true;
  return out;
}

}  // namespace

std::optional<EquilibriumSolution> polish_equilibrium(const MarketInstance& instance,
                                                      const Eigen::MatrixXd& spending,
                                                      const Eigen::VectorXd& surplus,
                                                      MarketKind kind) {
  std::size_t previous_support = 0;
  for (int k = 1; k <= 14; ++k) {
    const double threshold = std::pow(10.0, -k);
    const auto edges = support_edges(instance, spending, surplus, kind, threshold);
    if (edges.size() == previous_support) continue;
    previous_support = edges.size();

    const auto prices = forest_prices(instance, edges, kind);
    if (!prices) continue;
    auto candidate = allocate_by_flow(instance, *prices, spending, kind);
    if (!candidate) continue;

    const auto report =
        certify(instance, candidate->allocation.x, candidate->prices.p, candidate->surpluses, kind);
    const double primal =
        primal_objective(instance, candidate->allocation.x, candidate->surpluses, kind);
    if (report.passes(kPolishAcceptTol, budget_scale(instance), primal)) return candidate;
  }
  return std::nullopt;
}

}  // namespace edgemarket::detail
