#pragma once

#include <vector>

namespace edgemarket::detail {

/// Edmonds-Karp max flow on a small graph with real capacities.
///
/// Arcs may start with a non-zero feasible flow; augmentation continues from
/// there. Residual capacities at or below `eps` count as saturated.
class MaxFlow {
 public:
  explicit MaxFlow(int n_nodes) : adjacency_(static_cast<std::size_t>(n_nodes)) {}

  /// Returns the arc id; the reverse arc is id ^ 1.
  int add_arc(int from, int to, double capacity, double flow = 0.0) {
    const int id = static_cast<int>(arcs_.size());
    arcs_.push_back({to, capacity, flow});
    arcs_.push_back({from, 0.0, -flow});
    adjacency_[static_cast<std::size_t>(from)].push_back(id);
    adjacency_[static_cast<std::size_t>(to)].push_back(id + 1);
    return id;
  }

  void set_capacity(int arc, double capacity) { arcs_[static_cast<std::size_t>(arc)].capacity = capacity; }
  [[nodiscard]] double flow(int arc) const { return arcs_[static_cast<std::size_t>(arc)].flow; }

  /// Augments along shortest residual paths until none is left; returns the added flow.
  double augment(int source, int sink, double eps);

 private:
  struct Arc {
    int to;
    double capacity;
    double flow;
  };

  [[nodiscard]] double residual(int arc) const {
    const auto& a = arcs_[static_cast<std::size_t>(arc)];
    return a.capacity - a.flow;
  }

  std::vector<Arc> arcs_;
  std::vector<std::vector<int>> adjacency_;
};

}  // namespace edgemarket::detail
