#include "detail/maxflow.hpp"

#include <algorithm>
#include <deque>
#include <limits>

namespace edgemarket::detail {

double MaxFlow::augment(int source, int sink, double eps) {
  double total = 0.0;
  const std::size_t n = adjacency_.size();
  std::vector<int> via(n);
  while (true) {
    std::fill(via.begin(), via.end(), -1);
    std::deque<int> queue{source};
    via[static_cast<std::size_t>(source)] = -2;
    while (!queue.empty() && via[static_cast<std::size_t>(sink)] == -1) {
      const int u = queue.front();
      queue.pop_front();
      for (int id : adjacency_[static_cast<std::size_t>(u)]) {
        const int v = arcs_[static_cast<std::size_t>(id)].to;
        if (via[static_cast<std::size_t>(v)] == -1 && residual(id) > eps) {
          via[static_cast<std::size_t>(v)] = id;
          queue.push_back(v);
        }
      }
    }
    if (via[static_cast<std::size_t>(sink)] == -1) break;

    double push = std::numeric_limits<double>::infinity();
    for (int v = sink; v != source;) {
      const int id = via[static_cast<std::size_t>(v)];
      push = std::min(push, residual(id));
      v = arcs_[static_cast<std::size_t>(id ^ 1)].to;
    }
    for (int v = sink; v != source;) {
      const int id = via[static_cast<std::size_t>(v)];
      arcs_[static_cast<std::size_t>(id)].flow += push;
      arcs_[static_cast<std::size_t>(id ^ 1)].flow -= push;
      v = arcs_[static_cast<std::size_t>(id ^ 1)].to;
    }
    total += push;
  }
  return total;
}

}  // namespace edgemarket::detail
