#pragma once

// Successive shortest paths with Dijkstra on reduced costs. Expects a
// feasible network with zero lower bounds and nonnegative costs.

#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <queue>
#include <vector>

#include "nero/mcf/max_flow.hpp"
#include "nero/mcf/network.hpp"

namespace nero::mcf {

struct SspOutcome {
  bool feasible = false;
  std::vector<std::int64_t> flow;
  std::vector<std::int64_t> potential;
  std::int64_t augmentations = 0;
};

class SuccessiveShortestPaths {
 public:
  explicit SuccessiveShortestPaths(const FlowNetwork& net) : net_(net) {}

  SspOutcome run(const Deadline& deadline = std::nullopt) {
    const int n = net_.node_count;
    const int s = n, t = n + 1;
    const int total = n + 2;
    build(total);
    for (std::size_t a = 0; a < net_.arcs.size(); ++a) {
      const Arc& arc = net_.arcs[a];
      if (arc.lower != 0) throw ModelError("successive shortest paths expects zero lower bounds");
      arc_edge_.push_back(add_edge(arc.tail, arc.head, arc.capacity, arc.cost));
    }
    std::int64_t need = 0;
    for (int v = 0; v < n; ++v) {
      std::int64_t b = net_.supply[static_cast<std::size_t>(v)];
      if (b > 0) {
        add_edge(s, v, b, 0);
        need = checked_add(need, b);
      } else if (b < 0) {
        add_edge(v, t, -b, 0);
      }
    }

    std::vector<std::int64_t> pi(static_cast<std::size_t>(total), 0);
    std::vector<std::int64_t> dist(static_cast<std::size_t>(total));
    std::vector<int> via(static_cast<std::size_t>(total));
    constexpr std::int64_t kUnreached = std::numeric_limits<std::int64_t>::max();
    SspOutcome out;
    std::int64_t sent = 0;
    while (sent < need) {
      check_deadline(deadline);
      std::fill(dist.begin(), dist.end(), kUnreached);
      std::fill(via.begin(), via.end(), -1);
      using Item = std::pair<std::int64_t, int>;
      std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
      dist[static_cast<std::size_t>(s)] = 0;
      heap.push({0, s});
      while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (d != dist[static_cast<std::size_t>(u)]) continue;
        for (int e = head_[static_cast<std::size_t>(u)]; e >= 0; e = next_[static_cast<std::size_t>(e)]) {
          if (cap_[static_cast<std::size_t>(e)] <= 0) continue;
          int v = to_[static_cast<std::size_t>(e)];
          std::int64_t rc = cost_[static_cast<std::size_t>(e)] + pi[static_cast<std::size_t>(u)] - pi[static_cast<std::size_t>(v)];
          std::int64_t nd = d + rc;
          if (nd < dist[static_cast<std::size_t>(v)]) {
            dist[static_cast<std::size_t>(v)] = nd;
            via[static_cast<std::size_t>(v)] = e;
            heap.push({nd, v});
          }
        }
      }
      if (dist[static_cast<std::size_t>(t)] == kUnreached) break;
      // Unreached nodes keep reduced costs nonnegative when shifted by dist(t).
      const std::int64_t dt = dist[static_cast<std::size_t>(t)];
      for (int v = 0; v < total; ++v)
        pi[static_cast<std::size_t>(v)] += std::min(dist[static_cast<std::size_t>(v)], dt);
      std::int64_t push = need - sent;
      for (int v = t; v != s; v = to_[static_cast<std::size_t>(via[static_cast<std::size_t>(v)] ^ 1)])
        push = std::min(push, cap_[static_cast<std::size_t>(via[static_cast<std::size_t>(v)])]);
      for (int v = t; v != s; v = to_[static_cast<std::size_t>(via[static_cast<std::size_t>(v)] ^ 1)]) {
        cap_[static_cast<std::size_t>(via[static_cast<std::size_t>(v)])] -= push;
        cap_[static_cast<std::size_t>(via[static_cast<std::size_t>(v)] ^ 1)] += push;
      }
      sent += push;
      ++out.augmentations;
    }
    out.feasible = sent == need;
    out.flow.resize(net_.arcs.size());
    for (std::size_t a = 0; a < net_.arcs.size(); ++a) out.flow[a] = cap_[static_cast<std::size_t>(arc_edge_[a] ^ 1)];
    out.potential = residual_potentials(n);
    return out;
  }

 private:
  void build(int total) {
    head_.assign(static_cast<std::size_t>(total), -1);
    to_.clear();
    next_.clear();
    cap_.clear();
    cost_.clear();
    arc_edge_.clear();
  }

  int add_edge(int u, int v, std::int64_t cap, std::int64_t cost) {
    int id = static_cast<int>(to_.size());
    auto push = [&](int a, int b, std::int64_t c, std::int64_t w) {
      to_.push_back(b);
      cap_.push_back(c);
      cost_.push_back(w);
      next_.push_back(head_[static_cast<std::size_t>(a)]);
      head_[static_cast<std::size_t>(a)] = static_cast<int>(to_.size()) - 1;
    };
    push(u, v, cap, cost);
    push(v, u, 0, -cost);
    return id;
  }

  // Shortest distances from a virtual root joined to every node at cost 0,
  // over residual arcs among the original nodes (queue-based Bellman-Ford).
  [[nodiscard]] std::vector<std::int64_t> residual_potentials(int n) const {
    std::vector<std::int64_t> d(static_cast<std::size_t>(n), 0);
    std::vector<bool> queued(static_cast<std::size_t>(n), true);
    std::vector<int> relax_count(static_cast<std::size_t>(n), 0);
    std::deque<int> q;
    for (int v = 0; v < n; ++v) q.push_back(v);
    while (!q.empty()) {
      int u = q.front();
      q.pop_front();
      queued[static_cast<std::size_t>(u)] = false;
      for (int e = head_[static_cast<std::size_t>(u)]; e >= 0; e = next_[static_cast<std::size_t>(e)]) {
        int v = to_[static_cast<std::size_t>(e)];
        if (v >= n || cap_[static_cast<std::size_t>(e)] <= 0) continue;
        std::int64_t nd = d[static_cast<std::size_t>(u)] + cost_[static_cast<std::size_t>(e)];
        if (nd < d[static_cast<std::size_t>(v)]) {
          d[static_cast<std::size_t>(v)] = nd;
          if (++relax_count[static_cast<std::size_t>(v)] > n + 1)
            throw ModelError("negative residual cycle: flow is not optimal");
          if (!queued[static_cast<std::size_t>(v)]) {
            queued[static_cast<std::size_t>(v)] = true;
            q.push_back(v);
          }
        }
      }
    }
    return d;
  }

  const FlowNetwork& net_;
  std::vector<int> head_, to_, next_, arc_edge_;
  std::vector<std::int64_t> cap_, cost_;
};

}  // namespace nero::mcf
