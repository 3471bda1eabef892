#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <queue>
#include <vector>

#include "nero/mcf/network.hpp"

namespace nero::mcf {

using Deadline = std::optional<std::chrono::steady_clock::time_point>;

inline void check_deadline(const Deadline& deadline) {
  if (deadline && std::chrono::steady_clock::now() > *deadline) throw TimeLimitError("solve time limit exceeded");
}

/// Dinic's algorithm on an explicit residual graph.
class Dinic {
 public:
  explicit Dinic(int n) : head_(static_cast<std::size_t>(n), -1), level_(static_cast<std::size_t>(n)), it_(static_cast<std::size_t>(n)) {}

  int add_edge(int u, int v, std::int64_t cap) {
    int id = static_cast<int>(to_.size());
    push(u, v, cap);
    push(v, u, 0);
    return id;
  }

  std::int64_t run(int s, int t, const Deadline& deadline = std::nullopt) {
    std::int64_t total = 0;
    while (bfs(s, t)) {
      check_deadline(deadline);
      for (std::size_t v = 0; v < it_.size(); ++v) it_[v] = head_[v];
      while (std::int64_t f = dfs(s, t, kInfiniteCapacity)) total = checked_add(total, f);
    }
    return total;
  }

  [[nodiscard]] std::int64_t flow_on(int edge) const { return cap_[static_cast<std::size_t>(edge ^ 1)]; }
  [[nodiscard]] std::int64_t residual(int edge) const { return cap_[static_cast<std::size_t>(edge)]; }

  /// Nodes reachable from s through arcs with residual capacity.
  [[nodiscard]] std::vector<bool> reachable(int s) const {
    std::vector<bool> seen(head_.size(), false);
    std::vector<int> stack{s};
    seen[static_cast<std::size_t>(s)] = true;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int e = head_[static_cast<std::size_t>(u)]; e >= 0; e = next_[static_cast<std::size_t>(e)]) {
        int v = to_[static_cast<std::size_t>(e)];
        if (cap_[static_cast<std::size_t>(e)] > 0 && !seen[static_cast<std::size_t>(v)]) {
          seen[static_cast<std::size_t>(v)] = true;
          stack.push_back(v);
        }
      }
    }
    return seen;
  }

 private:
  void push(int u, int v, std::int64_t cap) {
    to_.push_back(v);
    cap_.push_back(cap);
    next_.push_back(head_[static_cast<std::size_t>(u)]);
    head_[static_cast<std::size_t>(u)] = static_cast<int>(to_.size()) - 1;
  }

  bool bfs(int s, int t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::queue<int> q;
    level_[static_cast<std::size_t>(s)] = 0;
    q.push(s);
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int e = head_[static_cast<std::size_t>(u)]; e >= 0; e = next_[static_cast<std::size_t>(e)]) {
        int v = to_[static_cast<std::size_t>(e)];
        if (cap_[static_cast<std::size_t>(e)] > 0 && level_[static_cast<std::size_t>(v)] < 0) {
          level_[static_cast<std::size_t>(v)] = level_[static_cast<std::size_t>(u)] + 1;
          q.push(v);
        }
      }
    }
    return level_[static_cast<std::size_t>(t)] >= 0;
  }

  // Iterative blocking-flow search; recursion depth would follow path length.
  std::int64_t dfs(int s, int t, std::int64_t limit) {
    std::vector<int> path_edges;
    int u = s;
    while (true) {
      if (u == t) {
        std::int64_t f = limit;
        for (int e : path_edges) f = std::min(f, cap_[static_cast<std::size_t>(e)]);
        for (int e : path_edges) {
          cap_[static_cast<std::size_t>(e)] -= f;
          cap_[static_cast<std::size_t>(e ^ 1)] += f;
        }
        return f;
      }
      int& e = it_[static_cast<std::size_t>(u)];
      bool advanced = false;
      for (; e >= 0; e = next_[static_cast<std::size_t>(e)]) {
        int v = to_[static_cast<std::size_t>(e)];
        if (cap_[static_cast<std::size_t>(e)] > 0 && level_[static_cast<std::size_t>(v)] == level_[static_cast<std::size_t>(u)] + 1) {
          path_edges.push_back(e);
          u = v;
          advanced = true;
          break;
        }
      }
      if (advanced) continue;
      // Dead end: retreat and retire the edge that led here.
      level_[static_cast<std::size_t>(u)] = -1;
      if (path_edges.empty()) return 0;
      int back = path_edges.back();
      path_edges.pop_back();
      u = to_[static_cast<std::size_t>(back ^ 1)];
      it_[static_cast<std::size_t>(u)] = next_[static_cast<std::size_t>(it_[static_cast<std::size_t>(u)])];
    }
  }

  std::vector<int> head_, to_, next_, level_, it_;
  std::vector<std::int64_t> cap_;
};

/// Why no feasible flow exists: the demand nodes that cannot be fed, the arcs
/// with positive lower bounds leaving them, and the source side of a minimum cut.
struct InfeasibilityCertificate {
  std::vector<int> unmet_nodes;
  std::vector<std::int64_t> unmet_amount;
  std::vector<int> blocked_arcs;
  std::vector<int> cut_nodes;
  std::int64_t shortfall = 0;
};

struct FeasibilityResult {
  bool feasible = false;
  std::vector<std::int64_t> flow;  // on the reduced network
  InfeasibilityCertificate certificate;
};

/// Saturation test: routes every supply of the reduced network (all lower
/// bounds zero) to the demands through a super source and sink.
inline FeasibilityResult saturate_supplies(const FlowNetwork& original, const FlowNetwork& reduced,
                                           const Deadline& deadline = std::nullopt) {
  const int n = reduced.node_count;
  const int s = n, t = n + 1;
  Dinic dinic(n + 2);
  std::vector<int> arc_edge(reduced.arcs.size());
  for (std::size_t a = 0; a < reduced.arcs.size(); ++a)
    arc_edge[a] = dinic.add_edge(reduced.arcs[a].tail, reduced.arcs[a].head, reduced.arcs[a].capacity);
  std::vector<int> sink_edge(static_cast<std::size_t>(n), -1);
  std::int64_t need = 0;
  for (int v = 0; v < n; ++v) {
    std::int64_t b = reduced.supply[static_cast<std::size_t>(v)];
    if (b > 0) {
      dinic.add_edge(s, v, b);
      need = checked_add(need, b);
    } else if (b < 0) {
      sink_edge[static_cast<std::size_t>(v)] = dinic.add_edge(v, t, -b);
    }
  }
  std::int64_t got = dinic.run(s, t, deadline);

  FeasibilityResult out;
  out.feasible = got == need;
  out.flow.resize(reduced.arcs.size());
  for (std::size_t a = 0; a < reduced.arcs.size(); ++a) out.flow[a] = dinic.flow_on(arc_edge[a]);
  if (out.feasible) return out;

  auto& cert = out.certificate;
  cert.shortfall = need - got;
  std::vector<bool> unmet(static_cast<std::size_t>(n), false);
  for (int v = 0; v < n; ++v) {
    int e = sink_edge[static_cast<std::size_t>(v)];
    if (e >= 0 && dinic.residual(e) > 0) {
      unmet[static_cast<std::size_t>(v)] = true;
      cert.unmet_nodes.push_back(v);
      cert.unmet_amount.push_back(dinic.residual(e));
    }
  }
  for (std::size_t a = 0; a < original.arcs.size(); ++a)
    if (original.arcs[a].lower > 0 && unmet[static_cast<std::size_t>(original.arcs[a].tail)])
      cert.blocked_arcs.push_back(static_cast<int>(a));
  auto seen = dinic.reachable(s);
  for (int v = 0; v < n; ++v)
    if (seen[static_cast<std::size_t>(v)]) cert.cut_nodes.push_back(v);
  return out;
}

}  // namespace nero::mcf
