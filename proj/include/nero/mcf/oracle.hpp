#pragma once

// Exhaustive reference solver for tiny acyclic networks. Nodes are settled in
// topological order; at each node every integral split of its inflow over the
// outgoing arcs is enumerated, with memoization on the pending inflows of the
// unsettled nodes. Used only to check the production solvers.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <queue>
#include <unordered_map>
#include <vector>

#include "nero/mcf/network.hpp"

namespace nero::mcf {

struct OracleLimits {
  std::int64_t max_states = 1'000'000;
  int max_nodes = 96;
  int max_arcs = 1024;
};

struct OracleOutcome {
  bool feasible = false;
  std::vector<std::int64_t> flow;
  std::int64_t cost = 0;
  std::int64_t states = 0;
};

class ExhaustiveOracle {
 public:
  ExhaustiveOracle(const FlowNetwork& net, OracleLimits limits) : net_(net), limits_(limits) {}

  OracleOutcome run() {
    net_.validate();
    if (net_.node_count > limits_.max_nodes || net_.arc_count() > limits_.max_arcs)
      throw OracleLimitError("network exceeds the oracle size limits");
    topological_order();
    out_arcs_.assign(static_cast<std::size_t>(net_.node_count), {});
    for (int a = 0; a < net_.arc_count(); ++a) out_arcs_[static_cast<std::size_t>(net_.arcs[static_cast<std::size_t>(a)].tail)].push_back(a);

    std::vector<std::int64_t> inflow(static_cast<std::size_t>(net_.node_count), 0);
    OracleOutcome out;
    std::int64_t best = value(0, inflow);
    out.states = static_cast<std::int64_t>(memo_.size());
    if (best >= kInf) return out;
    out.feasible = true;
    out.cost = best;
    out.flow.assign(net_.arcs.size(), 0);
    reconstruct(out.flow);
    return out;
  }

 private:
  static constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;

  struct KeyHash {
    std::size_t operator()(const std::vector<std::int64_t>& k) const {
      std::size_t h = 1469598103934665603ull;
      for (auto x : k) h = (h ^ static_cast<std::size_t>(x)) * 1099511628211ull;
      return h;
    }
  };

  void topological_order() {
    const int n = net_.node_count;
    std::vector<int> indeg(static_cast<std::size_t>(n), 0);
    std::vector<std::vector<int>> succ(static_cast<std::size_t>(n));
    for (const Arc& a : net_.arcs) {
      ++indeg[static_cast<std::size_t>(a.head)];
      succ[static_cast<std::size_t>(a.tail)].push_back(a.head);
    }
    std::priority_queue<int, std::vector<int>, std::greater<>> ready;
    for (int v = 0; v < n; ++v)
      if (indeg[static_cast<std::size_t>(v)] == 0) ready.push(v);
    order_.clear();
    while (!ready.empty()) {
      int v = ready.top();
      ready.pop();
      order_.push_back(v);
      for (int w : succ[static_cast<std::size_t>(v)])
        if (--indeg[static_cast<std::size_t>(w)] == 0) ready.push(w);
    }
    if (static_cast<int>(order_.size()) != n) throw OracleLimitError("oracle requires an acyclic network");
  }

  // Calls `visit(split, split_cost)` for every admissible split of `amount`
  // over the outgoing arcs of `node`.
  template <class Visit>
  void for_each_split(int node, std::int64_t amount, Visit&& visit) const {
    const auto& arcs = out_arcs_[static_cast<std::size_t>(node)];
    if (arcs.empty()) {
      if (amount == 0) visit(std::vector<std::int64_t>{}, std::int64_t{0});
      return;
    }
    std::vector<std::int64_t> lower_suffix(arcs.size() + 1, 0);
    for (std::size_t k = arcs.size(); k-- > 0;)
      lower_suffix[k] = lower_suffix[k + 1] + net_.arcs[static_cast<std::size_t>(arcs[k])].lower;
    std::vector<std::int64_t> split(arcs.size(), 0);
    auto rec = [&](auto&& self, std::size_t k, std::int64_t remaining, std::int64_t cost) -> void {
      const Arc& arc = net_.arcs[static_cast<std::size_t>(arcs[k])];
      if (k + 1 == arcs.size()) {
        if (remaining < arc.lower || remaining > arc.capacity) return;
        split[k] = remaining;
        visit(split, cost + remaining * arc.cost);
        return;
      }
      std::int64_t hi = std::min(arc.capacity, remaining - lower_suffix[k + 1]);
      for (std::int64_t f = arc.lower; f <= hi; ++f) {
        split[k] = f;
        self(self, k + 1, remaining - f, cost + f * arc.cost);
      }
    };
    if (amount < lower_suffix[0]) return;
    rec(rec, 0, amount, 0);
  }

  std::vector<std::int64_t> key(std::size_t pos, const std::vector<std::int64_t>& inflow) const {
    std::vector<std::int64_t> k;
    k.reserve(order_.size() - pos + 1);
    k.push_back(static_cast<std::int64_t>(pos));
    for (std::size_t p = pos; p < order_.size(); ++p) k.push_back(inflow[static_cast<std::size_t>(order_[p])]);
    return k;
  }

  std::int64_t value(std::size_t pos, const std::vector<std::int64_t>& inflow) {
    if (pos == order_.size()) return 0;
    auto k = key(pos, inflow);
    if (auto it = memo_.find(k); it != memo_.end()) return it->second;
    if (static_cast<std::int64_t>(memo_.size()) >= limits_.max_states)
      throw OracleLimitError("oracle state limit exceeded");

    const int node = order_[pos];
    const std::int64_t amount = inflow[static_cast<std::size_t>(node)] + net_.supply[static_cast<std::size_t>(node)];
    std::int64_t best = kInf;
    if (amount >= 0) {
      const auto& arcs = out_arcs_[static_cast<std::size_t>(node)];
      for_each_split(node, amount, [&](const std::vector<std::int64_t>& split, std::int64_t c) {
        std::vector<std::int64_t> next(inflow);
        next[static_cast<std::size_t>(node)] = 0;
        for (std::size_t i = 0; i < arcs.size(); ++i)
          next[static_cast<std::size_t>(net_.arcs[static_cast<std::size_t>(arcs[i])].head)] += split[i];
        std::int64_t rest = value(pos + 1, next);
        if (rest < kInf) best = std::min(best, c + rest);
      });
    }
    memo_.emplace(std::move(k), best);
    return best;
  }

  void reconstruct(std::vector<std::int64_t>& flow) {
    std::vector<std::int64_t> inflow(static_cast<std::size_t>(net_.node_count), 0);
    for (std::size_t pos = 0; pos < order_.size(); ++pos) {
      const int node = order_[pos];
      const std::int64_t target = value(pos, inflow);
      const std::int64_t amount = inflow[static_cast<std::size_t>(node)] + net_.supply[static_cast<std::size_t>(node)];
      const auto& arcs = out_arcs_[static_cast<std::size_t>(node)];
      bool done = false;
      std::vector<std::int64_t> chosen_next;
      for_each_split(node, amount, [&](const std::vector<std::int64_t>& split, std::int64_t c) {
        if (done) return;
        std::vector<std::int64_t> next(inflow);
        next[static_cast<std::size_t>(node)] = 0;
        for (std::size_t i = 0; i < arcs.size(); ++i)
          next[static_cast<std::size_t>(net_.arcs[static_cast<std::size_t>(arcs[i])].head)] += split[i];
        std::int64_t rest = value(pos + 1, next);
        if (rest < kInf && c + rest == target) {
          for (std::size_t i = 0; i < arcs.size(); ++i) flow[static_cast<std::size_t>(arcs[i])] = split[i];
          chosen_next = std::move(next);
          done = true;
        }
      });
      inflow = std::move(chosen_next);
    }
  }

  const FlowNetwork& net_;
  OracleLimits limits_;
  std::vector<int> order_;
  std::vector<std::vector<int>> out_arcs_;
  std::unordered_map<std::vector<std::int64_t>, std::int64_t, KeyHash> memo_;
};

}  // namespace nero::mcf
