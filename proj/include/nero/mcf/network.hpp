#pragma once

#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nero/error.hpp"

namespace nero::mcf {

inline constexpr std::int64_t kInfiniteCapacity = std::numeric_limits<std::int64_t>::max() / 4;

struct Arc {
  int tail = 0;
  int head = 0;
  std::int64_t lower = 0;
  std::int64_t capacity = 0;
  std::int64_t cost = 0;
  friend bool operator==(const Arc&, const Arc&) = default;
};

/// Directed network with per-node supplies (positive = source, negative = sink).
struct FlowNetwork {
  int node_count = 0;
  std::vector<Arc> arcs;
  std::vector<std::int64_t> supply;

  int add_node(std::int64_t s = 0) {
    supply.push_back(s);
    return node_count++;
  }

  int add_arc(int tail, int head, std::int64_t lower, std::int64_t capacity, std::int64_t cost) {
    arcs.push_back({tail, head, lower, capacity, cost});
    return static_cast<int>(arcs.size()) - 1;
  }

  [[nodiscard]] int arc_count() const { return static_cast<int>(arcs.size()); }

  /// Throws ModelError when a structural invariant is broken.
  void validate() const {
    if (static_cast<int>(supply.size()) != node_count) throw ModelError("supply vector size differs from node count");
    std::int64_t total = 0;
    for (auto s : supply) total = checked_add(total, s);
    if (total != 0) throw ModelError("supplies do not sum to zero");
    for (std::size_t a = 0; a < arcs.size(); ++a) {
      const Arc& arc = arcs[a];
      if (arc.tail < 0 || arc.tail >= node_count || arc.head < 0 || arc.head >= node_count)
        throw ModelError("arc " + std::to_string(a) + " has an endpoint out of range");
      if (arc.lower < 0 || arc.lower > arc.capacity)
        throw ModelError("arc " + std::to_string(a) + " violates 0 <= lower <= capacity");
      if (arc.cost < 0) throw ModelError("arc " + std::to_string(a) + " has a negative cost");
    }
  }

  friend bool operator==(const FlowNetwork&, const FlowNetwork&) = default;
};

/// Network with every lower bound shifted into the supplies.
struct ReducedNetwork {
  FlowNetwork net;               // all lower bounds are zero
  std::int64_t cost_offset = 0;  // sum of lower * cost over the original arcs
};

/// Standard reduction: flow' = flow - lower, capacity' = capacity - lower,
/// supply[tail] -= lower, supply[head] += lower.
inline ReducedNetwork lower_bounds_transform(const FlowNetwork& net) {
  ReducedNetwork out;
  out.net.node_count = net.node_count;
  out.net.supply = net.supply;
  out.net.arcs.reserve(net.arcs.size());
  for (const Arc& a : net.arcs) {
    out.net.arcs.push_back({a.tail, a.head, 0, a.capacity - a.lower, a.cost});
    if (a.lower != 0) {
      out.net.supply[static_cast<std::size_t>(a.tail)] = checked_sub(out.net.supply[static_cast<std::size_t>(a.tail)], a.lower);
      out.net.supply[static_cast<std::size_t>(a.head)] = checked_add(out.net.supply[static_cast<std::size_t>(a.head)], a.lower);
      out.cost_offset = checked_add(out.cost_offset, checked_mul(a.lower, a.cost));
    }
  }
  return out;
}

/// Maps a flow of the reduced network back onto the original arcs.
inline std::vector<std::int64_t> restore_lower_bounds(const FlowNetwork& original, const std::vector<std::int64_t>& reduced_flow) {
  std::vector<std::int64_t> flow(reduced_flow);
  for (std::size_t a = 0; a < flow.size(); ++a) flow[a] = checked_add(flow[a], original.arcs[a].lower);
  return flow;
}

inline std::int64_t flow_cost(const FlowNetwork& net, const std::vector<std::int64_t>& flow) {
  std::int64_t c = 0;
  for (std::size_t a = 0; a < net.arcs.size(); ++a) c = checked_add(c, checked_mul(flow[a], net.arcs[a].cost));
  return c;
}

/// Empty string when `flow` respects every bound and conservation; otherwise
/// a description of the first violation.
inline std::string check_feasible(const FlowNetwork& net, const std::vector<std::int64_t>& flow) {
  if (flow.size() != net.arcs.size()) return "flow vector has the wrong length";
  std::vector<std::int64_t> balance(net.supply);
  for (std::size_t a = 0; a < net.arcs.size(); ++a) {
    const Arc& arc = net.arcs[a];
    if (flow[a] < arc.lower || flow[a] > arc.capacity) return "arc " + std::to_string(a) + " flow out of bounds";
    balance[static_cast<std::size_t>(arc.tail)] -= flow[a];
    balance[static_cast<std::size_t>(arc.head)] += flow[a];
  }
  for (int v = 0; v < net.node_count; ++v)
    if (balance[static_cast<std::size_t>(v)] != 0) return "conservation violated at node " + std::to_string(v);
  return {};
}

/// Upper bound on |total cost| of any feasible flow; throws if it overflows.
inline std::int64_t cost_magnitude_bound(const FlowNetwork& net) {
  // An uncapacitated arc cannot carry more than the total positive supply.
  std::int64_t total = 0;
  for (auto s : net.supply)
    if (s > 0) total = checked_add(total, s);
  std::int64_t bound = 0;
  for (const Arc& a : net.arcs) {
    if (a.cost == 0) continue;
    if (a.capacity >= kInfiniteCapacity) {
      bound = checked_add(bound, checked_mul(total, a.cost));
    } else {
      bound = checked_add(bound, checked_mul(a.capacity, a.cost));
    }
  }
  return bound;
}

// DIMACS min-cost-flow format: "p min n m", "n id supply", "a u v low cap cost", 1-based ids.

inline void write_dimacs(const FlowNetwork& net, std::ostream& out) {
  out << "c nero time-expanded network\n";
  out << "p min " << net.node_count << ' ' << net.arcs.size() << '\n';
  for (int v = 0; v < net.node_count; ++v)
    if (net.supply[static_cast<std::size_t>(v)] != 0) out << "n " << v + 1 << ' ' << net.supply[static_cast<std::size_t>(v)] << '\n';
  for (const Arc& a : net.arcs)
    out << "a " << a.tail + 1 << ' ' << a.head + 1 << ' ' << a.lower << ' ' << a.capacity << ' ' << a.cost << '\n';
}

inline FlowNetwork read_dimacs(std::istream& in) {
  FlowNetwork net;
  bool have_problem = false;
  std::size_t declared_arcs = 0;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == 'c') continue;
    std::istringstream ss(line);
    char kind;
    ss >> kind;
    auto fail = [&] { throw ModelError("malformed DIMACS line " + std::to_string(lineno)); };
    if (kind == 'p') {
      std::string type;
      int n;
      ss >> type >> n >> declared_arcs;
      if (!ss || type != "min" || n < 0) fail();
      net.node_count = n;
      net.supply.assign(static_cast<std::size_t>(n), 0);
      have_problem = true;
    } else if (kind == 'n') {
      int id;
      std::int64_t s;
      ss >> id >> s;
      if (!ss || !have_problem || id < 1 || id > net.node_count) fail();
      net.supply[static_cast<std::size_t>(id - 1)] = s;
    } else if (kind == 'a') {
      int u, v;
      std::int64_t lo, cap, cost;
      ss >> u >> v >> lo >> cap >> cost;
      if (!ss || !have_problem) fail();
      net.add_arc(u - 1, v - 1, lo, cap, cost);
    } else {
      fail();
    }
  }
  if (!have_problem) throw ModelError("DIMACS input has no problem line");
  if (net.arcs.size() != declared_arcs) throw ModelError("DIMACS arc count does not match the problem line");
  net.validate();
  return net;
}

}  // namespace nero::mcf
