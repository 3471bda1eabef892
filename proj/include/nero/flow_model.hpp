#pragma once

// Time-expanded network for the optimal rebalancing problem.
//
// Steps are 0-based, t in [0, T). Node (i, t) has id t * N + i. A placement
// source feeds every (i, 0); arcs that would land at step >= T end in a
// terminal sink. With a varying fleet, step t >= 1 gets an arrival node
// (supply V_t - V_{t-1} when positive) and a departure node (demand
// V_{t-1} - V_t when positive).

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "json.hpp"

#include "nero/csv.hpp"
#include "nero/demand.hpp"
#include "nero/error.hpp"
#include "nero/mcf/solve.hpp"
#include "nero/rational.hpp"
#include "nero/region_tree.hpp"

namespace nero {

struct FixedFleet {
  std::int64_t vehicles = 0;
};

struct VaryingFleet {
  FleetSchedule schedule;
};

struct OrpInstance {
  TravelMatrix travel;
  int horizon = 1;
  DemandTensor demand;
  std::variant<FixedFleet, VaryingFleet> fleet;

  [[nodiscard]] int n() const { return travel.n; }
  [[nodiscard]] bool varying() const { return std::holds_alternative<VaryingFleet>(fleet); }

  /// Fleet size at step t (the fixed size for every t when the fleet is fixed).
  [[nodiscard]] std::int64_t vehicles_at(int t) const {
    if (const auto* f = std::get_if<FixedFleet>(&fleet)) return f->vehicles;
    return std::get<VaryingFleet>(fleet).schedule.at(t);
  }

  [[nodiscard]] std::int64_t peak_vehicles() const {
    if (const auto* f = std::get_if<FixedFleet>(&fleet)) return f->vehicles;
    return std::get<VaryingFleet>(fleet).schedule.peak();
  }

  void validate() const {
    if (horizon < 1) throw ModelError("horizon must be at least one step");
    if (travel.n < 1) throw ModelError("instance needs at least one region");
    if (static_cast<int>(travel.tau.size()) != travel.n * travel.n) throw ModelError("travel matrix is not n x n");
    if (demand.n() != travel.n) throw ModelError("demand and travel matrix disagree on the region count");
    if (demand.horizon() != horizon) throw ModelError("demand horizon differs from the instance horizon");
    if (const auto* f = std::get_if<FixedFleet>(&fleet)) {
      if (f->vehicles < 0) throw ModelError("fleet size must be nonnegative");
    } else {
      const auto& s = std::get<VaryingFleet>(fleet).schedule;
      if (s.horizon() != horizon) throw ModelError("fleet schedule length differs from the horizon");
      for (auto v : s.v)
        if (v < 0) throw ModelError("fleet schedule entries must be nonnegative");
    }
  }
};

enum class ArcKind : std::uint8_t { Passenger, Rebalance, Placement, Arrival, Departure };

/// What a network arc means in the policy. Rebalance with i == j is idling.
struct ArcTag {
  ArcKind kind = ArcKind::Rebalance;
  int i = 0;
  int j = 0;
  int t = 0;
};

struct BuildOptions {
  /// Skip non-idle rebalancing arcs that land after the horizon. Such a move
  /// costs something and achieves nothing idling would not, so the optimum
  /// is unchanged while the network shrinks considerably.
  bool prune_late_rebalancing = true;
};

struct OrpNetwork {
  mcf::FlowNetwork net;
  std::vector<ArcTag> tags;  // parallel to net.arcs
  int n = 0;
  int horizon = 0;
  int sink = -1;
  std::int64_t cost_den = 1;
  bool varying = false;
  std::vector<int> departure_node;  // per step, -1 when the fleet does not shrink there

  [[nodiscard]] int node(int i, int t) const { return t * n + i; }
  /// Step a node belongs to; the terminal sink counts as step T.
  [[nodiscard]] int node_step(int v) const {
    if (v < n * horizon) return v / n;
    if (v == sink) return horizon;
    for (int t = 0; t < horizon; ++t)
      if (departure_node[static_cast<std::size_t>(t)] == v) return t;
    return 0;
  }
};

using FlowKey = std::tuple<int, int, int>;  // (i, j, t)

struct RebalancingPolicy {
  int n = 0;
  int horizon = 0;
  std::map<FlowKey, std::int64_t> xp;  // passenger trips
  std::map<FlowKey, std::int64_t> xr;  // empty moves; i == j entries are idle vehicles
  std::vector<std::int64_t> xa;        // arrivals from outside, index t * n + i
  std::vector<std::int64_t> xd;        // departures to outside, index t * n + i
  std::vector<std::int64_t> s0;        // placements at step 0
  Rational objective;

  RebalancingPolicy() = default;
  RebalancingPolicy(int n_, int horizon_)
      : n(n_),
        horizon(horizon_),
        xa(static_cast<std::size_t>(n_) * static_cast<std::size_t>(horizon_), 0),
        xd(static_cast<std::size_t>(n_) * static_cast<std::size_t>(horizon_), 0),
        s0(static_cast<std::size_t>(n_), 0) {}

  [[nodiscard]] std::int64_t arrivals(int i, int t) const { return xa[static_cast<std::size_t>(t * n + i)]; }
  [[nodiscard]] std::int64_t departures(int i, int t) const { return xd[static_cast<std::size_t>(t * n + i)]; }
  [[nodiscard]] std::int64_t rebalancing(int i, int j, int t) const {
    auto it = xr.find({i, j, t});
    return it == xr.end() ? 0 : it->second;
  }
  [[nodiscard]] std::int64_t passengers(int i, int j, int t) const {
    auto it = xp.find({i, j, t});
    return it == xp.end() ? 0 : it->second;
  }

  friend bool operator==(const RebalancingPolicy&, const RebalancingPolicy&) = default;
};

namespace detail {

inline void add_flow(std::map<FlowKey, std::int64_t>& m, int i, int j, int t, std::int64_t v) {
  if (v == 0) return;
  auto& slot = m[{i, j, t}];
  slot = checked_add(slot, v);
}

inline OrpNetwork build_common(const OrpInstance& inst, const BuildOptions& opts, std::int64_t placement,
                               std::int64_t terminal, std::int64_t arc_cap) {
  const int n = inst.n();
  const int T = inst.horizon;
  OrpNetwork out;
  out.n = n;
  out.horizon = T;
  out.cost_den = inst.travel.cost_den;
  out.departure_node.assign(static_cast<std::size_t>(T), -1);
  auto& net = out.net;
  for (int v = 0; v < n * T; ++v) net.add_node();
  out.sink = net.add_node(-terminal);
  int source = net.add_node(placement);

  auto tag = [&](int arc, ArcKind k, int i, int j, int t) {
    (void)arc;
    out.tags.push_back({k, i, j, t});
  };
  for (int i = 0; i < n; ++i) tag(net.add_arc(source, out.node(i, 0), 0, placement, 0), ArcKind::Placement, i, i, 0);

  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        int land = t + inst.travel.t(i, j);
        if (land >= T && i != j && opts.prune_late_rebalancing) continue;
        int head = land < T ? out.node(j, land) : out.sink;
        tag(net.add_arc(out.node(i, t), head, 0, arc_cap, inst.travel.c(i, j)), ArcKind::Rebalance, i, j, t);
      }

  for (const auto& [key, count] : inst.demand.entries()) {
    auto [i, j, t] = key;
    int land = t + inst.travel.t(i, j);
    int head = land < T ? out.node(j, land) : out.sink;
    tag(net.add_arc(out.node(i, t), head, count, count, 0), ArcKind::Passenger, i, j, t);
  }
  return out;
}

}  // namespace detail

/// Fixed fleet of V vehicles, all placed at step 0.
inline OrpNetwork build_fixed_fleet(const OrpInstance& inst, const BuildOptions& opts = {}) {
  inst.validate();
  const auto* fixed = std::get_if<FixedFleet>(&inst.fleet);
  if (!fixed) throw ModelError("build_fixed_fleet needs a fixed fleet");
  return detail::build_common(inst, opts, fixed->vehicles, fixed->vehicles, std::max<std::int64_t>(fixed->vehicles, 0));
}

/// Fleet size follows V_t; vehicles enter and leave through per-step
/// boundary nodes.
inline OrpNetwork build_varying_fleet(const OrpInstance& inst, const BuildOptions& opts = {}) {
  inst.validate();
  const auto* varying = std::get_if<VaryingFleet>(&inst.fleet);
  if (!varying) throw ModelError("build_varying_fleet needs a varying fleet");
  const auto& V = varying->schedule;
  const int T = inst.horizon;
  OrpNetwork out = detail::build_common(inst, opts, V.at(0), V.at(T - 1), V.peak());
  out.varying = true;
  auto& net = out.net;
  for (int t = 1; t < T; ++t) {
    std::int64_t delta = V.at(t) - V.at(t - 1);
    if (delta > 0) {
      int a = net.add_node(delta);
      for (int i = 0; i < out.n; ++i) {
        net.add_arc(a, out.node(i, t), 0, delta, 0);
        out.tags.push_back({ArcKind::Arrival, i, i, t});
      }
    } else if (delta < 0) {
      int d = net.add_node(delta);
      out.departure_node[static_cast<std::size_t>(t)] = d;
      for (int i = 0; i < out.n; ++i) {
        net.add_arc(out.node(i, t), d, 0, -delta, 0);
        out.tags.push_back({ArcKind::Departure, i, i, t});
      }
    }
  }
  return out;
}

inline OrpNetwork build_network(const OrpInstance& inst, const BuildOptions& opts = {}) {
  return inst.varying() ? build_varying_fleet(inst, opts) : build_fixed_fleet(inst, opts);
}

struct FamilyCheck {
  std::string family;
  bool ok = true;
  std::string first_violation;  // empty when ok
};

struct PolicyReport {
  std::vector<FamilyCheck> families;

  [[nodiscard]] bool ok() const {
    return std::all_of(families.begin(), families.end(), [](const FamilyCheck& f) { return f.ok; });
  }
  [[nodiscard]] const FamilyCheck& family(const std::string& name) const {
    for (const auto& f : families)
      if (f.family == name) return f;
    throw ModelError("no constraint family named " + name);
  }
  [[nodiscard]] std::string summary() const {
    std::string s;
    for (const auto& f : families) {
      if (f.ok) continue;
      if (!s.empty()) s += "; ";
      s += f.family + " at " + f.first_violation;
    }
    return s.empty() ? "ok" : s;
  }
};

/// Checks every constraint family from the policy values alone: demand
/// service, nonnegativity, flow conservation at every (i, t), fleet
/// accounting (vehicles idle or in flight equal the fleet size at every t),
/// boundary totals, and the objective.
inline PolicyReport validate_policy(const OrpInstance& inst, const RebalancingPolicy& pol) {
  inst.validate();
  const int n = inst.n();
  const int T = inst.horizon;
  PolicyReport report;
  auto check = [&](const std::string& name) -> FamilyCheck& {
    report.families.push_back({name, true, {}});
    return report.families.back();
  };
  auto fail = [](FamilyCheck& f, const std::string& where) {
    if (f.ok) {
      f.ok = false;
      f.first_violation = where;
    }
  };
  auto at = [](int i, int j, int t) {
    return "(i=" + std::to_string(i) + ", j=" + std::to_string(j) + ", t=" + std::to_string(t) + ")";
  };
  auto at_it = [](int i, int t) { return "(i=" + std::to_string(i) + ", t=" + std::to_string(t) + ")"; };

  FamilyCheck& shape = check("shape");
  const std::size_t dense = static_cast<std::size_t>(n) * static_cast<std::size_t>(T);
  if (pol.n != n || pol.horizon != T || pol.xa.size() != dense || pol.xd.size() != dense ||
      pol.s0.size() != static_cast<std::size_t>(n)) {
    fail(shape, "dimensions");
    return report;  // nothing else can be indexed safely
  }
  auto in_range = [&](const FlowKey& k) {
    auto [i, j, t] = k;
    return i >= 0 && i < n && j >= 0 && j < n && t >= 0 && t < T;
  };
  for (const auto* m : {&pol.xp, &pol.xr})
    for (const auto& [k, v] : *m)
      if (!in_range(k)) fail(shape, at(std::get<0>(k), std::get<1>(k), std::get<2>(k)));
  if (!shape.ok) return report;

  FamilyCheck& demand = check("demand");
  for (const auto& [k, lambda] : inst.demand.entries()) {
    auto [i, j, t] = k;
    if (pol.passengers(i, j, t) != lambda) {
      fail(demand, at(i, j, t));
      break;
    }
  }
  for (const auto& [k, v] : pol.xp)
    if (v != 0 && inst.demand.at(std::get<0>(k), std::get<1>(k), std::get<2>(k)) != v)
      fail(demand, at(std::get<0>(k), std::get<1>(k), std::get<2>(k)));

  FamilyCheck& nonneg = check("nonnegativity");
  for (const auto* m : {&pol.xp, &pol.xr})
    for (const auto& [k, v] : *m)
      if (v < 0) fail(nonneg, at(std::get<0>(k), std::get<1>(k), std::get<2>(k)));
  for (std::size_t x = 0; x < dense; ++x)
    if (pol.xa[x] < 0 || pol.xd[x] < 0) fail(nonneg, at_it(static_cast<int>(x % static_cast<std::size_t>(n)), static_cast<int>(x / static_cast<std::size_t>(n))));
  for (int i = 0; i < n; ++i)
    if (pol.s0[static_cast<std::size_t>(i)] < 0) fail(nonneg, at_it(i, 0));

  // Conservation: what reaches (i, t) leaves it.
  FamilyCheck& conservation = check("conservation");
  std::vector<std::int64_t> in(dense, 0), out(dense, 0);
  std::vector<std::int64_t> presence(static_cast<std::size_t>(T) + 1, 0);  // difference array
  auto idx = [&](int i, int t) { return static_cast<std::size_t>(t) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i); };
  for (const auto* m : {&pol.xp, &pol.xr})
    for (const auto& [k, v] : *m) {
      auto [i, j, t] = k;
      int land = t + inst.travel.t(i, j);
      out[idx(i, t)] = checked_add(out[idx(i, t)], v);
      if (land < T) in[idx(j, land)] = checked_add(in[idx(j, land)], v);
      presence[static_cast<std::size_t>(t)] = checked_add(presence[static_cast<std::size_t>(t)], v);
      presence[static_cast<std::size_t>(std::min(land, T))] -= v;
    }
  for (int t = 0; t < T && conservation.ok; ++t)
    for (int i = 0; i < n; ++i) {
      std::int64_t entering = in[idx(i, t)];
      if (inst.varying())
        entering += pol.arrivals(i, t);
      else if (t == 0)
        entering += pol.s0[static_cast<std::size_t>(i)];
      if (entering != out[idx(i, t)] + pol.departures(i, t)) {
        fail(conservation, at_it(i, t));
        break;
      }
    }

  // Fleet accounting: vehicles departing at t or still travelling through t.
  FamilyCheck& fleet = check("fleet");
  if (!inst.varying()) {
    std::int64_t placed = 0;
    for (auto s : pol.s0) placed += s;
    if (placed != inst.vehicles_at(0)) fail(fleet, "placement total");
  }
  std::int64_t running = 0;
  for (int t = 0; t < T; ++t) {
    running += presence[static_cast<std::size_t>(t)];
    if (running != inst.vehicles_at(t)) {
      fail(fleet, "(t=" + std::to_string(t) + ")");
      break;
    }
  }

  FamilyCheck& boundary = check("boundary");
  for (int t = 0; t < T && boundary.ok; ++t) {
    std::int64_t a = 0, d = 0;
    for (int i = 0; i < n; ++i) {
      a += pol.arrivals(i, t);
      d += pol.departures(i, t);
    }
    std::int64_t want_a = 0, want_d = 0;
    if (inst.varying()) {
      std::int64_t delta = inst.vehicles_at(t) - inst.vehicles_at(t - 1);
      want_a = std::max<std::int64_t>(delta, 0);
      want_d = std::max<std::int64_t>(-delta, 0);
    }
    if (a != want_a || d != want_d) fail(boundary, "(t=" + std::to_string(t) + ")");
  }
  if (inst.varying())
    for (int i = 0; i < n; ++i)
      if (pol.s0[static_cast<std::size_t>(i)] != pol.arrivals(i, 0)) fail(boundary, "placement " + at_it(i, 0));

  FamilyCheck& objective = check("objective");
  std::int64_t units = 0;
  for (const auto& [k, v] : pol.xr) units = checked_add(units, checked_mul(v, inst.travel.c(std::get<0>(k), std::get<1>(k))));
  if (Rational(units, inst.travel.cost_den) != pol.objective) fail(objective, "recomputed " + Rational(units, inst.travel.cost_den).str());
  return report;
}

/// Maps arc flows back to policy variables and checks the result.
inline RebalancingPolicy decode(const OrpNetwork& on, const OrpInstance& inst, const std::vector<std::int64_t>& flow) {
  if (flow.size() != on.tags.size()) throw ModelError("flow vector does not match the network");
  if (auto bad = mcf::check_feasible(on.net, flow); !bad.empty()) throw ModelError("decode got an infeasible flow: " + bad);
  RebalancingPolicy pol(on.n, on.horizon);
  std::int64_t units = 0;
  for (std::size_t a = 0; a < flow.size(); ++a) {
    const std::int64_t f = flow[a];
    if (f == 0) continue;
    const ArcTag& tg = on.tags[a];
    switch (tg.kind) {
      case ArcKind::Passenger: detail::add_flow(pol.xp, tg.i, tg.j, tg.t, f); break;
      case ArcKind::Rebalance:
        detail::add_flow(pol.xr, tg.i, tg.j, tg.t, f);
        units = checked_add(units, checked_mul(f, on.net.arcs[a].cost));
        break;
      case ArcKind::Placement:
        pol.s0[static_cast<std::size_t>(tg.i)] += f;
        if (on.varying) pol.xa[static_cast<std::size_t>(tg.i)] += f;
        break;
      case ArcKind::Arrival: pol.xa[static_cast<std::size_t>(tg.t * on.n + tg.i)] += f; break;
      case ArcKind::Departure: pol.xd[static_cast<std::size_t>(tg.t * on.n + tg.i)] += f; break;
    }
  }
  pol.objective = Rational(units, on.cost_den);
  if (units != mcf::flow_cost(on.net, flow)) throw ModelError("decoded objective differs from the flow cost");
  PolicyReport report = validate_policy(inst, pol);
  if (!report.ok()) throw ModelError("decoded policy violates " + report.summary());
  return pol;
}

struct OrpSolveOptions {
  mcf::Algorithm algorithm = mcf::Algorithm::NetworkSimplex;
  mcf::Deadline deadline;
  BuildOptions build;
  /// Among the optimal policies, pick one whose idle vehicles are spread
  /// evenly over the regions (see spread_idle_vehicles).
  bool spread_idle = false;
};

struct OrpSolution {
  bool feasible = false;
  RebalancingPolicy policy;
  std::string infeasibility;  // human-readable cut description when infeasible
  int first_violated_step = -1;
  mcf::SolveStats stats;
  int nodes = 0;
  int arcs = 0;
};

/// Second pass over an optimal flow. Arcs whose reduced cost is nonzero are
/// fixed at the bound complementary slackness requires, so every feasible flow
/// on the remaining arcs is optimal for the original costs. On that network a
/// convex cost on idle arcs (segment k of width w costs k per vehicle) is
/// minimised, which evens out the idle vehicles per region and step.
inline std::vector<std::int64_t> spread_idle_vehicles(const OrpNetwork& on, const mcf::SolveResult& optimal,
                                                      std::int64_t peak_vehicles, const OrpSolveOptions& opts) {
  constexpr int kSegments = 8;
  const auto& net = on.net;
  const std::int64_t width = std::max<std::int64_t>(1, (peak_vehicles + 4 * on.n - 1) / (4 * on.n));
  mcf::FlowNetwork stage;
  stage.node_count = net.node_count;
  stage.supply = net.supply;
  std::vector<std::int64_t> fixed(net.arcs.size(), -1);
  std::vector<int> first(net.arcs.size(), -1), count(net.arcs.size(), 0);
  for (std::size_t a = 0; a < net.arcs.size(); ++a) {
    const mcf::Arc& arc = net.arcs[a];
    std::int64_t rc = arc.cost + optimal.potential[static_cast<std::size_t>(arc.tail)] -
                      optimal.potential[static_cast<std::size_t>(arc.head)];
    if (rc != 0 || arc.lower == arc.capacity) {
      fixed[a] = rc > 0 ? arc.lower : rc < 0 ? arc.capacity : arc.lower;
      stage.supply[static_cast<std::size_t>(arc.tail)] -= fixed[a];
      stage.supply[static_cast<std::size_t>(arc.head)] += fixed[a];
      continue;
    }
    const ArcTag& tg = on.tags[a];
    first[a] = stage.arc_count();
    if (tg.kind == ArcKind::Rebalance && tg.i == tg.j) {
      std::int64_t left = arc.capacity;
      for (int k = 0; k < kSegments && left > 0; ++k) {
        std::int64_t cap = k + 1 == kSegments ? left : std::min(width, left);
        stage.add_arc(arc.tail, arc.head, 0, cap, k);
        left -= cap;
        ++count[a];
      }
    } else {
      stage.add_arc(arc.tail, arc.head, arc.lower, arc.capacity, 0);
      count[a] = 1;
    }
  }
  mcf::SolveResult r = mcf::solve(stage, {opts.algorithm, opts.deadline});
  if (r.status != mcf::Status::Optimal) throw ModelError("tie-breaking pass lost feasibility");
  std::vector<std::int64_t> flow(net.arcs.size(), 0);
  for (std::size_t a = 0; a < net.arcs.size(); ++a) {
    if (fixed[a] >= 0) {
      flow[a] = fixed[a];
      continue;
    }
    for (int k = 0; k < count[a]; ++k) flow[a] += r.flow[static_cast<std::size_t>(first[a] + k)];
  }
  if (mcf::flow_cost(net, flow) != optimal.cost) throw ModelError("tie-breaking pass changed the optimal cost");
  return flow;
}

/// Builds, solves and decodes one instance.
inline OrpSolution solve_orp(const OrpInstance& inst, const OrpSolveOptions& opts = {}) {
  auto started = std::chrono::steady_clock::now();
  OrpSolution out;
  OrpNetwork on = build_network(inst, opts.build);
  out.nodes = on.net.node_count;
  out.arcs = on.net.arc_count();
  mcf::SolveResult r = mcf::solve(on.net, {opts.algorithm, opts.deadline});
  out.stats = r.stats;
  if (r.status == mcf::Status::Infeasible) {
    const auto& cert = r.certificate;
    std::ostringstream msg;
    int step = -1;
    for (int a : cert.blocked_arcs) {
      const ArcTag& tg = on.tags[static_cast<std::size_t>(a)];
      if (tg.kind != ArcKind::Passenger) continue;
      if (step < 0 || tg.t < step) step = tg.t;
    }
    msg << "shortfall of " << cert.shortfall << " vehicle(s)";
    for (std::size_t u = 0; u < cert.unmet_nodes.size(); ++u) {
      int v = cert.unmet_nodes[u];
      int t = on.node_step(v);
      if (step < 0 || t < step) step = t;
      if (v >= on.n * on.horizon && v != on.sink) msg << "; " << cert.unmet_amount[u] << " departure(s) at step " << t << " unmet";
      if (v == on.sink) msg << "; " << cert.unmet_amount[u] << " vehicle(s) missing at the horizon";
    }
    int shown = 0;
    for (int a : cert.blocked_arcs) {
      const ArcTag& tg = on.tags[static_cast<std::size_t>(a)];
      if (tg.kind != ArcKind::Passenger) continue;
      msg << (shown == 0 ? "; unserved demand " : ", ") << tg.i << "->" << tg.j << "@" << tg.t;
      if (++shown == 5) break;
    }
    out.infeasibility = msg.str();
    out.first_violated_step = step;
    out.stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return out;
  }
  if (opts.spread_idle) r.flow = spread_idle_vehicles(on, r, inst.peak_vehicles(), opts);
  out.policy = decode(on, inst, r.flow);
  out.feasible = true;
  out.stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

// ---------------------------------------------------------------- export

inline void write_policy_csv(const RebalancingPolicy& pol, std::ostream& os) {
  os << "kind,i,j,t,value\n";
  for (const auto& [k, v] : pol.xp) os << "p," << std::get<0>(k) << ',' << std::get<1>(k) << ',' << std::get<2>(k) << ',' << v << '\n';
  for (const auto& [k, v] : pol.xr) os << "r," << std::get<0>(k) << ',' << std::get<1>(k) << ',' << std::get<2>(k) << ',' << v << '\n';
  for (int t = 0; t < pol.horizon; ++t)
    for (int i = 0; i < pol.n; ++i)
      if (auto v = pol.arrivals(i, t)) os << "a," << i << ",," << t << ',' << v << '\n';
  for (int t = 0; t < pol.horizon; ++t)
    for (int i = 0; i < pol.n; ++i)
      if (auto v = pol.departures(i, t)) os << "d," << i << ",," << t << ',' << v << '\n';
  for (int i = 0; i < pol.n; ++i)
    if (auto v = pol.s0[static_cast<std::size_t>(i)]) os << "s0," << i << ",,0," << v << '\n';
}

inline void write_policy_csv(const RebalancingPolicy& pol, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path);
  write_policy_csv(pol, os);
}

/// Reads a policy CSV. The objective is left at zero; callers recompute it.
inline RebalancingPolicy read_policy_csv(const std::string& path, int n, int horizon) {
  csv::Reader reader(path);
  auto need = [&](const char* c) {
    auto idx = reader.column(c);
    if (!idx) throw Error(path + ": missing column " + c);
    return *idx;
  };
  std::size_t ck = need("kind"), ci = need("i"), cj = need("j"), ct = need("t"), cv = need("value");
  RebalancingPolicy pol(n, horizon);
  std::vector<std::string_view> f;
  while (reader.next(f)) {
    std::string kind(csv::trim(f.at(ck)));
    int i = static_cast<int>(csv::to_int(f.at(ci)));
    int t = static_cast<int>(csv::to_int(f.at(ct)));
    std::int64_t v = csv::to_int(f.at(cv));
    if (i < 0 || i >= n || t < 0 || t >= horizon) throw Error(path + ": index out of range");
    if (kind == "p" || kind == "r") {
      int j = static_cast<int>(csv::to_int(f.at(cj)));
      if (j < 0 || j >= n) throw Error(path + ": index out of range");
      detail::add_flow(kind == "p" ? pol.xp : pol.xr, i, j, t, v);
    } else if (kind == "a") {
      pol.xa[static_cast<std::size_t>(t * n + i)] += v;
    } else if (kind == "d") {
      pol.xd[static_cast<std::size_t>(t * n + i)] += v;
    } else if (kind == "s0") {
      pol.s0[static_cast<std::size_t>(i)] += v;
    } else {
      throw Error(path + ": unknown policy kind '" + kind + "'");
    }
  }
  return pol;
}

inline nlohmann::json policy_summary(const RebalancingPolicy& pol) {
  auto sum_map = [](const std::map<FlowKey, std::int64_t>& m, bool moving_only) {
    std::int64_t s = 0;
    for (const auto& [k, v] : m)
      if (!moving_only || std::get<0>(k) != std::get<1>(k)) s += v;
    return s;
  };
  auto sum_vec = [](const std::vector<std::int64_t>& v) {
    std::int64_t s = 0;
    for (auto x : v) s += x;
    return s;
  };
  return {
      {"regions", pol.n},
      {"horizon", pol.horizon},
      {"objective", pol.objective.str()},
      {"objective_value", pol.objective.to_double()},
      {"totals",
       {{"p", sum_map(pol.xp, false)},
        {"r", sum_map(pol.xr, true)},
        {"idle", sum_map(pol.xr, false) - sum_map(pol.xr, true)},
        {"a", sum_vec(pol.xa)},
        {"d", sum_vec(pol.xd)},
        {"s0", sum_vec(pol.s0)}}},
  };
}

}  // namespace nero
