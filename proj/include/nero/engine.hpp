#pragma once

// Nested rebalancing over the region tree.
//
// NERO_K uses the K finest layers of the tree. The top subproblem covers every
// region of layer D-K with the full fleet schedule. Every non-leaf region l
// below that gets a subproblem over its children, whose fleet schedule is the
// number of vehicles the parent solution keeps inside l at each step. Layers
// are solved top-down; siblings are independent and may run in parallel.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "nero/demand.hpp"
#include "nero/error.hpp"
#include "nero/flow_model.hpp"
#include "nero/region_tree.hpp"

namespace nero {

/// A subproblem could not be solved with the vehicles its parent left it.
class NeroInfeasible : public ModelError {
 public:
  NeroInfeasible(int layer, int region, int step, const std::string& detail)
      : ModelError("subproblem for region " + std::to_string(layer) + ":" + std::to_string(region) +
                   " is infeasible from step " + std::to_string(step) + ": " + detail),
        layer_(layer),
        region_(region),
        step_(step) {}
  [[nodiscard]] int layer() const { return layer_; }
  [[nodiscard]] int region() const { return region_; }  // -1 for the top subproblem
  [[nodiscard]] int step() const { return step_; }

 private:
  int layer_, region_, step_;
};

struct NeroConfig {
  int K = 1;
  FleetSchedule v_max;
  int threads = 1;
  OrpSolveOptions solve;
  /// Break ties in subproblems that have children by spreading idle vehicles
  /// over their regions. The subproblem optimum is unchanged.
  bool spread_idle = true;
};

struct Subproblem {
  std::optional<RegionId> owner;  // empty for the top subproblem
  int region_layer = 0;           // layer of the regions the subproblem moves vehicles between
  std::vector<RegionId> regions;
  OrpInstance instance;
  RebalancingPolicy policy;
  double seconds = 0;
  int arcs = 0;
};

struct LayerInfo {
  int layer = 0;
  std::int64_t mesh_m = 0;
  int tau_steps = 1;       // adjacent-cell travel time on the model's clock
  double tau_minutes = 0;  // tau_steps * step length
};

struct LayeredPolicy {
  int K = 1;
  int top_layer = 0;
  double step_min = 1;
  std::vector<LayerInfo> layers;         // one entry per tree layer
  std::vector<Subproblem> subproblems;   // top first, then layer by layer in region order
  std::int64_t vehicles = 0;             // peak of the top schedule
  double solve_seconds = 0;

  [[nodiscard]] const Subproblem& top() const { return subproblems.front(); }
  [[nodiscard]] const Subproblem* find(RegionId owner) const {
    for (const auto& s : subproblems)
      if (s.owner && *s.owner == owner) return &s;
    return nullptr;
  }
  [[nodiscard]] Rational objective() const {
    Rational sum(0);
    for (const auto& s : subproblems) sum = sum + s.policy.objective;
    return sum;
  }
};

/// Vehicles the parent solution keeps inside each of its regions at every
/// step: placements or boundary arrivals, plus moves landing in the region,
/// minus boundary departures and moves leaving it.
inline std::vector<FleetSchedule> fleet_schedules(const RebalancingPolicy& parent, const TravelMatrix& travel) {
  const int n = parent.n, T = parent.horizon;
  std::vector<std::int64_t> delta(static_cast<std::size_t>(n) * static_cast<std::size_t>(T), 0);
  auto d = [&](int i, int t) -> std::int64_t& { return delta[static_cast<std::size_t>(t * n + i)]; };
  for (int i = 0; i < n; ++i) {
    d(i, 0) += parent.s0[static_cast<std::size_t>(i)];
    for (int t = 0; t < T; ++t) {
      if (t > 0) d(i, t) += parent.arrivals(i, t);
      d(i, t) -= parent.departures(i, t);
    }
  }
  for (const auto* m : {&parent.xp, &parent.xr})
    for (const auto& [k, v] : *m) {
      auto [i, j, t] = k;
      if (i == j) continue;
      d(i, t) -= v;
      int land = t + travel.t(i, j);
      if (land < T) d(j, land) += v;
    }
  std::vector<FleetSchedule> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& v = out[static_cast<std::size_t>(i)].v;
    v.resize(static_cast<std::size_t>(T));
    std::int64_t running = 0;
    for (int t = 0; t < T; ++t) {
      running += d(i, t);
      if (running < 0) throw ModelError("parent policy leaves a negative vehicle count in region " + std::to_string(i));
      v[static_cast<std::size_t>(t)] = running;
    }
  }
  return out;
}

inline FleetSchedule fleet_schedule(const RebalancingPolicy& parent, int l, const TravelMatrix& travel) {
  if (l < 0 || l >= parent.n) throw ModelError("region index outside the parent subproblem");
  return fleet_schedules(parent, travel)[static_cast<std::size_t>(l)];
}

namespace detail {

inline Subproblem solve_subproblem(Subproblem sp, OrpSolveOptions opts, bool spread) {
  auto started = std::chrono::steady_clock::now();
  opts.spread_idle = spread;
  OrpSolution sol = solve_orp(sp.instance, opts);
  if (!sol.feasible) {
    int layer = sp.owner ? sp.owner->layer : sp.region_layer;
    int region = sp.owner ? sp.owner->index : -1;
    throw NeroInfeasible(layer, region, sol.first_violated_step, sol.infeasibility);
  }
  sp.policy = std::move(sol.policy);
  sp.arcs = sol.arcs;
  sp.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return sp;
}

// Runs jobs[k] for every k on up to `threads` workers; rethrows the first
// failure in job order.
template <class Job>
void run_parallel(std::size_t count, int threads, Job&& job) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t k = 0; k < count; ++k) job(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < count;) {
      try {
        job(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  for (int w = 0; w < std::min<int>(threads, static_cast<int>(count)); ++w) pool.emplace_back(worker);
  pool.clear();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

inline std::vector<LayerInfo> layer_info(const RegionTree& tree, const MeshConfig& cfg) {
  std::vector<LayerInfo> out;
  for (int k = 0; k < tree.depth(); ++k) {
    int steps = steps_for_cells(cfg, k, tree.layer(k).mesh_m, 1);
    out.push_back({k, tree.layer(k).mesh_m, steps, steps * cfg.step_min});
  }
  return out;
}

inline LayeredPolicy nero_solve(const RegionTree& tree, const DemandTensor& leaf_demand, const MeshConfig& cfg,
                                const NeroConfig& nc) {
  if (nc.K < 1 || nc.K > tree.depth()) throw ConfigError("K must lie between 1 and the tree depth");
  if (nc.v_max.horizon() != leaf_demand.horizon()) throw ConfigError("fleet schedule length differs from the demand horizon");
  auto started = std::chrono::steady_clock::now();
  LayeredPolicy lp;
  lp.K = nc.K;
  lp.top_layer = tree.depth() - nc.K;
  lp.step_min = cfg.step_min;
  lp.layers = layer_info(tree, cfg);
  lp.vehicles = nc.v_max.peak();
  const int T = leaf_demand.horizon();

  Subproblem top;
  top.region_layer = lp.top_layer;
  top.regions = tree.layer_ids(lp.top_layer);
  top.instance = {travel_matrix(tree, lp.top_layer, cfg), T, aggregate_to_layer(leaf_demand, tree, lp.top_layer),
                  VaryingFleet{nc.v_max}};
  const bool top_has_children = lp.top_layer < tree.leaf_layer();
  lp.subproblems.push_back(detail::solve_subproblem(std::move(top), nc.solve, nc.spread_idle && top_has_children));

  // Subproblems (indices into lp.subproblems) whose regions get children solved next.
  std::vector<std::size_t> level{0};
  for (int k = lp.top_layer; k < tree.leaf_layer(); ++k) {
    std::vector<Subproblem> jobs;
    for (std::size_t p : level) {
      const Subproblem& parent = lp.subproblems[p];
      auto schedules = fleet_schedules(parent.policy, parent.instance.travel);
      for (std::size_t pos = 0; pos < parent.regions.size(); ++pos) {
        RegionId l = parent.regions[pos];
        Subproblem sp;
        sp.owner = l;
        sp.region_layer = k + 1;
        sp.regions = tree.children(l);
        sp.instance = {travel_matrix(tree, sp.regions, cfg), T, aggregate_demand(leaf_demand, tree, l),
                       VaryingFleet{std::move(schedules[pos])}};
        jobs.push_back(std::move(sp));
      }
    }
    std::sort(jobs.begin(), jobs.end(), [](const Subproblem& a, const Subproblem& b) { return a.owner->index < b.owner->index; });
    std::vector<Subproblem> done(jobs.size());
    detail::run_parallel(jobs.size(), nc.threads,
                         [&](std::size_t j) {
                           const bool has_children = jobs[j].region_layer < tree.leaf_layer();
                           done[j] = detail::solve_subproblem(std::move(jobs[j]), nc.solve, nc.spread_idle && has_children);
                         });
    level.clear();
    for (auto& sp : done) {
      level.push_back(lp.subproblems.size());
      lp.subproblems.push_back(std::move(sp));
    }
  }
  lp.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return lp;
}

/// Single solve at the leaf layer with a fixed fleet.
inline OrpSolution sro_solve(const RegionTree& tree, const DemandTensor& leaf_demand, const MeshConfig& cfg,
                             std::int64_t vehicles, const OrpSolveOptions& opts = {}) {
  OrpInstance inst{travel_matrix(tree, tree.leaf_layer(), cfg), leaf_demand.horizon(), leaf_demand, FixedFleet{vehicles}};
  return solve_orp(inst, opts);
}

/// Single solve at the leaf layer with a time-varying fleet.
inline OrpSolution sro_solve(const RegionTree& tree, const DemandTensor& leaf_demand, const MeshConfig& cfg,
                             const FleetSchedule& schedule, const OrpSolveOptions& opts = {}) {
  OrpInstance inst{travel_matrix(tree, tree.leaf_layer(), cfg), leaf_demand.horizon(), leaf_demand, VaryingFleet{schedule}};
  return solve_orp(inst, opts);
}

// ---------------------------------------------------------------- accounting

struct RebalancingTime {
  double total_minutes = 0;
  double per_vehicle_minutes = 0;
  double per_trip_minutes = 0;  // per empty move between distinct regions
  double ratio = 0;             // per-vehicle minutes over the service window
  std::int64_t moves = 0;
  std::int64_t arrivals = 0;
  double service_minutes = 0;
  std::int64_t vehicles = 0;
};

namespace detail {

inline void accumulate(RebalancingTime& rt, const RebalancingPolicy& pol, const TravelMatrix& travel, double step_min,
                       double half_cell_minutes) {
  for (const auto& [k, v] : pol.xr) {
    auto [i, j, t] = k;
    if (i == j) continue;
    rt.total_minutes += static_cast<double>(v) * travel.t(i, j) * step_min;
    rt.moves += v;
  }
  for (int t = 1; t < pol.horizon; ++t)
    for (int i = 0; i < pol.n; ++i) {
      std::int64_t a = pol.arrivals(i, t);
      rt.total_minutes += static_cast<double>(a) * half_cell_minutes;
      rt.arrivals += a;
    }
}

inline void finish(RebalancingTime& rt, std::int64_t vehicles, double service_minutes) {
  rt.vehicles = vehicles;
  rt.service_minutes = service_minutes;
  rt.per_vehicle_minutes = vehicles > 0 ? rt.total_minutes / static_cast<double>(vehicles) : 0;
  rt.per_trip_minutes = rt.moves > 0 ? rt.total_minutes / static_cast<double>(rt.moves) : 0;
  rt.ratio = service_minutes > 0 ? rt.per_vehicle_minutes / service_minutes : 0;
}

}  // namespace detail

/// Empty driving time: every move between distinct regions costs its travel
/// time, and every vehicle entering a subproblem after the start is charged
/// half a cell of that subproblem's layer to reach the cell center.
inline RebalancingTime rebalancing_time(const LayeredPolicy& lp) {
  RebalancingTime rt;
  int T = 0;
  for (const auto& sp : lp.subproblems) {
    T = sp.policy.horizon;
    double tau_k = lp.layers.at(static_cast<std::size_t>(sp.region_layer)).tau_minutes;
    detail::accumulate(rt, sp.policy, sp.instance.travel, lp.step_min, tau_k / 2);
  }
  detail::finish(rt, lp.vehicles, T * lp.step_min);
  return rt;
}

inline RebalancingTime rebalancing_time(const RebalancingPolicy& pol, const TravelMatrix& travel, double step_min,
                                        std::int64_t vehicles, double half_cell_minutes = 0) {
  RebalancingTime rt;
  detail::accumulate(rt, pol, travel, step_min, half_cell_minutes);
  detail::finish(rt, vehicles, pol.horizon * step_min);
  return rt;
}

// ---------------------------------------------------------------- flattening

/// A move decided above the leaf layer, reported between the center leaves
/// of its two regions.
struct CoarseMove {
  char kind = 'r';  // 'r' empty move, 'p' passenger trips aggregated at that layer
  int layer = 0;
  int from = 0, to = 0;            // region indices at `layer`
  int from_leaf = 0, to_leaf = 0;  // center leaves
  int t = 0;
  int tau = 0;  // steps at `layer`
  std::int64_t count = 0;
};

struct FlatPolicy {
  RebalancingPolicy leaf;          // leaf-layer x^p and x^r; coarse moves appear between center leaves
  std::vector<CoarseMove> residue;  // the coarse moves with their own travel times
};

inline FlatPolicy flatten(const LayeredPolicy& lp, const RegionTree& tree) {
  const int n = tree.size(tree.leaf_layer());
  const int T = lp.top().policy.horizon;
  FlatPolicy out{RebalancingPolicy(n, T), {}};
  for (const auto& sp : lp.subproblems) {
    auto leaf_of = [&](int pos) {
      RegionId id = sp.regions[static_cast<std::size_t>(pos)];
      return id.layer == tree.leaf_layer() ? id.index : tree.center_leaf(id);
    };
    const bool at_leaves = sp.region_layer == tree.leaf_layer();
    for (char kind : {'p', 'r'}) {
      const auto& m = kind == 'p' ? sp.policy.xp : sp.policy.xr;
      auto& dst = kind == 'p' ? out.leaf.xp : out.leaf.xr;
      for (const auto& [k, v] : m) {
        auto [i, j, t] = k;
        if (!at_leaves && i == j) continue;  // handled inside the child subproblem
        detail::add_flow(dst, leaf_of(i), leaf_of(j), t, v);
        if (!at_leaves)
          out.residue.push_back({kind, sp.region_layer, sp.regions[static_cast<std::size_t>(i)].index,
                                 sp.regions[static_cast<std::size_t>(j)].index, leaf_of(i), leaf_of(j), t,
                                 sp.instance.travel.t(i, j), v});
      }
    }
    if (!sp.owner)
      for (int i = 0; i < sp.policy.n; ++i) out.leaf.s0[static_cast<std::size_t>(leaf_of(i))] += sp.policy.s0[static_cast<std::size_t>(i)];
  }
  out.leaf.objective = lp.objective();
  return out;
}

// ---------------------------------------------------------------- export

inline std::string subproblem_name(const Subproblem& sp) {
  if (!sp.owner) return "top_layer" + std::to_string(sp.region_layer);
  return "region_" + std::to_string(sp.owner->layer) + "_" + std::to_string(sp.owner->index);
}

/// One policy CSV per subproblem plus manifest.json in `dir`.
inline void write_layered_policy(const LayeredPolicy& lp, const std::string& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json subs = nlohmann::json::array();
  for (const auto& sp : lp.subproblems) {
    std::string file = subproblem_name(sp) + ".csv";
    write_policy_csv(sp.policy, (std::filesystem::path(dir) / file).string());
    const auto& sched = std::get<VaryingFleet>(sp.instance.fleet).schedule;
    subs.push_back({
        {"file", file},
        {"layer", sp.owner ? sp.owner->layer : sp.region_layer},
        {"region", sp.owner ? sp.owner->index : -1},
        {"region_layer", sp.region_layer},
        {"regions", sp.regions.size()},
        {"objective", sp.policy.objective.str()},
        {"objective_value", sp.policy.objective.to_double()},
        {"fleet_schedule", sched.v},
        {"solve_seconds", sp.seconds},
        {"arcs", sp.arcs},
    });
  }
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : lp.layers) layers.push_back({{"layer", l.layer}, {"mesh_m", l.mesh_m}, {"tau_steps", l.tau_steps}, {"tau_minutes", l.tau_minutes}});
  auto rt = rebalancing_time(lp);
  nlohmann::json manifest = {
      {"K", lp.K},
      {"top_layer", lp.top_layer},
      {"vehicles", lp.vehicles},
      {"objective", lp.objective().str()},
      {"solve_seconds", lp.solve_seconds},
      {"rebalancing_minutes", rt.total_minutes},
      {"rebalancing_ratio", rt.ratio},
      {"layers", layers},
      {"subproblems", subs},
  };
  std::ofstream os(std::filesystem::path(dir) / "manifest.json");
  if (!os) throw Error("cannot write manifest in " + dir);
  os << manifest.dump(2) << '\n';
}

}  // namespace nero
