#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nero/mcf/max_flow.hpp"
#include "nero/mcf/network.hpp"
#include "nero/mcf/network_simplex.hpp"
#include "nero/mcf/oracle.hpp"
#include "nero/mcf/ssp.hpp"

namespace nero::mcf {

enum class Status { Optimal, Infeasible };
enum class Algorithm { NetworkSimplex, SuccessiveShortestPaths };

inline const char* to_string(Algorithm a) {
  return a == Algorithm::NetworkSimplex ? "network-simplex" : "successive-shortest-paths";
}

struct SolveStats {
  std::int64_t iterations = 0;
  double seconds = 0;
  std::string algorithm;
};

struct SolveResult {
  Status status = Status::Infeasible;
  std::vector<std::int64_t> flow;       // per arc, original bounds
  std::int64_t cost = 0;                // sum of flow * cost
  std::vector<std::int64_t> potential;  // node potentials proving optimality
  InfeasibilityCertificate certificate;
  SolveStats stats;
};

struct SolveOptions {
  Algorithm algorithm = Algorithm::NetworkSimplex;
  Deadline deadline;
};

/// Exact integral min-cost flow. Lower bounds are shifted into supplies, a
/// max-flow pass decides feasibility (and yields the certificate when it
/// fails), then the chosen algorithm optimizes.
inline SolveResult solve(const FlowNetwork& net, const SolveOptions& options = {}) {
  auto started = std::chrono::steady_clock::now();
  net.validate();
  (void)cost_magnitude_bound(net);

  ReducedNetwork reduced = lower_bounds_transform(net);
  SolveResult result;
  result.stats.algorithm = to_string(options.algorithm);
  FeasibilityResult feasibility = saturate_supplies(net, reduced.net, options.deadline);
  if (!feasibility.feasible) {
    result.status = Status::Infeasible;
    result.certificate = std::move(feasibility.certificate);
    result.stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
  }

  std::vector<std::int64_t> reduced_flow;
  if (options.algorithm == Algorithm::NetworkSimplex) {
    NetworkSimplex simplex(reduced.net);
    SimplexOutcome o = simplex.run(options.deadline);
    if (!o.feasible) throw ModelError("network simplex left artificial flow on a feasible network");
    reduced_flow = std::move(o.flow);
    result.potential = std::move(o.potential);
    result.stats.iterations = o.pivots;
  } else {
    SuccessiveShortestPaths ssp(reduced.net);
    SspOutcome o = ssp.run(options.deadline);
    if (!o.feasible) throw ModelError("shortest-path augmentation failed on a feasible network");
    reduced_flow = std::move(o.flow);
    result.potential = std::move(o.potential);
    result.stats.iterations = o.augmentations;
  }
  result.flow = restore_lower_bounds(net, reduced_flow);
  result.cost = flow_cost(net, result.flow);
  result.status = Status::Optimal;
  result.stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

/// Brute-force optimum for tiny acyclic networks; refuses instead of approximating.
inline SolveResult oracle_solve(const FlowNetwork& net, const OracleLimits& limits = {}) {
  auto started = std::chrono::steady_clock::now();
  ExhaustiveOracle oracle(net, limits);
  OracleOutcome o = oracle.run();
  SolveResult result;
  result.stats.algorithm = "exhaustive-oracle";
  result.stats.iterations = o.states;
  if (o.feasible) {
    result.status = Status::Optimal;
    result.flow = std::move(o.flow);
    result.cost = o.cost;
  }
  result.stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

/// Complementary-slackness audit with reduced cost c + pi(tail) - pi(head):
/// an arc above its lower bound needs reduced cost <= 0, an arc below its
/// capacity needs reduced cost >= 0. Returns the first offending arc, if any.
inline std::optional<int> slackness_violation(const FlowNetwork& net, const SolveResult& r) {
  for (int a = 0; a < net.arc_count(); ++a) {
    const Arc& arc = net.arcs[static_cast<std::size_t>(a)];
    std::int64_t rc = checked_sub(checked_add(arc.cost, r.potential[static_cast<std::size_t>(arc.tail)]),
                                  r.potential[static_cast<std::size_t>(arc.head)]);
    std::int64_t f = r.flow[static_cast<std::size_t>(a)];
    if (f > arc.lower && rc > 0) return a;
    if (f < arc.capacity && rc < 0) return a;
  }
  return std::nullopt;
}

}  // namespace nero::mcf
