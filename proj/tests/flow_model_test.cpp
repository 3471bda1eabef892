#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "nero/flow_model.hpp"

using namespace nero;

namespace {

TravelMatrix uniform_travel(int n, int tau, std::int64_t cost_per_step = 1) {
  std::vector<int> t(static_cast<std::size_t>(n * n), tau);
  for (int i = 0; i < n; ++i) t[static_cast<std::size_t>(i * n + i)] = 1;
  return TravelMatrix::from_tau(n, std::move(t), Rational(cost_per_step));
}

OrpInstance two_region(int T, std::int64_t V) {
  OrpInstance inst;
  inst.travel = uniform_travel(2, 1);
  inst.horizon = T;
  inst.demand = DemandTensor(2, T);
  inst.fleet = FixedFleet{V};
  return inst;
}

}  // namespace

TEST(FlowModel, NoDemandCostsNothing) {
  auto inst = two_region(4, 3);
  auto sol = solve_orp(inst);
  ASSERT_TRUE(sol.feasible);
  EXPECT_EQ(sol.policy.objective, Rational(0));
  std::int64_t placed = 0;
  for (auto s : sol.policy.s0) placed += s;
  EXPECT_EQ(placed, 3);
  for (const auto& [k, v] : sol.policy.xr) EXPECT_EQ(std::get<0>(k), std::get<1>(k));
}

TEST(FlowModel, BackToBackTripsNeedTwoVehicles) {
  auto inst = two_region(3, 1);
  inst.demand.add(0, 1, 0);
  inst.demand.add(0, 1, 1);
  auto one = solve_orp(inst);
  EXPECT_FALSE(one.feasible);
  EXPECT_EQ(one.first_violated_step, 1);
  EXPECT_NE(one.infeasibility.find("0->1@"), std::string::npos);

  inst.fleet = FixedFleet{2};
  auto two = solve_orp(inst);
  ASSERT_TRUE(two.feasible);
  EXPECT_EQ(two.policy.objective, Rational(0));
}

TEST(FlowModel, SpacedTripsRebalanceOnce) {
  auto inst = two_region(3, 1);
  inst.demand.add(0, 1, 0);
  inst.demand.add(0, 1, 2);
  auto sol = solve_orp(inst);
  ASSERT_TRUE(sol.feasible);
  EXPECT_EQ(sol.policy.objective, Rational(1));
  EXPECT_EQ(sol.policy.rebalancing(1, 0, 1), 1);
  EXPECT_EQ(sol.policy.s0[0], 1);
}

TEST(FlowModel, FractionalCostsStayExact) {
  auto inst = two_region(3, 1);
  inst.travel = TravelMatrix::from_tau(2, {1, 1, 1, 1}, Rational(1, 3));
  inst.demand.add(0, 1, 0);
  inst.demand.add(0, 1, 2);
  auto sol = solve_orp(inst);
  ASSERT_TRUE(sol.feasible);
  EXPECT_EQ(sol.policy.objective, Rational(1, 3));
}

TEST(FlowModel, VaryingFleetBoundaryTotals) {
  OrpInstance inst;
  inst.travel = uniform_travel(2, 1);
  inst.horizon = 3;
  inst.demand = DemandTensor(2, 3);
  inst.fleet = VaryingFleet{{{2, 2, 0}}};
  auto sol = solve_orp(inst);
  ASSERT_TRUE(sol.feasible);
  EXPECT_EQ(sol.policy.objective, Rational(0));
  EXPECT_EQ(sol.policy.arrivals(0, 0) + sol.policy.arrivals(1, 0), 2);
  EXPECT_EQ(sol.policy.departures(0, 2) + sol.policy.departures(1, 2), 2);
}

TEST(FlowModel, VaryingFleetSingleRegionGrowth) {
  OrpInstance inst;
  inst.travel = uniform_travel(1, 1);
  inst.horizon = 2;
  inst.demand = DemandTensor(1, 2);
  inst.fleet = VaryingFleet{{{1, 2}}};
  auto sol = solve_orp(inst);
  ASSERT_TRUE(sol.feasible);
  EXPECT_EQ(sol.policy.arrivals(0, 1), 1);
}

TEST(FlowModel, VaryingFleetCanBeStarved) {
  // Demand at step 0 but the schedule only admits a vehicle at step 1.
  OrpInstance inst;
  inst.travel = uniform_travel(2, 1);
  inst.horizon = 3;
  inst.demand = DemandTensor(2, 3);
  inst.demand.add(0, 1, 0);
  inst.fleet = VaryingFleet{{{0, 1, 1}}};
  auto sol = solve_orp(inst);
  EXPECT_FALSE(sol.feasible);
  EXPECT_EQ(sol.first_violated_step, 0);
}

TEST(FlowModel, WrongFleetKindIsRejected) {
  auto inst = two_region(3, 1);
  EXPECT_THROW(build_varying_fleet(inst), ModelError);
  inst.fleet = VaryingFleet{{{1, 1}}};  // wrong length
  EXPECT_THROW(build_network(inst), ModelError);
}

TEST(FlowModel, TripsRunningPastTheHorizonAreServed) {
  auto inst = two_region(2, 1);
  inst.travel = uniform_travel(2, 5);
  inst.demand.add(0, 1, 1);
  auto sol = solve_orp(inst);
  ASSERT_TRUE(sol.feasible);
  EXPECT_EQ(sol.policy.passengers(0, 1, 1), 1);
}

TEST(FlowModel, PruningLateMovesKeepsTheOptimum) {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 60; ++rep) {
    int n = 3 + static_cast<int>(rng() % 4), T = 4 + static_cast<int>(rng() % 4);
    auto demand = synth_demand({.seed = rng(), .n_regions = n, .horizon = T, .intensity = 0.6});
    std::vector<int> tau(static_cast<std::size_t>(n * n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) tau[static_cast<std::size_t>(i * n + j)] = i == j ? 1 : 1 + static_cast<int>(rng() % 3);
    OrpInstance inst{TravelMatrix::from_tau(n, tau, Rational(1)), T, demand, FixedFleet{8}};
    OrpSolveOptions full;
    full.build.prune_late_rebalancing = false;
    auto a = solve_orp(inst);
    auto b = solve_orp(inst, full);
    ASSERT_EQ(a.feasible, b.feasible);
    if (a.feasible) {
      EXPECT_EQ(a.policy.objective, b.policy.objective);
      EXPECT_LE(a.arcs, b.arcs);
    }
  }
}

TEST(FlowModel, ConstantScheduleMatchesFixedFleet) {
  std::mt19937_64 rng(37);
  for (int rep = 0; rep < 80; ++rep) {
    int n = 2 + static_cast<int>(rng() % 5), T = 2 + static_cast<int>(rng() % 6);
    auto demand = synth_demand({.seed = rng(), .n_regions = n, .horizon = T, .intensity = 0.5, .imbalance = 0.6});
    auto travel = uniform_travel(n, 1 + static_cast<int>(rng() % 2));
    std::int64_t V = 1 + static_cast<std::int64_t>(rng() % 6);
    OrpInstance fixed{travel, T, demand, FixedFleet{V}};
    OrpInstance varying{travel, T, demand, VaryingFleet{FleetSchedule::constant(T, V)}};
    auto a = solve_orp(fixed);
    auto b = solve_orp(varying);
    ASSERT_EQ(a.feasible, b.feasible);
    if (a.feasible) {
      EXPECT_EQ(a.policy.objective, b.policy.objective);
    }
  }
}

TEST(FlowModel, ValidatorCatchesConstructedViolations) {
  auto inst = two_region(3, 1);
  inst.demand.add(0, 1, 0);
  inst.demand.add(0, 1, 2);
  auto pol = solve_orp(inst).policy;
  ASSERT_TRUE(validate_policy(inst, pol).ok());

  auto missing = pol;
  missing.xp[{0, 1, 2}] -= 1;
  auto r1 = validate_policy(inst, missing);
  EXPECT_FALSE(r1.family("demand").ok);
  EXPECT_EQ(r1.family("demand").first_violation, "(i=0, j=1, t=2)");

  auto extra = pol;
  extra.s0[1] += 1;  // one more vehicle than the fleet
  extra.xr[{1, 1, 0}] += 1;
  extra.xr[{1, 1, 1}] += 1;
  extra.xr[{1, 1, 2}] += 1;
  auto r2 = validate_policy(inst, extra);
  EXPECT_TRUE(r2.family("conservation").ok);
  EXPECT_FALSE(r2.family("fleet").ok);

  auto cheap = pol;
  cheap.objective = Rational(0);
  EXPECT_FALSE(validate_policy(inst, cheap).family("objective").ok);

  auto leak = pol;
  leak.xr[{1, 0, 1}] = 0;
  EXPECT_FALSE(validate_policy(inst, leak).family("conservation").ok);
}

TEST(FlowModel, ValidatorCatchesBoundaryMistakes) {
  OrpInstance inst;
  inst.travel = uniform_travel(2, 1);
  inst.horizon = 3;
  inst.demand = DemandTensor(2, 3);
  inst.fleet = VaryingFleet{{{1, 2, 2}}};
  auto pol = solve_orp(inst).policy;
  ASSERT_TRUE(validate_policy(inst, pol).ok());
  auto off = pol;
  // one arrival too many at step 1, kept flow-consistent by idling it away
  off.xa[static_cast<std::size_t>(1 * 2 + 0)] += 1;
  off.xr[{0, 0, 1}] += 1;
  off.xr[{0, 0, 2}] += 1;
  auto r = validate_policy(inst, off);
  EXPECT_TRUE(r.family("conservation").ok);
  EXPECT_FALSE(r.family("boundary").ok);
  EXPECT_FALSE(r.family("fleet").ok);
}

TEST(FlowModel, PolicyCsvRoundTrip) {
  auto inst = two_region(3, 2);
  inst.demand.add(0, 1, 0);
  inst.demand.add(1, 0, 1, 2);
  auto pol = solve_orp(inst).policy;
  auto path = (std::filesystem::temp_directory_path() / "nero_policy_roundtrip.csv").string();
  write_policy_csv(pol, path);
  auto back = read_policy_csv(path, 2, 3);
  back.objective = pol.objective;
  EXPECT_EQ(back, pol);
  auto summary = policy_summary(pol);
  EXPECT_EQ(summary["totals"]["p"], 3);
  EXPECT_EQ(summary["totals"]["s0"], 2);
  std::filesystem::remove(path);
}

TEST(FlowModel, AlgorithmsAgreeOnPolicies) {
  std::mt19937_64 rng(41);
  for (int rep = 0; rep < 40; ++rep) {
    int n = 4 + static_cast<int>(rng() % 6), T = 6;
    auto demand = synth_demand({.seed = rng(), .n_regions = n, .horizon = T, .intensity = 0.7, .imbalance = 0.5});
    OrpInstance inst{uniform_travel(n, 2), T, demand, FixedFleet{20}};
    OrpSolveOptions ssp;
    ssp.algorithm = mcf::Algorithm::SuccessiveShortestPaths;
    auto a = solve_orp(inst);
    auto b = solve_orp(inst, ssp);
    ASSERT_EQ(a.feasible, b.feasible);
    if (a.feasible) {
      EXPECT_EQ(a.policy.objective, b.policy.objective);
    }
  }
}
