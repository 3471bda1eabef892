#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "nero/demand.hpp"
#include "nero/region_tree.hpp"

using namespace nero;

namespace {

MeshConfig square(double side, std::vector<std::int64_t> meshes) {
  MeshConfig cfg;
  cfg.width_m = side;
  cfg.height_m = side;
  cfg.mesh_sizes_m = std::move(meshes);
  cfg.v_avg_mps = 5.5;
  cfg.step_min = 3;
  cfg.horizon_steps = 4;
  return cfg;
}

std::string temp_file(const std::string& name, const std::string& body) {
  auto path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream(path) << body;
  return path;
}

}  // namespace

TEST(RegionTree, TwoByTwoRefinement) {
  auto tree = build_uniform_tree(square(1000, {1000, 500}));
  EXPECT_EQ(tree.size(0), 1);
  EXPECT_EQ(tree.size(1), 4);
  ASSERT_TRUE(tree.branching());
  EXPECT_EQ(*tree.branching(), 4);
  auto kids = tree.children({0, 0});
  ASSERT_EQ(kids.size(), 4u);
  std::vector<std::pair<int, int>> cells;
  for (auto k : kids) cells.emplace_back(tree.region(k).row, tree.region(k).col);
  EXPECT_EQ(cells, (std::vector<std::pair<int, int>>{{0, 0}, {0, 1}, {1, 0}, {1, 1}}));
  for (auto k : kids) EXPECT_EQ(tree.parent(k), (RegionId{0, 0}));
}

TEST(RegionTree, LeafAndRootErrors) {
  auto tree = build_uniform_tree(square(1000, {1000, 500}));
  EXPECT_THROW((void)tree.children({1, 2}), TreeError);
  EXPECT_THROW((void)tree.parent({0, 0}), TreeError);
}

TEST(RegionTree, NonNestedMeshesAreRejected) {
  EXPECT_THROW(build_uniform_tree(square(3000, {500, 300})), MeshError);
  EXPECT_THROW(build_uniform_tree(square(1000, {500, 500})), ConfigError);
}

TEST(RegionTree, MiddleLayerHasMChildren) {
  auto tree = build_uniform_tree(square(4000, {2000, 1000, 500}));
  EXPECT_EQ(tree.size(2), tree.size(0) * 16);
  for (int i = 0; i < tree.size(1); ++i) {
    auto kids = tree.children({1, i});
    EXPECT_EQ(kids.size(), 4u);
    for (auto k : kids) {
      EXPECT_EQ(tree.parent(k).index, i);
      // geometric containment: the child cell lies inside the parent cell
      auto [cx, cy] = tree.center(k);
      const auto& p = tree.region({1, i});
      EXPECT_GE(cx, p.col * 1000.0);
      EXPECT_LT(cx, (p.col + 1) * 1000.0);
      EXPECT_GE(cy, p.row * 1000.0);
      EXPECT_LT(cy, (p.row + 1) * 1000.0);
    }
  }
}

TEST(TravelMatrix, OffsetTwoOneTakesTwoSteps) {
  auto cfg = square(1500, {500});
  auto tree = build_uniform_tree(cfg);
  // rows 0 and 1 apart by one, cols 0 and 2 apart by two: L1 = 1500 m.
  int a = 0 * 3 + 0, b = 1 * 3 + 2;
  auto m = travel_matrix(tree, 0, cfg);
  double raw_s = 1500.0 / 5.5;
  EXPECT_NEAR(raw_s, 272.7, 0.05);
  EXPECT_EQ(m.t(a, b), static_cast<int>(std::ceil(raw_s / 180.0)));
  EXPECT_EQ(m.t(a, b), 2);
  EXPECT_EQ(m.t(a, a), 1);
  EXPECT_EQ(m.c(a, a), 0);
  EXPECT_EQ(m.cost(a, b), Rational(2));
}

TEST(TravelMatrix, SymmetricWithTriangleSlack) {
  auto cfg = square(4000, {500});
  cfg.step_min = 1;
  auto tree = build_uniform_tree(cfg);
  auto m = travel_matrix(tree, 0, cfg);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) {
      EXPECT_EQ(m.t(i, j), m.t(j, i));
      for (int k = 0; k < m.n; k += 7) EXPECT_LE(m.t(i, k), m.t(i, j) + m.t(j, k) + 1);
    }
}

TEST(TravelMatrix, AdjacentCellsUnderTabulatedTimes) {
  auto cfg = square(4000, {2000, 1000});
  cfg.adjacent_tau_min = {12, 6};
  cfg.step_min = 6;
  auto tree = build_uniform_tree(cfg);
  auto m = travel_matrix(tree, 1, cfg);
  EXPECT_EQ(m.t(0, 1), 1);
  EXPECT_EQ(m.t(0, 2), 2);
}

TEST(TravelMatrix, OverridesAndMixedLayers) {
  auto cfg = square(1000, {1000, 500});
  cfg.tau_override[{1, 0, 3}] = 7;
  auto tree = build_uniform_tree(cfg);
  auto m = travel_matrix(tree, 1, cfg);
  EXPECT_EQ(m.t(0, 3), 7);
  EXPECT_EQ(m.t(3, 0), 2);  // 1000 m at 5.5 m/s is just over one 3-minute step
  std::vector<RegionId> mixed{{0, 0}, {1, 0}};
  EXPECT_THROW(travel_matrix(tree, mixed, cfg), MeshError);
}

TEST(Pruning, KeepsOnlyUsedLeavesAndAncestors) {
  auto tree = build_uniform_tree(square(4000, {2000, 1000}));
  DemandTensor d(tree.size(1), 3, 1);
  d.add(0, 5, 0);
  d.add(5, 0, 2, 3);
  auto pruned = prune_empty_regions(tree, d);
  EXPECT_EQ(pruned.tree.size(1), 2);
  EXPECT_EQ(pruned.demand.total(), 4);
  for (int i = 0; i < pruned.tree.size(1); ++i) {
    auto p = pruned.tree.parent({1, i});
    auto kids = pruned.tree.children(p);
    EXPECT_NE(std::find(kids.begin(), kids.end(), RegionId{1, i}), kids.end());
  }
  EXPECT_THROW(prune_empty_regions(tree, DemandTensor(tree.size(1), 3, 1)), TreeError);
}

TEST(Demand, AggregationConservesTotals) {
  auto tree = build_uniform_tree(square(4000, {2000, 1000, 500}));
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    auto leaf = synth_demand({.seed = rng(), .n_regions = tree.size(2), .horizon = 6, .intensity = 0.4, .layer = 2});
    for (int k = 0; k < 3; ++k) EXPECT_EQ(aggregate_to_layer(leaf, tree, k).total(), leaf.total());
    for (int k = 0; k < 2; ++k) {
      std::int64_t inside = 0;
      for (int l = 0; l < tree.size(k); ++l) {
        auto agg = aggregate_demand(leaf, tree, {k, l});
        auto mine = tree.leaves_under({k, l});
        std::int64_t expect = 0;
        for (const auto& [key, c] : leaf.entries())
          if (std::binary_search(mine.begin(), mine.end(), std::get<0>(key)) &&
              std::binary_search(mine.begin(), mine.end(), std::get<1>(key)))
            expect += c;
        EXPECT_EQ(agg.total(), expect);
        inside += agg.total();
      }
      EXPECT_LE(inside, leaf.total());
    }
  }
}

TEST(Demand, AggregationKeepsIntraChildTrips) {
  auto tree = build_uniform_tree(square(1000, {1000, 500, 250}));
  DemandTensor leaf(tree.size(2), 2, 2);
  auto under0 = tree.leaves_under({1, 0});
  auto under3 = tree.leaves_under({1, 3});
  leaf.add(under0[0], under0[3], 0);
  leaf.add(under0[1], under3[2], 1);
  auto agg = aggregate_demand(leaf, tree, {0, 0});
  EXPECT_EQ(agg.at(0, 0, 0), 1);
  EXPECT_EQ(agg.at(0, 3, 1), 1);
  EXPECT_EQ(agg.total(), 2);
  EXPECT_THROW(aggregate_demand(leaf, tree, {0, 4}), TreeError);
}

TEST(Demand, SynthIsPure) {
  SynthParams p{.seed = 9, .n_regions = 16, .horizon = 8, .intensity = 0.7, .imbalance = 0.4};
  EXPECT_EQ(synth_demand(p), synth_demand(p));
  p.seed = 10;
  EXPECT_FALSE(synth_demand(p) == synth_demand({.seed = 9, .n_regions = 16, .horizon = 8, .intensity = 0.7,
                                                .imbalance = 0.4}));
}

TEST(Demand, FleetFromDemandCoversTripSpan) {
  auto m = TravelMatrix::from_tau(2, {1, 2, 2, 1}, Rational(1));
  DemandTensor d(2, 5);
  EXPECT_EQ(fleet_from_demand(d, m, Rational(11, 10)).v, (std::vector<std::int64_t>{0, 0, 0, 0, 0}));
  d.add(0, 1, 1);
  EXPECT_EQ(fleet_from_demand(d, m, Rational(11, 10)).v, (std::vector<std::int64_t>{0, 2, 2, 0, 0}));
  EXPECT_THROW(fleet_from_demand(d, m, Rational(9, 10)), DemandError);
}

TEST(Demand, CsvRoundTrip) {
  DemandTensor d(3, 4, 2, "leaf");
  d.add(0, 2, 1, 5);
  d.add(2, 2, 3);
  auto path = (std::filesystem::temp_directory_path() / "nero_demand_roundtrip.csv").string();
  write_demand_csv(d, path);
  EXPECT_EQ(read_demand_csv(path, 3, 4), d);
  std::filesystem::remove(path);
}

TEST(Ingest, BinsTripsAndCountsDrops) {
  MeshConfig cfg;
  cfg.geo = GeoBox{40.70, -74.02, 40.72, -73.99};
  cfg.mesh_sizes_m = {1000, 500};
  cfg.step_min = 10;
  cfg.horizon_steps = 6;
  cfg.window_start = "2016-05-03 00:00:00";
  auto tree = build_uniform_tree(cfg);
  auto path = temp_file("nero_trips.csv",
                        "VendorID,pickup_datetime,pickup_longitude,pickup_latitude,dropoff_longitude,dropoff_latitude\n"
                        "1,2016-05-03 00:00:00,-74.015,40.701,-74.015,40.701\n"
                        "1,2016-05-03 00:25:10,-74.015,40.701,-73.995,40.715\n"
                        "1,2016-05-03 00:25:59,-74.015,40.701,-73.995,40.715\n"
                        "1,2016-05-03 02:00:00,-74.015,40.701,-73.995,40.715\n"
                        "1,2016-05-03 00:05:00,-75.000,40.701,-73.995,40.715\n"
                        "1,garbage,-74.015,40.701,-73.995,40.715\n");
  auto res = ingest_trips(path, cfg, tree);
  EXPECT_EQ(res.report.rows, 6);
  EXPECT_EQ(res.report.retained, 3);
  EXPECT_EQ(res.report.outside_window, 1);
  EXPECT_EQ(res.report.outside_bbox, 1);
  EXPECT_EQ(res.report.unparseable, 1);
  EXPECT_EQ(res.report.retained + res.report.dropped(), res.report.rows);
  auto o = *tree.locate_leaf(cfg.project(40.701, -74.015).first, cfg.project(40.701, -74.015).second);
  auto dd = *tree.locate_leaf(cfg.project(40.715, -73.995).first, cfg.project(40.715, -73.995).second);
  EXPECT_EQ(res.demand.at(o, o, 0), 1);
  EXPECT_EQ(res.demand.at(o, dd, 2), 2);
  std::filesystem::remove(path);
}

TEST(Ingest, RowOrderDoesNotMatter) {
  MeshConfig cfg;
  cfg.width_m = 2000;
  cfg.height_m = 2000;
  cfg.mesh_sizes_m = {1000};
  cfg.horizon_steps = 3;
  cfg.window_start = "2020-01-01 00:00:00";
  auto tree = build_uniform_tree(cfg);
  std::string header = "pickup_datetime,pickup_longitude,pickup_latitude,dropoff_longitude,dropoff_latitude\n";
  std::string r1 = "2020-01-01 00:01:00,100,100,1500,1500\n", r2 = "2020-01-01 00:04:00,1500,100,100,1500\n";
  auto a = ingest_trips(temp_file("nero_a.csv", header + r1 + r2), cfg, tree);
  auto b = ingest_trips(temp_file("nero_b.csv", header + r2 + r1), cfg, tree);
  EXPECT_EQ(a.demand, b.demand);
  EXPECT_THROW(ingest_trips(temp_file("nero_c.csv", "a,b\n1,2\n"), cfg, tree), DemandError);
  EXPECT_THROW(ingest_trips("/nonexistent/trips.csv", cfg, tree), DemandError);
}
