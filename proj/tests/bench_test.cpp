#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "nero/bench.hpp"
#include "nero/config.hpp"

using namespace nero;

namespace {

const std::filesystem::path kConfigs = std::filesystem::path(NERO_SOURCE_DIR) / "configs";

std::filesystem::path temp_path(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

std::string temp_file(const std::string& name, const std::string& body) {
  auto p = temp_path(name);
  std::ofstream(p) << body;
  return p.string();
}

ExperimentSpec small_spec() {
  auto spec = load_experiment((kConfigs / "bench_desk.toml").string());
  spec.mesh.horizon_steps = 6;
  spec.intervals = 2;
  return spec;
}

}  // namespace

TEST(Config, DeskMeshFromToml) {
  auto cfg = load_mesh_config((kConfigs / "desk.toml").string());
  EXPECT_EQ(cfg.mesh_sizes_m, (std::vector<std::int64_t>{2000, 1000, 500}));
  EXPECT_DOUBLE_EQ(cfg.step_min, 3.0);
  auto tree = build_uniform_tree(cfg);
  EXPECT_EQ(tree.size(0), 4);
  EXPECT_EQ(tree.size(2), 64);
  EXPECT_EQ(steps_for_cells(cfg, 0, 2000, 1), 4);
  EXPECT_EQ(steps_for_cells(cfg, 2, 500, 1), 1);
}

TEST(Config, ManhattanMeshFromJson) {
  auto cfg = load_mesh_config((kConfigs / "manhattan_250.json").string());
  ASSERT_TRUE(cfg.geo.has_value());
  EXPECT_EQ(cfg.mesh_sizes_m.size(), 5U);
  EXPECT_EQ(cfg.horizon_steps, 40);
  EXPECT_EQ(cfg.window_start, "2016-05-03 00:00:00");
  EXPECT_EQ(steps_for_cells(cfg, 0, 4000, 1), 16);
  EXPECT_EQ(steps_for_cells(cfg, 4, 250, 1), 1);
  auto coarse = load_mesh_config((kConfigs / "manhattan_500.json").string());
  EXPECT_EQ(steps_for_cells(coarse, 3, 500, 1), 1);
  EXPECT_EQ(steps_for_cells(coarse, 0, 4000, 1), 8);
}

TEST(Config, TauOverrideResolvedNextToConfig) {
  auto dir = temp_path("nero_cfg_dir");
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "tau.csv") << "layer,i,j,tau_steps\n1,0,1,5\n";
  std::ofstream(dir / "mesh.toml") << "[mesh]\nbbox = { width_m = 2000, height_m = 1000 }\n"
                                      "mesh_sizes_m = [1000, 500]\nstep_min = 3\nhorizon_steps = 4\n"
                                      "tau_override = \"tau.csv\"\n";
  auto cfg = load_mesh_config((dir / "mesh.toml").string());
  auto tree = build_uniform_tree(cfg);
  auto m = travel_matrix(tree, 1, cfg);
  EXPECT_EQ(m.t(0, 1), 5);
  EXPECT_EQ(m.t(1, 0), steps_for_cells(cfg, 1, 500, 1));
  std::filesystem::remove_all(dir);
}

TEST(Config, RejectsMalformedDocuments) {
  EXPECT_THROW(load_mesh_config("/nonexistent/mesh.toml"), ConfigError);
  EXPECT_THROW(load_mesh_config(temp_file("nero_bad.toml", "[mesh\n")), ConfigError);
  EXPECT_THROW(load_mesh_config(temp_file("nero_bad.json", "{\"mesh_sizes_m\": [500]}")), ConfigError);
  EXPECT_THROW(load_mesh_config(temp_file("nero_bad2.json", "{\"bbox\": {\"width_m\": 1000, \"height_m\": 1000}, "
                                                             "\"mesh_sizes_m\": [500, 1000]}")),
               ConfigError);
  EXPECT_EQ(rational_value(nlohmann::json("1/3")), Rational(1, 3));
  EXPECT_EQ(rational_value(nlohmann::json(2)), Rational(2));
  EXPECT_THROW(rational_value(nlohmann::json::array()), ConfigError);
}

TEST(Bench, ParsesMethodNames) {
  auto s = parse_method("SRO^500");
  EXPECT_FALSE(s.nero);
  EXPECT_EQ(s.K, 1);
  EXPECT_EQ(s.leaf_m, 500);
  auto n = parse_method("NERO_4^250");
  EXPECT_TRUE(n.nero);
  EXPECT_EQ(n.K, 4);
  EXPECT_EQ(n.leaf_m, 250);
  EXPECT_THROW(parse_method("SRO"), ConfigError);
  EXPECT_THROW(parse_method("LP^500"), ConfigError);
  EXPECT_THROW(parse_method("NERO_x^500"), ConfigError);
  EXPECT_THROW(parse_method("NERO_0^500"), ConfigError);
}

TEST(Bench, LoadsShippedExperiments) {
  auto desk = load_experiment((kConfigs / "bench_desk.toml").string());
  EXPECT_EQ(desk.methods.size(), 3U);
  EXPECT_EQ(desk.headroom, Rational(3));
  EXPECT_EQ(desk.intervals, 4);
  EXPECT_NO_THROW(desk.validate());
  for (const char* name : {"bench_nyc_500.toml", "bench_nyc_250.toml"}) {
    auto nyc = load_experiment((kConfigs / name).string());
    EXPECT_EQ(nyc.data.kind, "csv");
    EXPECT_TRUE(nyc.data.prune);
    EXPECT_EQ(nyc.intervals, 24);
    EXPECT_NO_THROW(nyc.validate());
  }
  auto nyc = load_experiment((kConfigs / "bench_nyc_500.toml").string());
  EXPECT_EQ(nyc.depth_for(parse_method("SRO^2000")), 2);
  EXPECT_EQ(nyc.depth_for(parse_method("NERO_4^500")), 4);
  EXPECT_THROW((void)nyc.depth_for(parse_method("SRO^250")), ConfigError);
}

TEST(Bench, RejectsInconsistentExperiments) {
  auto spec = small_spec();
  spec.methods = {parse_method("NERO_4^500")};
  EXPECT_THROW(spec.validate(), ConfigError);
  spec = small_spec();
  spec.headroom = Rational(1, 2);
  EXPECT_THROW(spec.validate(), ConfigError);
  spec = small_spec();
  spec.data.kind = "csv";
  EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(Bench, SummaryUsesSuccessfulRowsOnly) {
  std::vector<RunRow> rows(4);
  rows[0].method = rows[1].method = rows[2].method = "A";
  rows[3].method = "B";
  rows[0].ratio = 0.1;
  rows[1].ratio = 0.3;
  rows[2].status = "infeasible";
  rows[2].ratio = 9;
  rows[3].ratio = 0.5;
  auto s = summarize(rows);
  ASSERT_EQ(s.size(), 2U);
  EXPECT_EQ(s[0].method, "A");
  EXPECT_EQ(s[0].runs, 3);
  EXPECT_EQ(s[0].ok, 2);
  EXPECT_NEAR(s[0].mean_ratio, 0.2, 1e-12);
  EXPECT_NEAR(s[0].sd_ratio, std::sqrt(0.02), 1e-12);
  EXPECT_EQ(s[1].ok, 1);
  EXPECT_DOUBLE_EQ(s[1].sd_ratio, 0.0);
}

TEST(Bench, EmptyIntervalCostsNothing) {
  auto spec = small_spec();
  auto tree = build_uniform_tree(spec.mesh);
  DemandTensor empty(tree.size(2), spec.mesh.horizon_steps, 2);
  for (const auto& m : spec.methods) {
    auto row = run_method(tree, empty, spec.mesh, m, 3, 1, 60);
    EXPECT_EQ(row.status, "ok") << m.name << ": " << row.detail;
    EXPECT_EQ(row.objective, "0");
    EXPECT_DOUBLE_EQ(row.ratio, 0.0);
    EXPECT_EQ(row.trips, 0);
  }
}

TEST(Bench, RunIsDeterministic) {
  auto spec = small_spec();
  auto a = run(spec);
  auto b = run(spec);
  ASSERT_EQ(a.rows.size(), spec.methods.size() * 2);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    EXPECT_EQ(a.rows[k].status, "ok") << a.rows[k].detail;
    EXPECT_EQ(a.rows[k].objective, b.rows[k].objective);
    EXPECT_GT(a.rows[k].trips, 0);
  }
  EXPECT_EQ(a.summary.size(), spec.methods.size());
  EXPECT_EQ(a.rows[0].subproblems, 1);
  EXPECT_GT(a.rows[2].subproblems, 1);
}

TEST(Bench, CoarseMethodSeesAggregatedDemand) {
  auto spec = small_spec();
  auto w = prepare_workload(spec, 0);
  auto row = run_method(w.tree, w.windows[0], spec.mesh, parse_method("SRO^1000"), 40, 1, 60);
  EXPECT_EQ(row.leaves, 16);
  EXPECT_EQ(row.trips, w.windows[0].total());
}

TEST(Bench, CsvWorkloadSplitsIntoWindows) {
  ExperimentSpec spec;
  spec.mesh.width_m = spec.mesh.height_m = 2000;
  spec.mesh.mesh_sizes_m = {1000};
  spec.mesh.step_min = 5;
  spec.mesh.horizon_steps = 2;
  spec.mesh.window_start = "2020-01-01 00:00:00";
  spec.methods = {parse_method("SRO^1000")};
  spec.intervals = 2;
  spec.data.kind = "csv";
  spec.data.prune = true;
  spec.data.path = temp_file("nero_bench_trips.csv",
                             "pickup_datetime,pickup_longitude,pickup_latitude,dropoff_longitude,dropoff_latitude\n"
                             "2020-01-01 00:01:00,100,100,1500,100\n"
                             "2020-01-01 00:12:00,1500,100,100,100\n"
                             "2020-01-01 00:16:00,100,100,1500,100\n"
                             "2020-01-01 00:25:00,100,100,1500,100\n");
  auto w = prepare_workload(spec, 0);
  ASSERT_EQ(w.windows.size(), 2U);
  EXPECT_EQ(w.tree.size(0), 2);
  EXPECT_EQ(w.windows[0].total(), 1);
  EXPECT_EQ(w.windows[1].total(), 2);
  auto report = run(spec);
  for (const auto& r : report.rows) EXPECT_EQ(r.status, "ok") << r.detail;
}

TEST(Bench, SmallSweepAndOutputFiles) {
  SweepSpec s;
  s.leaves = {16, 64};
  s.ks = {1, 2};
  s.horizon = 6;
  int seen = 0;
  auto res = scaling_sweep(s, [&](const SweepPoint&) { ++seen; });
  EXPECT_EQ(seen, 4);
  ASSERT_NE(res.find(64, 2), nullptr);
  EXPECT_EQ(res.find(64, 2)->method, "NERO_2");
  EXPECT_EQ(res.find(16, 1)->method, "SRO");
  for (const auto& p : res.points) EXPECT_EQ(p.status, "ok");
  EXPECT_EQ(res.slopes.size(), 2U);
  EXPECT_THROW(sweep_mesh(SweepSpec{.leaves = {}, .M = 3}, 16), ConfigError);

  auto dir = temp_path("nero_bench_out");
  std::filesystem::remove_all(dir);
  emit(res, dir.string());
  for (const char* f : {"sweep.csv", "sweep.json", "sweep.dat"}) EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  RunReport report;
  report.name = "x";
  report.rows.resize(1);
  report.rows[0].method = "SRO^500";
  report.rows[0].detail = "a, \"b\"";
  report.summary = summarize(report.rows);
  emit(report, dir.string());
  for (const char* f : {"runs.csv", "summary.json", "methods.dat"}) EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  auto j = nlohmann::json::parse(std::ifstream(dir / "summary.json"));
  EXPECT_EQ(j.at("name"), "x");
  EXPECT_EQ(csv_quote("a, \"b\""), "\"a, \"\"b\"\"\"");
  std::filesystem::remove_all(dir);
}
