// nero: command-line front end for ingestion, single solves, experiments,
// scaling sweeps and policy validation.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "nero/bench.hpp"
#include "nero/config.hpp"
#include "nero/demand.hpp"
#include "nero/engine.hpp"
#include "nero/flow_model.hpp"
#include "nero/region_tree.hpp"

namespace {

using nlohmann::json;

struct MeshFlags {
  std::string mesh;
  std::optional<double> step_min;
  std::optional<double> speed_mps;
  std::string tau_override;

  void attach(CLI::App* app, bool required = true) {
    auto* opt = app->add_option("--mesh", mesh, "mesh config (.toml or .json)")->check(CLI::ExistingFile);
    if (required) opt->required();
    app->add_option("--step-min", step_min, "time-step length in minutes (overrides the config)");
    app->add_option("--speed-mps", speed_mps, "average vehicle speed in m/s (overrides the config)");
    app->add_option("--tau-override", tau_override, "CSV of layer,i,j,tau_steps")->check(CLI::ExistingFile);
  }

  [[nodiscard]] nero::MeshConfig load() const {
    nero::MeshConfig cfg = nero::load_mesh_config(mesh);
    if (step_min) cfg.step_min = *step_min;
    if (speed_mps) cfg.v_avg_mps = *speed_mps;
    if (!tau_override.empty()) cfg.tau_override = nero::read_tau_override(tau_override);
    cfg.validate();
    return cfg;
  }
};

std::string data_path(const std::string& p) { return nero::resolve_data_path(p); }

void print_table(const std::string& format, const std::vector<std::pair<std::string, json>>& fields) {
  if (format == "json") {
    json j = json::object();
    for (const auto& [k, v] : fields) j[k] = v;
    std::cout << j.dump(2) << '\n';
    return;
  }
  for (std::size_t i = 0; i < fields.size(); ++i) std::cout << (i ? "," : "") << fields[i].first;
  std::cout << '\n';
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const json& v = fields[i].second;
    std::cout << (i ? "," : "") << (v.is_string() ? v.get<std::string>() : v.dump());
  }
  std::cout << '\n';
}

// Leaf demand from a demand CSV, a trip CSV or the synthetic generator.
nero::DemandTensor leaf_demand(const nero::RegionTree& tree, const nero::MeshConfig& cfg, const std::string& demand,
                               const std::string& trips, std::uint64_t seed, double intensity) {
  const int n = tree.size(tree.leaf_layer());
  if (!demand.empty()) {
    auto d = nero::read_demand_csv(data_path(demand), n, cfg.horizon_steps);
    if (!d.entries().empty() && d.layer() != tree.leaf_layer())
      throw nero::ConfigError("demand file is binned at layer " + std::to_string(d.layer()) + ", expected the leaf layer " +
                              std::to_string(tree.leaf_layer()));
    nero::DemandTensor out(n, cfg.horizon_steps, tree.leaf_layer(), d.region_set());
    for (const auto& [k, c] : d.entries()) out.add(std::get<0>(k), std::get<1>(k), std::get<2>(k), c);
    return out;
  }
  if (!trips.empty()) return nero::ingest_trips(data_path(trips), cfg, tree).demand;
  nero::SynthParams p;
  p.seed = seed;
  p.n_regions = n;
  p.horizon = cfg.horizon_steps;
  p.intensity = intensity;
  p.grid_cols = tree.layer(tree.leaf_layer()).cols;
  p.locality = 0.5;
  p.layer = tree.leaf_layer();
  return nero::synth_demand(p);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rebalancing optimisation for mobility-on-demand fleets"};
  app.require_subcommand(1);
  std::string format = "csv";
  app.add_option("--format", format, "output format")->check(CLI::IsMember({"csv", "json"}));

  // ingest
  auto* ingest = app.add_subcommand("ingest", "bin a trip CSV into a leaf-layer demand tensor");
  MeshFlags ingest_mesh;
  ingest_mesh.attach(ingest);
  std::string ingest_trips, ingest_out;
  ingest->add_option("trips", ingest_trips, "trip CSV (relative paths are also looked up in $NERO_DATA_DIR)")->required();
  ingest->add_option("-o,--out", ingest_out, "demand CSV to write");

  // solve
  auto* solve = app.add_subcommand("solve", "solve one instance with SRO (--layers 1) or NERO_K");
  MeshFlags solve_mesh;
  solve_mesh.attach(solve);
  std::string solve_demand, solve_trips, solve_out = "policy";
  int layers = 1, threads = 1;
  double headroom = 3, time_limit_s = 600, intensity = 0.3;
  std::uint64_t seed = 1;
  bool solve_prune = false;
  std::optional<std::int64_t> vehicles;
  solve->add_option("--demand", solve_demand, "demand CSV (layer,region_set,i,j,t,count)");
  solve->add_option("--trips", solve_trips, "trip CSV to ingest");
  solve->add_option("--layers", layers, "K, the number of nested layers")->check(CLI::PositiveNumber);
  solve->add_option("--headroom", headroom, "fleet headroom over concurrent trips");
  solve->add_option("--vehicles", vehicles, "fleet size (default: headroom times concurrent trips)");
  solve->add_option("--seed", seed, "seed for synthetic demand when no data is given");
  solve->add_option("--intensity", intensity, "synthetic requests per region and step");
  solve->add_option("--threads", threads, "workers for sibling subproblems")->check(CLI::PositiveNumber);
  solve->add_option("--time-limit-s", time_limit_s, "wall-clock limit for the whole solve");
  solve->add_flag("--prune", solve_prune, "drop leaves without trips before solving");
  solve->add_option("-o,--out", solve_out, "output path: policy CSV for SRO, directory for NERO");

  // bench
  auto* bench = app.add_subcommand("bench", "run an experiment spec and write its report");
  std::string bench_spec, bench_out = "report";
  std::optional<int> bench_threads;
  std::optional<double> bench_limit, bench_headroom;
  std::optional<std::uint64_t> bench_seed;
  bench->add_option("spec", bench_spec, "experiment spec (.toml)")->required()->check(CLI::ExistingFile);
  bench->add_option("-o,--out", bench_out, "report directory");
  bench->add_option("--threads", bench_threads, "workers for sibling subproblems");
  bench->add_option("--time-limit-s", bench_limit, "per-solve time limit");
  bench->add_option("--headroom", bench_headroom, "fleet headroom over concurrent trips");
  bench->add_option("--seed", bench_seed, "seed for synthetic data");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "solve time against leaf count for several K");
  nero::SweepSpec ss;
  std::string sweep_out = "sweep";
  double sweep_headroom = 3;
  sweep->add_option("--leaves", ss.leaves, "leaf counts (perfect squares)")->delimiter(',');
  sweep->add_option("--layers", ss.ks, "K values")->delimiter(',');
  sweep->add_option("--horizon", ss.horizon, "steps per instance");
  sweep->add_option("--branching", ss.M, "children per region (a square)");
  sweep->add_option("--leaf-m", ss.leaf_m, "leaf mesh size in metres");
  sweep->add_option("--step-min", ss.step_min, "time-step length in minutes");
  sweep->add_option("--speed-mps", ss.v_avg_mps, "average vehicle speed in m/s");
  sweep->add_option("--intensity", ss.intensity, "synthetic requests per leaf and step");
  sweep->add_option("--headroom", sweep_headroom, "fleet headroom over concurrent trips");
  sweep->add_option("--seed", ss.seed, "base seed");
  sweep->add_option("--threads", ss.threads, "workers for sibling subproblems");
  sweep->add_option("--time-limit-s", ss.time_limit_s, "per-solve time limit");
  sweep->add_option("-o,--out", sweep_out, "output directory");

  // validate
  auto* validate = app.add_subcommand("validate", "check a policy file against its instance");
  MeshFlags val_mesh;
  val_mesh.attach(validate);
  std::string val_policy, val_demand, val_schedule;
  int val_layer = -1;
  std::optional<std::int64_t> val_vehicles;
  std::string val_objective;
  bool val_prune = false;
  validate->add_option("policy", val_policy, "policy CSV (kind,i,j,t,value)")->required()->check(CLI::ExistingFile);
  validate->add_option("--demand", val_demand, "demand CSV of the instance")->required();
  validate->add_option("--layer", val_layer, "tree layer of the regions (default: leaf layer)");
  validate->add_option("--vehicles", val_vehicles, "fixed fleet size");
  validate->add_option("--schedule", val_schedule, "time-varying fleet, comma separated");
  validate->add_option("--objective", val_objective, "claimed objective (default: recomputed)");
  validate->add_flag("--prune", val_prune, "the policy was solved with --prune on this leaf demand");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      auto cfg = ingest_mesh.load();
      auto tree = nero::build_uniform_tree(cfg);
      auto res = nero::ingest_trips(data_path(ingest_trips), cfg, tree);
      auto demand = std::move(res.demand);
      const int leaves = tree.size(tree.leaf_layer());
      const int active = nero::prune_empty_regions(tree, demand).tree.size(tree.leaf_layer());
      if (!ingest_out.empty()) nero::write_demand_csv(demand, ingest_out);
      print_table(format, {{"rows", res.report.rows},
                           {"retained", res.report.retained},
                           {"dropped", res.report.dropped()},
                           {"outside_bbox", res.report.outside_bbox},
                           {"outside_window", res.report.outside_window},
                           {"unparseable", res.report.unparseable},
                           {"leaves", leaves},
                           {"active_leaves", active},
                           {"demand", ingest_out}});
      return 0;
    }

    if (*solve) {
      auto cfg = solve_mesh.load();
      auto tree = nero::build_uniform_tree(cfg);
      auto demand = leaf_demand(tree, cfg, solve_demand, solve_trips, seed, intensity);
      if (solve_prune) {
        auto pruned = nero::prune_empty_regions(tree, demand);
        tree = std::move(pruned.tree);
        demand = std::move(pruned.demand);
      }
      if (layers > tree.depth()) throw nero::ConfigError("--layers exceeds the mesh ladder");
      std::int64_t V = vehicles ? *vehicles
                                : nero::concurrent_fleet(tree, demand, cfg, nero::Rational::from_double(headroom));
      nero::Method m;
      m.nero = layers > 1;
      m.K = layers;
      m.leaf_m = cfg.mesh_sizes_m.back();
      m.name = (layers > 1 ? "NERO_" + std::to_string(layers) : std::string("SRO")) + "^" + std::to_string(m.leaf_m);
      nero::OrpSolveOptions opts;
      opts.deadline = std::chrono::steady_clock::now() +
                      std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(time_limit_s));
      std::string objective;
      double ratio = 0, seconds = 0;
      auto started = std::chrono::steady_clock::now();
      if (layers == 1) {
        auto sol = nero::sro_solve(tree, demand, cfg, V, opts);
        seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        if (!sol.feasible) {
          std::cerr << "infeasible: " << sol.infeasibility << " (first violated step " << sol.first_violated_step << ")\n";
          return 1;
        }
        nero::write_policy_csv(sol.policy, solve_out);
        std::ofstream(solve_out + ".json") << nero::policy_summary(sol.policy).dump(2) << '\n';
        objective = sol.policy.objective.str();
        ratio = nero::rebalancing_time(sol.policy, nero::travel_matrix(tree, tree.leaf_layer(), cfg), cfg.step_min, V).ratio;
      } else {
        nero::NeroConfig nc;
        nc.K = layers;
        nc.v_max = nero::FleetSchedule::constant(demand.horizon(), V);
        nc.threads = threads;
        nc.solve = opts;
        auto lp = nero::nero_solve(tree, demand, cfg, nc);
        seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        nero::write_layered_policy(lp, solve_out);
        objective = lp.objective().str();
        ratio = nero::rebalancing_time(lp).ratio;
      }
      print_table(format, {{"method", m.name},
                           {"vehicles", V},
                           {"trips", demand.total()},
                           {"objective", objective},
                           {"ratio", ratio},
                           {"seconds", seconds},
                           {"policy", solve_out}});
      return 0;
    }

    if (*bench) {
      auto spec = nero::load_experiment(bench_spec);
      if (bench_threads) spec.threads = *bench_threads;
      if (bench_limit) spec.time_limit_s = *bench_limit;
      if (bench_headroom) spec.headroom = nero::Rational::from_double(*bench_headroom);
      if (bench_seed) spec.data.seed = *bench_seed;
      std::filesystem::create_directories(bench_out);
      // Rows are appended as they finish so an interrupted run is still usable.
      std::ofstream partial(std::filesystem::path(bench_out) / "runs.partial.csv");
      nero::write_row_header(partial);
      auto report = nero::run(spec, [&](const nero::RunRow& r) {
        nero::write_row(partial, r);
        partial.flush();
        std::cerr << r.method << " interval " << r.interval << ": " << r.status << " " << r.wall_s << " s\n";
      });
      partial.close();
      std::filesystem::remove(std::filesystem::path(bench_out) / "runs.partial.csv");
      nero::emit(report, bench_out);
      if (format == "json") {
        std::cout << nero::to_json(report)["summary"].dump(2) << '\n';
      } else {
        std::cout << "method,runs,ok,mean_wall_s,sd_wall_s,mean_ratio,sd_ratio,mean_per_vehicle_min,sd_per_vehicle_min\n";
        for (const auto& s : report.summary)
          std::cout << s.method << ',' << s.runs << ',' << s.ok << ',' << s.mean_wall_s << ',' << s.sd_wall_s << ','
                    << s.mean_ratio << ',' << s.sd_ratio << ',' << s.mean_per_vehicle_min << ',' << s.sd_per_vehicle_min
                    << '\n';
      }
      return 0;
    }

    if (*sweep) {
      ss.headroom = nero::Rational::from_double(sweep_headroom);
      auto result = nero::scaling_sweep(ss, [](const nero::SweepPoint& p) {
        std::cerr << p.method << " N=" << p.leaves << ": " << p.status << " " << p.seconds << " s\n";
      });
      nero::emit(result, sweep_out);
      if (format == "json") {
        std::cout << nero::to_json(result).dump(2) << '\n';
      } else {
        std::cout << "leaves,K,method,status,seconds,objective\n";
        for (const auto& p : result.points)
          std::cout << p.leaves << ',' << p.K << ',' << p.method << ',' << p.status << ',' << p.seconds << ','
                    << p.objective << '\n';
        for (auto [k, s] : result.slopes) std::cout << "# loglog slope K=" << k << ": " << s << '\n';
      }
      return 0;
    }

    if (*validate) {
      auto cfg = val_mesh.load();
      auto tree = nero::build_uniform_tree(cfg);
      int layer = val_layer < 0 ? tree.leaf_layer() : val_layer;
      nero::DemandTensor demand;
      if (val_prune) {
        auto pruned = nero::prune_empty_regions(tree, leaf_demand(tree, cfg, val_demand, "", 0, 0));
        tree = std::move(pruned.tree);
        demand = std::move(pruned.demand);
        if (layer != tree.leaf_layer()) demand = nero::aggregate_to_layer(demand, tree, layer);
      } else {
        demand = nero::read_demand_csv(data_path(val_demand), tree.size(layer), cfg.horizon_steps);
        if (!demand.entries().empty() && demand.layer() != layer)
          throw nero::ConfigError("demand file is binned at layer " + std::to_string(demand.layer()) + ", not " +
                                  std::to_string(layer));
      }
      int n = tree.size(layer);
      nero::OrpInstance inst;
      inst.travel = nero::travel_matrix(tree, layer, cfg);
      inst.horizon = cfg.horizon_steps;
      inst.demand = nero::DemandTensor(n, cfg.horizon_steps, layer, demand.region_set());
      for (const auto& [k, c] : demand.entries()) inst.demand.add(std::get<0>(k), std::get<1>(k), std::get<2>(k), c);
      if (!val_schedule.empty()) {
        nero::FleetSchedule s;
        std::stringstream in(val_schedule);
        for (std::string tok; std::getline(in, tok, ',');) s.v.push_back(std::stoll(tok));
        inst.fleet = nero::VaryingFleet{s};
      } else if (val_vehicles) {
        inst.fleet = nero::FixedFleet{*val_vehicles};
      } else {
        throw nero::ConfigError("validate needs --vehicles or --schedule");
      }
      auto pol = nero::read_policy_csv(val_policy, n, cfg.horizon_steps);
      if (!val_objective.empty()) {
        pol.objective = nero::Rational::parse(val_objective);
      } else {
        nero::Rational obj(0);
        for (const auto& [k, v] : pol.xr) obj = obj + inst.travel.cost(std::get<0>(k), std::get<1>(k)) * nero::Rational(v);
        pol.objective = obj;
      }
      auto report = nero::validate_policy(inst, pol);
      if (format == "json") {
        json fams = json::array();
        for (const auto& f : report.families)
          fams.push_back({{"family", f.family}, {"ok", f.ok}, {"first_violation", f.first_violation}});
        std::cout << json{{"ok", report.ok()}, {"families", fams}}.dump(2) << '\n';
      } else {
        std::cout << "family,ok,first_violation\n";
        for (const auto& f : report.families)
          std::cout << f.family << ',' << (f.ok ? "true" : "false") << ',' << nero::csv_quote(f.first_violation) << '\n';
      }
      return report.ok() ? 0 : 1;
    }
  } catch (const nero::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const nero::NeroInfeasible& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
