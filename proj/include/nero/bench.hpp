#pragma once

// Experiment harness: SRO and NERO_K runs over intervals of recorded or
// synthetic demand, scaling sweeps, and report files.
//
// Methods are named after their finest mesh: "SRO^500" solves once on the
// 500 m layer, "NERO_3^500" nests the three layers ending at 500 m.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "json.hpp"

#include "nero/config.hpp"
#include "nero/demand.hpp"
#include "nero/engine.hpp"
#include "nero/error.hpp"
#include "nero/flow_model.hpp"
#include "nero/region_tree.hpp"

namespace nero {

struct Method {
  std::string name;
  bool nero = false;
  int K = 1;
  std::int64_t leaf_m = 0;
};

/// Parses "SRO^500" or "NERO_3^250".
inline Method parse_method(const std::string& name) {
  auto caret = name.find('^');
  if (caret == std::string::npos) throw ConfigError("method '" + name + "' needs a mesh suffix such as ^500");
  Method m;
  m.name = name;
  std::string head = name.substr(0, caret);
  try {
    m.leaf_m = std::stoll(name.substr(caret + 1));
    if (head == "SRO") {
      m.K = 1;
    } else if (head.rfind("NERO_", 0) == 0) {
      m.nero = true;
      m.K = std::stoi(head.substr(5));
    } else {
      throw ConfigError("unknown method family in '" + name + "'");
    }
  } catch (const std::logic_error&) {
    throw ConfigError("malformed method name '" + name + "'");
  }
  if (m.K < 1 || m.leaf_m <= 0) throw ConfigError("malformed method name '" + name + "'");
  return m;
}

struct DataSource {
  std::string kind = "synth";  // "synth" or "csv"
  std::string path;            // trip CSV when kind == "csv"
  std::uint64_t seed = 1;
  double intensity = 0.3;
  double imbalance = 0.3;
  double locality = 0.5;
  bool prune = false;  // drop leaves without any trip over the whole window
};

struct ExperimentSpec {
  std::string name = "experiment";
  MeshConfig mesh;  // horizon_steps is the length of one interval
  std::vector<Method> methods;
  DataSource data;
  int intervals = 1;
  Rational headroom{3};
  int repetitions = 1;
  int threads = 1;
  double time_limit_s = 600;
  mcf::Algorithm algorithm = mcf::Algorithm::NetworkSimplex;

  /// Depth of the tree a method runs on (its leaf layer plus one).
  [[nodiscard]] int depth_for(const Method& m) const {
    auto it = std::find(mesh.mesh_sizes_m.begin(), mesh.mesh_sizes_m.end(), m.leaf_m);
    if (it == mesh.mesh_sizes_m.end())
      throw ConfigError("method " + m.name + " uses a mesh size missing from mesh_sizes_m");
    return static_cast<int>(it - mesh.mesh_sizes_m.begin()) + 1;
  }

  void validate() const {
    mesh.validate();
    if (methods.empty()) throw ConfigError("experiment lists no methods");
    for (const auto& m : methods)
      if (m.K > depth_for(m)) throw ConfigError("method " + m.name + " needs more layers than the mesh ladder has");
    if (intervals < 1) throw ConfigError("intervals must be at least 1");
    if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
    if (threads < 1) throw ConfigError("threads must be at least 1");
    if (!(time_limit_s > 0)) throw ConfigError("time_limit_s must be positive");
    if (headroom < Rational(1)) throw ConfigError("headroom must be at least 1");
    if (data.kind != "synth" && data.kind != "csv") throw ConfigError("data.kind must be synth or csv");
    if (data.kind == "csv" && data.path.empty()) throw ConfigError("csv data needs a path");
  }
};

/// A relative data path that does not exist is looked up under $NERO_DATA_DIR.
inline std::string resolve_data_path(const std::string& path) {
  if (path.empty() || std::filesystem::exists(path) || std::filesystem::path(path).is_absolute()) return path;
  if (const char* dir = std::getenv("NERO_DATA_DIR"); dir && *dir) {
    auto candidate = std::filesystem::path(dir) / path;
    if (std::filesystem::exists(candidate)) return candidate.string();
  }
  return path;
}

inline ExperimentSpec experiment_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  ExperimentSpec spec;
  try {
    if (!j.contains("mesh")) throw ConfigError("experiment needs a [mesh] table");
    const auto& mesh = j.at("mesh");
    if (mesh.is_string()) {
      std::filesystem::path p = mesh.get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      spec.mesh = load_mesh_config(p.string());
    } else {
      spec.mesh = mesh_config_from_json(mesh, base_dir);
    }
    if (j.contains("name")) spec.name = j.at("name").get<std::string>();
    for (const auto& m : j.at("methods")) spec.methods.push_back(parse_method(m.get<std::string>()));
    if (j.contains("intervals")) spec.intervals = j.at("intervals").get<int>();
    if (j.contains("headroom")) spec.headroom = rational_value(j.at("headroom"));
    if (j.contains("repetitions")) spec.repetitions = j.at("repetitions").get<int>();
    if (j.contains("threads")) spec.threads = j.at("threads").get<int>();
    if (j.contains("time_limit_s")) spec.time_limit_s = j.at("time_limit_s").get<double>();
    if (j.contains("algorithm")) {
      auto a = j.at("algorithm").get<std::string>();
      if (a == "ssp") spec.algorithm = mcf::Algorithm::SuccessiveShortestPaths;
      else if (a != "simplex") throw ConfigError("algorithm must be simplex or ssp");
    }
    if (j.contains("data")) {
      const auto& d = j.at("data");
      auto& src = spec.data;
      if (d.contains("kind")) src.kind = d.at("kind").get<std::string>();
      if (d.contains("path")) {
        std::filesystem::path p = d.at("path").get<std::string>();
        if (p.is_relative() && !base_dir.empty() && std::filesystem::exists(base_dir / p)) p = base_dir / p;
        src.path = resolve_data_path(p.string());
      }
      if (d.contains("seed")) src.seed = d.at("seed").get<std::uint64_t>();
      if (d.contains("intensity")) src.intensity = d.at("intensity").get<double>();
      if (d.contains("imbalance")) src.imbalance = d.at("imbalance").get<double>();
      if (d.contains("locality")) src.locality = d.at("locality").get<double>();
      if (d.contains("prune")) src.prune = d.at("prune").get<bool>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment: ") + e.what());
  }
  spec.validate();
  return spec;
}

inline ExperimentSpec load_experiment(const std::string& path) {
  return experiment_from_json(load_document(path), std::filesystem::path(path).parent_path());
}

// ---------------------------------------------------------------- running

/// Fleet for one interval: headroom times the peak number of concurrent trips,
/// taken over every layer of the tree so each method's top layer is servable.
inline std::int64_t concurrent_fleet(const RegionTree& tree, const DemandTensor& leaf, const MeshConfig& cfg,
                                     const Rational& headroom) {
  std::int64_t v = 0;
  for (int k = 0; k < tree.depth(); ++k) {
    auto d = k == tree.leaf_layer() ? leaf : aggregate_to_layer(leaf, tree, k);
    v = std::max(v, fleet_from_demand(d, travel_matrix(tree, k, cfg), headroom).peak());
  }
  return v;
}

struct RunRow {
  std::string method;
  int interval = 0;
  int repetition = 0;
  std::string status = "ok";  // ok, infeasible, timeout
  double wall_s = 0;
  std::string objective = "0";
  double objective_value = 0;
  double ratio = 0;
  double per_vehicle_min = 0;
  double per_trip_min = 0;
  std::int64_t vehicles = 0;
  std::int64_t trips = 0;
  int leaves = 0;
  int subproblems = 0;
  int threads = 1;
  std::string detail;
};

struct MethodSummary {
  std::string method;
  int runs = 0;
  int ok = 0;
  double mean_wall_s = 0, sd_wall_s = 0;
  double mean_ratio = 0, sd_ratio = 0;
  double mean_per_vehicle_min = 0, sd_per_vehicle_min = 0;
};

struct RunReport {
  std::string name;
  int threads = 1;
  std::vector<RunRow> rows;
  std::vector<MethodSummary> summary;
};

namespace detail {

inline std::pair<double, double> mean_sd(const std::vector<double>& xs) {
  if (xs.empty()) return {0, 0};
  double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0};
  double ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

}  // namespace detail

/// Mean and sample standard deviation per method over its successful rows,
/// in order of first appearance.
inline std::vector<MethodSummary> summarize(const std::vector<RunRow>& rows) {
  std::vector<MethodSummary> out;
  std::map<std::string, std::size_t> pos;
  std::vector<std::array<std::vector<double>, 3>> samples;
  for (const auto& r : rows) {
    auto [it, fresh] = pos.try_emplace(r.method, out.size());
    if (fresh) {
      out.push_back({r.method});
      samples.emplace_back();
    }
    auto& s = out[it->second];
    ++s.runs;
    if (r.status != "ok") continue;
    ++s.ok;
    samples[it->second][0].push_back(r.wall_s);
    samples[it->second][1].push_back(r.ratio);
    samples[it->second][2].push_back(r.per_vehicle_min);
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::tie(out[k].mean_wall_s, out[k].sd_wall_s) = detail::mean_sd(samples[k][0]);
    std::tie(out[k].mean_ratio, out[k].sd_ratio) = detail::mean_sd(samples[k][1]);
    std::tie(out[k].mean_per_vehicle_min, out[k].sd_per_vehicle_min) = detail::mean_sd(samples[k][2]);
  }
  return out;
}

/// Solves one method on one interval. `tree` and `leaf` are at the finest mesh
/// of the experiment; coarser methods run on a truncated copy.
inline RunRow run_method(const RegionTree& tree, const DemandTensor& leaf, const MeshConfig& cfg, const Method& m,
                         std::int64_t vehicles, int threads, double time_limit_s,
                         mcf::Algorithm algorithm = mcf::Algorithm::NetworkSimplex) {
  auto it = std::find(cfg.mesh_sizes_m.begin(), cfg.mesh_sizes_m.end(), m.leaf_m);
  if (it == cfg.mesh_sizes_m.end()) throw ConfigError("method " + m.name + " uses an unknown mesh size");
  const int depth = static_cast<int>(it - cfg.mesh_sizes_m.begin()) + 1;
  RegionTree t = depth == tree.depth() ? tree : truncate_tree(tree, depth);
  DemandTensor d = depth == tree.depth() ? leaf : aggregate_to_layer(leaf, tree, depth - 1);

  RunRow row;
  row.method = m.name;
  row.vehicles = vehicles;
  row.trips = d.total();
  row.leaves = t.size(t.leaf_layer());
  row.threads = threads;
  OrpSolveOptions opts;
  opts.algorithm = algorithm;
  auto started = std::chrono::steady_clock::now();
  opts.deadline = started + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                std::chrono::duration<double>(time_limit_s));
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count(); };
  try {
    if (!m.nero) {
      auto sol = sro_solve(t, d, cfg, vehicles, opts);
      row.wall_s = elapsed();
      row.subproblems = 1;
      if (!sol.feasible) {
        row.status = "infeasible";
        row.detail = sol.infeasibility;
        return row;
      }
      auto rt = rebalancing_time(sol.policy, travel_matrix(t, t.leaf_layer(), cfg), cfg.step_min, vehicles);
      row.objective = sol.policy.objective.str();
      row.objective_value = sol.policy.objective.to_double();
      row.ratio = rt.ratio;
      row.per_vehicle_min = rt.per_vehicle_minutes;
      row.per_trip_min = rt.per_trip_minutes;
    } else {
      NeroConfig nc;
      nc.K = m.K;
      nc.v_max = FleetSchedule::constant(d.horizon(), vehicles);
      nc.threads = threads;
      nc.solve = opts;
      auto lp = nero_solve(t, d, cfg, nc);
      row.wall_s = elapsed();
      auto rt = rebalancing_time(lp);
      row.subproblems = static_cast<int>(lp.subproblems.size());
      row.objective = lp.objective().str();
      row.objective_value = lp.objective().to_double();
      row.ratio = rt.ratio;
      row.per_vehicle_min = rt.per_vehicle_minutes;
      row.per_trip_min = rt.per_trip_minutes;
    }
  } catch (const NeroInfeasible& e) {
    row.wall_s = elapsed();
    row.status = "infeasible";
    row.detail = e.what();
  } catch (const TimeLimitError& e) {
    row.wall_s = elapsed();
    row.status = "timeout";
    row.detail = e.what();
  }
  return row;
}

struct Workload {
  RegionTree tree;
  std::vector<DemandTensor> windows;  // one leaf tensor per interval
};

/// Builds the finest tree and the per-interval demand of one repetition.
/// Recorded trips are ingested once over all intervals and then split.
inline Workload prepare_workload(const ExperimentSpec& spec, int repetition) {
  Workload w;
  w.tree = build_uniform_tree(spec.mesh);
  const int H = spec.mesh.horizon_steps;
  if (spec.data.kind == "csv") {
    MeshConfig full = spec.mesh;
    full.horizon_steps = H * spec.intervals;
    auto ingested = ingest_trips(spec.data.path, full, w.tree);
    DemandTensor all = std::move(ingested.demand);
    if (spec.data.prune) {
      auto pruned = prune_empty_regions(w.tree, all);
      w.tree = std::move(pruned.tree);
      all = std::move(pruned.demand);
    }
    for (int k = 0; k < spec.intervals; ++k) w.windows.push_back(slice_window(all, k * H, H));
  } else {
    const int n = w.tree.size(w.tree.leaf_layer());
    for (int k = 0; k < spec.intervals; ++k) {
      SynthParams p;
      p.seed = spec.data.seed + 1'000'003ULL * static_cast<std::uint64_t>(repetition) + static_cast<std::uint64_t>(k);
      p.n_regions = n;
      p.horizon = H;
      p.intensity = spec.data.intensity;
      p.imbalance = spec.data.imbalance;
      p.grid_cols = w.tree.layer(w.tree.leaf_layer()).cols;
      p.locality = spec.data.locality;
      p.layer = w.tree.leaf_layer();
      w.windows.push_back(synth_demand(p));
    }
  }
  return w;
}

/// Runs every method on every interval and repetition. Methods run one after
/// another so their timings do not interfere; `on_row` sees each row as soon
/// as it is finished.
inline RunReport run(const ExperimentSpec& spec, const std::function<void(const RunRow&)>& on_row = {}) {
  spec.validate();
  RunReport report;
  report.name = spec.name;
  report.threads = spec.threads;
  for (int rep = 0; rep < spec.repetitions; ++rep) {
    Workload w = prepare_workload(spec, rep);
    for (int k = 0; k < spec.intervals; ++k) {
      const auto& leaf = w.windows[static_cast<std::size_t>(k)];
      std::int64_t V = concurrent_fleet(w.tree, leaf, spec.mesh, spec.headroom);
      for (const auto& m : spec.methods) {
        RunRow row = run_method(w.tree, leaf, spec.mesh, m, V, spec.threads, spec.time_limit_s, spec.algorithm);
        row.interval = k;
        row.repetition = rep;
        if (on_row) on_row(row);
        report.rows.push_back(std::move(row));
      }
    }
  }
  report.summary = summarize(report.rows);
  return report;
}

// ---------------------------------------------------------------- scaling

struct SweepSpec {
  std::vector<int> leaves{64, 256, 1024};
  int horizon = 20;
  std::vector<int> ks{1, 2, 3};
  int M = 4;
  std::int64_t leaf_m = 500;
  double step_min = 2;
  double v_avg_mps = 5.5;
  double intensity = 0.3;
  double imbalance = 0.3;
  double locality = 0.5;
  Rational headroom{3};
  std::uint64_t seed = 1;
  int threads = 1;
  double time_limit_s = 600;
};

struct SweepPoint {
  int leaves = 0;
  int K = 1;
  std::string method;
  std::string status = "ok";
  double seconds = 0;
  std::string objective = "0";
  int subproblems = 0;
  std::int64_t vehicles = 0;
  std::int64_t trips = 0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::map<int, double> slopes;  // per K: least-squares slope of log(seconds) against log(N)

  [[nodiscard]] const SweepPoint* find(int leaves, int K) const {
    for (const auto& p : points)
      if (p.leaves == leaves && p.K == K) return &p;
    return nullptr;
  }
};

/// Uniform square mesh with `leaves` cells at the finest layer and enough
/// coarser layers for the largest K.
inline MeshConfig sweep_mesh(const SweepSpec& s, int leaves) {
  int q = static_cast<int>(std::lround(std::sqrt(s.M)));
  int side = static_cast<int>(std::lround(std::sqrt(leaves)));
  if (q * q != s.M || q < 2) throw ConfigError("branching factor must be a square of at least 4");
  if (side * side != leaves) throw ConfigError("leaf count must be a perfect square");
  int depth = *std::max_element(s.ks.begin(), s.ks.end());
  std::int64_t span = 1;
  for (int k = 1; k < depth; ++k) span *= q;
  if (side % span != 0) throw ConfigError("leaf grid is not divisible by the coarsest cell");
  MeshConfig cfg;
  cfg.width_m = cfg.height_m = static_cast<double>(side * s.leaf_m);
  for (int k = 0; k < depth; ++k) {
    std::int64_t m = s.leaf_m;
    for (int r = k; r < depth - 1; ++r) m *= q;
    cfg.mesh_sizes_m.push_back(m);
  }
  cfg.v_avg_mps = s.v_avg_mps;
  cfg.step_min = s.step_min;
  cfg.horizon_steps = s.horizon;
  return cfg;
}

inline double loglog_slope(const std::vector<std::pair<double, double>>& xy) {
  if (xy.size() < 2) return std::nan("");
  double mx = 0, my = 0;
  for (auto [x, y] : xy) {
    mx += std::log(x);
    my += std::log(y);
  }
  mx /= static_cast<double>(xy.size());
  my /= static_cast<double>(xy.size());
  double sxy = 0, sxx = 0;
  for (auto [x, y] : xy) {
    sxy += (std::log(x) - mx) * (std::log(y) - my);
    sxx += (std::log(x) - mx) * (std::log(x) - mx);
  }
  return sxx > 0 ? sxy / sxx : std::nan("");
}

/// Solve time against leaf count for each K. K = 1 is the single-layer solve
/// with a fixed fleet.
inline SweepResult scaling_sweep(const SweepSpec& s, const std::function<void(const SweepPoint&)>& on_point = {}) {
  if (s.ks.empty() || s.leaves.empty()) throw ConfigError("sweep needs leaf counts and layer counts");
  SweepResult out;
  for (int n : s.leaves) {
    MeshConfig cfg = sweep_mesh(s, n);
    RegionTree tree = build_uniform_tree(cfg);
    SynthParams p;
    p.seed = s.seed + static_cast<std::uint64_t>(n);
    p.n_regions = n;
    p.horizon = s.horizon;
    p.intensity = s.intensity;
    p.imbalance = s.imbalance;
    p.grid_cols = tree.layer(tree.leaf_layer()).cols;
    p.locality = s.locality;
    p.layer = tree.leaf_layer();
    DemandTensor leaf = synth_demand(p);
    std::int64_t V = concurrent_fleet(tree, leaf, cfg, s.headroom);
    for (int K : s.ks) {
      Method m;
      m.nero = K > 1;
      m.K = K;
      m.leaf_m = s.leaf_m;
      m.name = K > 1 ? "NERO_" + std::to_string(K) : "SRO";
      RunRow row = run_method(tree, leaf, cfg, m, V, s.threads, s.time_limit_s);
      SweepPoint pt{n, K, m.name, row.status, row.wall_s, row.objective, row.subproblems, V, row.trips};
      if (on_point) on_point(pt);
      out.points.push_back(std::move(pt));
    }
  }
  for (int K : s.ks) {
    std::vector<std::pair<double, double>> xy;
    for (const auto& pt : out.points)
      if (pt.K == K && pt.status == "ok" && pt.seconds > 0) xy.emplace_back(pt.leaves, pt.seconds);
    out.slopes[K] = loglog_slope(xy);
  }
  return out;
}

// ---------------------------------------------------------------- output

inline void write_row_header(std::ostream& os) {
  os << "method,interval,repetition,status,wall_s,objective,objective_value,ratio,per_vehicle_min,per_trip_min,"
        "vehicles,trips,leaves,subproblems,threads,detail\n";
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline void write_row(std::ostream& os, const RunRow& r) {
  os << csv_quote(r.method) << ',' << r.interval << ',' << r.repetition << ',' << r.status << ',' << r.wall_s << ','
     << r.objective << ',' << r.objective_value << ',' << r.ratio << ',' << r.per_vehicle_min << ',' << r.per_trip_min
     << ',' << r.vehicles << ',' << r.trips << ',' << r.leaves << ',' << r.subproblems << ',' << r.threads << ','
     << csv_quote(r.detail) << '\n';
}

inline nlohmann::json to_json(const RunRow& r) {
  return {{"method", r.method},
          {"interval", r.interval},
          {"repetition", r.repetition},
          {"status", r.status},
          {"wall_s", r.wall_s},
          {"objective", r.objective},
          {"objective_value", r.objective_value},
          {"ratio", r.ratio},
          {"per_vehicle_min", r.per_vehicle_min},
          {"per_trip_min", r.per_trip_min},
          {"vehicles", r.vehicles},
          {"trips", r.trips},
          {"leaves", r.leaves},
          {"subproblems", r.subproblems},
          {"threads", r.threads},
          {"detail", r.detail}};
}

inline nlohmann::json to_json(const RunReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) rows.push_back(to_json(r));
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& s : report.summary)
    summary.push_back({{"method", s.method},
                       {"runs", s.runs},
                       {"ok", s.ok},
                       {"mean_wall_s", s.mean_wall_s},
                       {"sd_wall_s", s.sd_wall_s},
                       {"mean_ratio", s.mean_ratio},
                       {"sd_ratio", s.sd_ratio},
                       {"mean_per_vehicle_min", s.mean_per_vehicle_min},
                       {"sd_per_vehicle_min", s.sd_per_vehicle_min}});
  return {{"name", report.name}, {"threads", report.threads}, {"summary", summary}, {"rows", rows}};
}

inline nlohmann::json to_json(const SweepResult& r) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : r.points)
    pts.push_back({{"leaves", p.leaves},
                   {"K", p.K},
                   {"method", p.method},
                   {"status", p.status},
                   {"seconds", p.seconds},
                   {"objective", p.objective},
                   {"subproblems", p.subproblems},
                   {"vehicles", p.vehicles},
                   {"trips", p.trips}});
  nlohmann::json slopes = nlohmann::json::object();
  for (auto [k, s] : r.slopes) slopes[std::to_string(k)] = std::isnan(s) ? nlohmann::json(nullptr) : nlohmann::json(s);
  return {{"points", pts}, {"loglog_slopes", slopes}};
}

/// Writes runs.csv, summary.json and methods.dat (one line per method:
/// index, name, mean and sd of wall time, ratio and per-vehicle minutes).
inline void emit(const RunReport& report, const std::string& dir) {
  std::filesystem::create_directories(dir);
  auto path = [&](const char* f) { return (std::filesystem::path(dir) / f).string(); };
  std::ofstream csv(path("runs.csv"));
  std::ofstream json(path("summary.json"));
  std::ofstream dat(path("methods.dat"));
  if (!csv || !json || !dat) throw Error("cannot write report files in " + dir);
  write_row_header(csv);
  for (const auto& r : report.rows) write_row(csv, r);
  json << to_json(report).dump(2) << '\n';
  dat << "# index method mean_wall_s sd_wall_s mean_ratio sd_ratio mean_per_vehicle_min sd_per_vehicle_min\n";
  for (std::size_t k = 0; k < report.summary.size(); ++k) {
    const auto& s = report.summary[k];
    dat << k << ' ' << s.method << ' ' << s.mean_wall_s << ' ' << s.sd_wall_s << ' ' << s.mean_ratio << ' ' << s.sd_ratio
        << ' ' << s.mean_per_vehicle_min << ' ' << s.sd_per_vehicle_min << '\n';
  }
}

/// Writes sweep.csv, sweep.json and sweep.dat (leaf count, then seconds per K).
inline void emit(const SweepResult& r, const std::string& dir) {
  std::filesystem::create_directories(dir);
  auto path = [&](const char* f) { return (std::filesystem::path(dir) / f).string(); };
  std::ofstream csv(path("sweep.csv"));
  std::ofstream json(path("sweep.json"));
  std::ofstream dat(path("sweep.dat"));
  if (!csv || !json || !dat) throw Error("cannot write sweep files in " + dir);
  csv << "leaves,K,method,status,seconds,objective,subproblems,vehicles,trips\n";
  for (const auto& p : r.points)
    csv << p.leaves << ',' << p.K << ',' << p.method << ',' << p.status << ',' << p.seconds << ',' << p.objective << ','
        << p.subproblems << ',' << p.vehicles << ',' << p.trips << '\n';
  json << to_json(r).dump(2) << '\n';
  std::vector<int> ks;
  std::vector<int> ns;
  for (const auto& p : r.points) {
    if (std::find(ks.begin(), ks.end(), p.K) == ks.end()) ks.push_back(p.K);
    if (std::find(ns.begin(), ns.end(), p.leaves) == ns.end()) ns.push_back(p.leaves);
  }
  dat << "# leaves";
  for (int k : ks) dat << " K" << k;
  dat << '\n';
  for (int n : ns) {
    dat << n;
    for (int k : ks) {
      const auto* p = r.find(n, k);
      if (p && p->status == "ok") dat << ' ' << p->seconds;
      else dat << " nan";
    }
    dat << '\n';
  }
}

}  // namespace nero
