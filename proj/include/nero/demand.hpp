#pragma once

// Trip ingestion, demand tensors and fleet schedules.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "nero/csv.hpp"
#include "nero/error.hpp"
#include "nero/rational.hpp"
#include "nero/region_tree.hpp"

namespace nero {

/// Sparse request counts lambda(i, j, t) over one region set. Steps are 0-based.
class DemandTensor {
 public:
  using Key = std::tuple<int, int, int>;  // (origin, destination, step)

  DemandTensor() = default;
  DemandTensor(int n, int horizon, int layer = 0, std::string region_set = "leaf")
      : layer_(layer), region_set_(std::move(region_set)), n_(n), horizon_(horizon) {
    if (n < 0 || horizon < 1) throw DemandError("demand tensor needs n >= 0 and a horizon of at least one step");
  }

  [[nodiscard]] int n() const { return n_; }
  [[nodiscard]] int horizon() const { return horizon_; }
  [[nodiscard]] int layer() const { return layer_; }
  [[nodiscard]] const std::string& region_set() const { return region_set_; }
  [[nodiscard]] const std::map<Key, std::int64_t>& entries() const { return entries_; }

  void add(int i, int j, int t, std::int64_t count = 1) {
    if (i < 0 || i >= n_ || j < 0 || j >= n_ || t < 0 || t >= horizon_)
      throw DemandError("demand index out of range");
    if (count < 0) throw DemandError("demand counts must be nonnegative");
    if (count == 0) return;
    auto& slot = entries_[{i, j, t}];
    slot = checked_add(slot, count);
  }

  [[nodiscard]] std::int64_t at(int i, int j, int t) const {
    auto it = entries_.find({i, j, t});
    return it == entries_.end() ? 0 : it->second;
  }

  [[nodiscard]] std::int64_t total() const {
    std::int64_t s = 0;
    for (const auto& [k, v] : entries_) s = checked_add(s, v);
    return s;
  }

  friend bool operator==(const DemandTensor&, const DemandTensor&) = default;

 private:
  int layer_ = 0;
  std::string region_set_ = "leaf";
  int n_ = 0;
  int horizon_ = 1;
  std::map<Key, std::int64_t> entries_;
};

/// V_t per step; the step before step 0 implicitly has zero vehicles.
struct FleetSchedule {
  std::vector<std::int64_t> v;

  static FleetSchedule constant(int horizon, std::int64_t vehicles) {
    return {std::vector<std::int64_t>(static_cast<std::size_t>(horizon), vehicles)};
  }
  [[nodiscard]] int horizon() const { return static_cast<int>(v.size()); }
  [[nodiscard]] std::int64_t at(int t) const { return t < 0 ? 0 : v.at(static_cast<std::size_t>(t)); }
  [[nodiscard]] std::int64_t peak() const { return v.empty() ? 0 : *std::max_element(v.begin(), v.end()); }
  [[nodiscard]] bool is_constant() const {
    return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
  }
  friend bool operator==(const FleetSchedule&, const FleetSchedule&) = default;
};

struct TripRecord {
  double pickup_lat = 0, pickup_lon = 0;
  double dropoff_lat = 0, dropoff_lon = 0;
  std::int64_t request_time = 0;  // seconds since the epoch, timezone-naive
};

/// Parses "YYYY-MM-DD HH:MM:SS" (a 'T' separator is accepted too).
inline std::optional<std::int64_t> parse_timestamp(std::string_view s) {
  int y, mo, d, h = 0, mi = 0, se = 0;
  std::string text(s);
  std::replace(text.begin(), text.end(), 'T', ' ');
  if (std::sscanf(text.c_str(), "%d-%d-%d %d:%d:%d", &y, &mo, &d, &h, &mi, &se) < 3) return std::nullopt;
  using namespace std::chrono;
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || se < 0 || se > 60) return std::nullopt;
  auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + h * 3600 + mi * 60 + se;
}

struct IngestReport {
  std::int64_t rows = 0;
  std::int64_t retained = 0;
  std::int64_t outside_bbox = 0;
  std::int64_t outside_window = 0;
  std::int64_t unparseable = 0;
  [[nodiscard]] std::int64_t dropped() const { return outside_bbox + outside_window + unparseable; }
};

struct IngestResult {
  DemandTensor demand;
  IngestReport report;
};

/// Bins trips into the leaf layer: (origin leaf, destination leaf, floor(elapsed / step)).
/// The window opens at cfg.window_start, or at the earliest request when unset.
inline IngestResult ingest_trips(const std::string& path, const MeshConfig& cfg, const RegionTree& tree) {
  std::ifstream probe(path);
  if (!probe) throw DemandError("cannot read trip file: " + path);
  probe.close();
  csv::Reader reader(path);

  auto col = [&](std::initializer_list<const char*> names) -> std::size_t {
    for (const char* n : names)
      if (auto c = reader.column(n)) return *c;
    throw DemandError(std::string("trip file is missing column ") + *names.begin());
  };
  const std::size_t c_time = col({"pickup_datetime", "tpep_pickup_datetime", "lpep_pickup_datetime"});
  const std::size_t c_plon = col({"pickup_longitude"});
  const std::size_t c_plat = col({"pickup_latitude"});
  const std::size_t c_dlon = col({"dropoff_longitude"});
  const std::size_t c_dlat = col({"dropoff_latitude"});
  const std::size_t needed = std::max({c_time, c_plon, c_plat, c_dlon, c_dlat});

  std::vector<TripRecord> trips;
  IngestReport report;
  std::vector<std::string_view> f;
  while (reader.next(f)) {
    ++report.rows;
    if (f.size() <= needed) {
      ++report.unparseable;
      continue;
    }
    auto ts = parse_timestamp(f[c_time]);
    if (!ts) {
      ++report.unparseable;
      continue;
    }
    try {
      trips.push_back({csv::to_double(f[c_plat]), csv::to_double(f[c_plon]), csv::to_double(f[c_dlat]),
                       csv::to_double(f[c_dlon]), *ts});
    } catch (const Error&) {
      ++report.unparseable;
    }
  }

  std::int64_t start = 0;
  if (cfg.window_start) {
    auto ts = parse_timestamp(*cfg.window_start);
    if (!ts) throw ConfigError("bad window_start: " + *cfg.window_start);
    start = *ts;
  } else if (!trips.empty()) {
    start = std::min_element(trips.begin(), trips.end(), [](const auto& a, const auto& b) {
              return a.request_time < b.request_time;
            })->request_time;
  }
  const double step_s = cfg.step_seconds();
  const int horizon = cfg.horizon_steps;

  DemandTensor demand(tree.size(tree.leaf_layer()), horizon, tree.leaf_layer(), "leaf");
  for (const auto& trip : trips) {
    double elapsed = static_cast<double>(trip.request_time - start);
    if (elapsed < 0 || elapsed >= step_s * horizon) {
      ++report.outside_window;
      continue;
    }
    auto [ox, oy] = cfg.project(trip.pickup_lat, trip.pickup_lon);
    auto [dx, dy] = cfg.project(trip.dropoff_lat, trip.dropoff_lon);
    bool in_box = ox < cfg.extent_width() && oy < cfg.extent_height() && dx < cfg.extent_width() &&
                  dy < cfg.extent_height();
    auto o = in_box ? tree.locate_leaf(ox, oy) : std::nullopt;
    auto d = in_box ? tree.locate_leaf(dx, dy) : std::nullopt;
    if (!o || !d) {
      ++report.outside_bbox;
      continue;
    }
    int t = std::min(horizon - 1, static_cast<int>(std::floor(elapsed / step_s)));
    demand.add(*o, *d, t);
    ++report.retained;
  }
  if (report.retained == 0) throw DemandError("no trips fell inside the bounding box and time window");
  return {std::move(demand), report};
}

/// Demand(N_l): trips with both ends inside `l`, re-indexed by the position of
/// the child of `l` containing each end. Intra-child trips are kept.
inline DemandTensor aggregate_demand(const DemandTensor& leaf, const RegionTree& tree, RegionId l) {
  if (!tree.contains(l)) throw TreeError("region is not part of the tree");
  if (leaf.layer() != tree.leaf_layer() || leaf.n() != tree.size(tree.leaf_layer()))
    throw DemandError("aggregation needs a leaf-layer demand tensor");
  auto kids = tree.children(l);
  std::vector<int> position(static_cast<std::size_t>(leaf.n()), -1);
  for (std::size_t c = 0; c < kids.size(); ++c)
    for (int lf : tree.leaves_under(kids[c])) position[static_cast<std::size_t>(lf)] = static_cast<int>(c);
  DemandTensor out(static_cast<int>(kids.size()), leaf.horizon(), l.layer + 1,
                   "children:" + std::to_string(l.layer) + ":" + std::to_string(l.index));
  for (const auto& [key, count] : leaf.entries()) {
    auto [i, j, t] = key;
    int a = position[static_cast<std::size_t>(i)];
    int b = position[static_cast<std::size_t>(j)];
    if (a >= 0 && b >= 0) out.add(a, b, t, count);
  }
  return out;
}

/// All leaf demand re-indexed to the regions of layer `k`.
inline DemandTensor aggregate_to_layer(const DemandTensor& leaf, const RegionTree& tree, int k) {
  if (leaf.layer() != tree.leaf_layer() || leaf.n() != tree.size(tree.leaf_layer()))
    throw DemandError("aggregation needs a leaf-layer demand tensor");
  std::vector<int> up(static_cast<std::size_t>(leaf.n()));
  for (int lf = 0; lf < leaf.n(); ++lf) up[static_cast<std::size_t>(lf)] = tree.ancestor({tree.leaf_layer(), lf}, k).index;
  DemandTensor out(tree.size(k), leaf.horizon(), k, "layer:" + std::to_string(k));
  for (const auto& [key, count] : leaf.entries()) {
    auto [i, j, t] = key;
    out.add(up[static_cast<std::size_t>(i)], up[static_cast<std::size_t>(j)], t, count);
  }
  return out;
}

/// Steps [start, start + length) of a tensor, re-based to step 0.
inline DemandTensor slice_window(const DemandTensor& d, int start, int length) {
  if (start < 0 || length < 1 || start + length > d.horizon()) throw DemandError("window lies outside the horizon");
  DemandTensor out(d.n(), length, d.layer(), d.region_set());
  for (const auto& [key, count] : d.entries()) {
    auto [i, j, t] = key;
    if (t >= start && t < start + length) out.add(i, j, t - start, count);
  }
  return out;
}

struct PrunedTree {
  RegionTree tree;
  DemandTensor demand;
};

/// Drops leaves that never appear as an origin or destination, then every
/// region left without leaves, and re-indexes the demand accordingly.
inline PrunedTree prune_empty_regions(const RegionTree& tree, const DemandTensor& demand) {
  if (demand.layer() != tree.leaf_layer() || demand.n() != tree.size(tree.leaf_layer()))
    throw DemandError("pruning needs demand binned at the leaf layer");
  std::vector<bool> used(static_cast<std::size_t>(demand.n()), false);
  for (const auto& [key, count] : demand.entries()) {
    used[static_cast<std::size_t>(std::get<0>(key))] = true;
    used[static_cast<std::size_t>(std::get<1>(key))] = true;
  }
  auto [pruned, map] = retain_leaves(tree, used);
  DemandTensor out(pruned.size(pruned.leaf_layer()), demand.horizon(), pruned.leaf_layer(), demand.region_set());
  for (const auto& [key, count] : demand.entries()) {
    auto [i, j, t] = key;
    out.add(map[static_cast<std::size_t>(i)], map[static_cast<std::size_t>(j)], t, count);
  }
  return {std::move(pruned), std::move(out)};
}

struct SynthParams {
  std::uint64_t seed = 1;
  int n_regions = 4;
  int horizon = 10;
  double intensity = 0.5;  // expected requests per region per step
  double imbalance = 0.3;  // in [0, 1): skews origins and destinations apart
  // Optional geometry: when grid_cols > 0 regions are laid out row-major on a
  // grid and destinations decay as exp(-locality * L1 distance in cells).
  int grid_cols = 0;
  double locality = 0.0;
  int layer = 0;  // tree layer the tensor is indexed by
};

/// Reproducible synthetic demand. Half of the regions (chosen by the seed) are
/// origin-heavy and the other half destination-heavy, so rebalancing is needed.
inline DemandTensor synth_demand(const SynthParams& p) {
  if (p.intensity < 0) throw DemandError("intensity must be nonnegative");
  if (p.imbalance < 0 || p.imbalance >= 1) throw DemandError("imbalance must lie in [0, 1)");
  DemandTensor out(p.n_regions, p.horizon, p.layer);
  if (p.n_regions == 0) return out;
  std::mt19937_64 rng(p.seed);
  std::vector<int> order(static_cast<std::size_t>(p.n_regions));
  for (int i = 0; i < p.n_regions; ++i) order[static_cast<std::size_t>(i)] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<double> w_origin(order.size()), w_dest(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    double s = r < order.size() / 2 ? 1.0 : -1.0;
    w_origin[static_cast<std::size_t>(order[r])] = 1.0 + p.imbalance * s;
    w_dest[static_cast<std::size_t>(order[r])] = 1.0 - p.imbalance * s;
  }
  std::vector<std::optional<std::discrete_distribution<int>>> dest(order.size());
  auto dest_for = [&](int i) -> std::discrete_distribution<int>& {
    auto& d = dest[static_cast<std::size_t>(i)];
    if (!d) {
      std::vector<double> w(w_dest);
      if (p.grid_cols > 0) {
        for (int j = 0; j < p.n_regions; ++j) {
          int cells = std::abs(i / p.grid_cols - j / p.grid_cols) + std::abs(i % p.grid_cols - j % p.grid_cols);
          w[static_cast<std::size_t>(j)] *= std::exp(-p.locality * cells);
        }
      }
      d.emplace(w.begin(), w.end());
    }
    return *d;
  };
  for (int t = 0; t < p.horizon; ++t)
    for (int i = 0; i < p.n_regions; ++i) {
      std::poisson_distribution<int> count(p.intensity * w_origin[static_cast<std::size_t>(i)]);
      int k = p.intensity > 0 ? count(rng) : 0;
      for (int r = 0; r < k; ++r) out.add(i, dest_for(i)(rng), t);
    }
  return out;
}

/// Vehicles in service per step: a trip departing at t with travel time tau
/// occupies a vehicle over [t, t + tau). The per-step maximum overlap is the
/// interval-graph lower bound on vehicles; V_t = ceil(headroom * overlap_t).
inline FleetSchedule fleet_from_demand(const DemandTensor& demand, const TravelMatrix& travel, const Rational& headroom) {
  if (headroom < Rational(1)) throw DemandError("headroom must be at least 1");
  if (travel.n != demand.n()) throw DemandError("travel matrix does not match the demand's region set");
  const int T = demand.horizon();
  std::vector<std::int64_t> delta(static_cast<std::size_t>(T) + 1, 0);
  for (const auto& [key, count] : demand.entries()) {
    auto [i, j, t] = key;
    int end = std::min(T, t + travel.t(i, j));
    delta[static_cast<std::size_t>(t)] += count;
    delta[static_cast<std::size_t>(end)] -= count;
  }
  FleetSchedule out;
  out.v.resize(static_cast<std::size_t>(T));
  std::int64_t running = 0;
  for (int t = 0; t < T; ++t) {
    running += delta[static_cast<std::size_t>(t)];
    std::int64_t scaled = checked_mul(running, headroom.num);
    out.v[static_cast<std::size_t>(t)] = (scaled + headroom.den - 1) / headroom.den;
  }
  return out;
}

inline void write_demand_csv(const DemandTensor& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DemandError("cannot write " + path);
  out << "layer,region_set,i,j,t,count\n";
  for (const auto& [key, count] : d.entries()) {
    auto [i, j, t] = key;
    out << d.layer() << ',' << d.region_set() << ',' << i << ',' << j << ',' << t << ',' << count << '\n';
  }
}

/// Reads a sparse demand CSV; the region count and horizon are not stored in
/// the file, so they are supplied by the caller.
inline DemandTensor read_demand_csv(const std::string& path, int n, int horizon) {
  csv::Reader reader(path);
  auto need = [&](const char* c) {
    auto idx = reader.column(c);
    if (!idx) throw DemandError(std::string("demand file is missing column ") + c);
    return *idx;
  };
  std::size_t cl = need("layer"), cs = need("region_set"), ci = need("i"), cj = need("j"), ct = need("t"),
              cc = need("count");
  std::optional<DemandTensor> out;
  std::vector<std::string_view> f;
  while (reader.next(f)) {
    if (!out) out.emplace(n, horizon, static_cast<int>(csv::to_int(f[cl])), std::string(f[cs]));
    out->add(static_cast<int>(csv::to_int(f[ci])), static_cast<int>(csv::to_int(f[cj])),
             static_cast<int>(csv::to_int(f[ct])), csv::to_int(f[cc]));
  }
  if (!out) out.emplace(n, horizon);
  return *out;
}

}  // namespace nero
