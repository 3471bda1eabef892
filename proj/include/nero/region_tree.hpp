#pragma once

// Tree-shaped sets of square grid regions and per-layer travel matrices.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "nero/error.hpp"
#include "nero/rational.hpp"

namespace nero {

struct GeoBox {
  double min_lat = 0, min_lon = 0, max_lat = 0, max_lon = 0;
};

struct MeshConfig {
  // Service area. When `geo` is set, width/height are derived from it by an
  // equirectangular projection anchored at the south-west corner.
  std::optional<GeoBox> geo;
  double width_m = 0;
  double height_m = 0;

  std::vector<std::int64_t> mesh_sizes_m;  // coarse to fine
  double v_avg_mps = 5.5;
  double step_min = 3.0;
  int horizon_steps = 20;
  Rational cost_per_step{1};

  // Optional per-layer travel time (minutes) to an adjacent cell. Replaces
  // mesh/v_avg when present, e.g. to reproduce a published table of times.
  std::vector<double> adjacent_tau_min;
  // Pairwise overrides keyed by (layer, i, j) in region indices of that layer.
  std::map<std::tuple<int, int, int>, int> tau_override;

  std::optional<std::string> window_start;  // "YYYY-MM-DD HH:MM:SS", used by trip ingestion

  [[nodiscard]] double step_seconds() const { return step_min * 60.0; }

  /// Time (minutes) to traverse one cell of the given layer.
  [[nodiscard]] double cell_travel_minutes(int layer) const {
    if (!adjacent_tau_min.empty()) return adjacent_tau_min.at(static_cast<std::size_t>(layer));
    return static_cast<double>(mesh_sizes_m.at(static_cast<std::size_t>(layer))) / v_avg_mps / 60.0;
  }

  void validate() const {
    if (mesh_sizes_m.empty()) throw ConfigError("mesh_sizes_m must list at least one mesh size");
    for (std::size_t k = 0; k < mesh_sizes_m.size(); ++k) {
      if (mesh_sizes_m[k] <= 0) throw ConfigError("mesh sizes must be positive");
      if (k > 0 && mesh_sizes_m[k] >= mesh_sizes_m[k - 1])
        throw ConfigError("mesh sizes must be strictly decreasing from the top layer");
    }
    if (!(v_avg_mps > 0)) throw ConfigError("v_avg_mps must be positive");
    if (!(step_min > 0)) throw ConfigError("step_min must be positive");
    if (horizon_steps < 1) throw ConfigError("horizon_steps must be at least 1");
    if (cost_per_step <= Rational(0)) throw ConfigError("cost_per_step must be positive");
    if (!adjacent_tau_min.empty() && adjacent_tau_min.size() != mesh_sizes_m.size())
      throw ConfigError("adjacent_tau_min needs one entry per layer");
    if (!(extent_width() > 0) || !(extent_height() > 0)) throw ConfigError("bounding box has no area");
  }

  [[nodiscard]] double extent_width() const {
    if (!geo) return width_m;
    double mid = (geo->min_lat + geo->max_lat) / 2 * std::numbers::pi / 180;
    return (geo->max_lon - geo->min_lon) * std::numbers::pi / 180 * kEarthRadius * std::cos(mid);
  }
  [[nodiscard]] double extent_height() const {
    if (!geo) return height_m;
    return (geo->max_lat - geo->min_lat) * std::numbers::pi / 180 * kEarthRadius;
  }

  /// Projects a lat/lon to metric (x east, y north) relative to the south-west corner.
  [[nodiscard]] std::pair<double, double> project(double lat, double lon) const {
    if (!geo) return {lon, lat};
    double mid = (geo->min_lat + geo->max_lat) / 2 * std::numbers::pi / 180;
    double x = (lon - geo->min_lon) * std::numbers::pi / 180 * kEarthRadius * std::cos(mid);
    double y = (lat - geo->min_lat) * std::numbers::pi / 180 * kEarthRadius;
    return {x, y};
  }

  static constexpr double kEarthRadius = 6371008.8;
};

struct RegionId {
  int layer = 0;
  int index = 0;
  friend auto operator<=>(const RegionId&, const RegionId&) = default;
};

struct Region {
  int row = 0;  // grid coordinates at the region's own layer, row 0 is the southern edge
  int col = 0;
  int parent = -1;            // index in the layer above, -1 at the top layer
  std::vector<int> children;  // indices in the layer below, row-major within this cell
};

struct Layer {
  std::int64_t mesh_m = 0;
  int rows = 0;  // full grid dimensions before any pruning
  int cols = 0;
  std::vector<Region> regions;  // row-major over the grid
};

class RegionTree {
 public:
  RegionTree() = default;
  RegionTree(std::vector<Layer> layers, std::optional<int> branching)
      : layers_(std::move(layers)), branching_(branching) {
    rebuild_lookup();
  }

  [[nodiscard]] int depth() const { return static_cast<int>(layers_.size()); }
  [[nodiscard]] int leaf_layer() const { return depth() - 1; }
  [[nodiscard]] const Layer& layer(int k) const { return layers_.at(static_cast<std::size_t>(k)); }
  [[nodiscard]] std::span<const Layer> layers() const { return layers_; }
  [[nodiscard]] int size(int k) const { return static_cast<int>(layer(k).regions.size()); }
  [[nodiscard]] std::optional<int> branching() const { return branching_; }

  [[nodiscard]] bool contains(RegionId id) const {
    return id.layer >= 0 && id.layer < depth() && id.index >= 0 && id.index < size(id.layer);
  }
  [[nodiscard]] const Region& region(RegionId id) const {
    if (!contains(id)) throw TreeError("region id out of range");
    return layers_[static_cast<std::size_t>(id.layer)].regions[static_cast<std::size_t>(id.index)];
  }

  [[nodiscard]] std::vector<RegionId> layer_ids(int k) const {
    std::vector<RegionId> out;
    out.reserve(static_cast<std::size_t>(size(k)));
    for (int i = 0; i < size(k); ++i) out.push_back({k, i});
    return out;
  }

  /// Children(l): the regions subdividing l one layer down, row-major.
  [[nodiscard]] std::vector<RegionId> children(RegionId id) const {
    const Region& r = region(id);
    if (id.layer == leaf_layer() || r.children.empty())
      throw TreeError("region " + std::to_string(id.layer) + ":" + std::to_string(id.index) + " has no children");
    std::vector<RegionId> out;
    out.reserve(r.children.size());
    for (int c : r.children) out.push_back({id.layer + 1, c});
    return out;
  }

  /// Parent(l): the unique region one layer up containing l.
  [[nodiscard]] RegionId parent(RegionId id) const {
    const Region& r = region(id);
    if (id.layer == 0) throw TreeError("top-layer region has no parent");
    return {id.layer - 1, r.parent};
  }

  /// Ancestor of `id` at layer `k` (k <= id.layer).
  [[nodiscard]] RegionId ancestor(RegionId id, int k) const {
    if (k > id.layer || k < 0) throw TreeError("ancestor layer must not be below the region");
    while (id.layer > k) id = parent(id);
    return id;
  }

  /// Leaf-layer region indices under `id`, ascending.
  [[nodiscard]] std::vector<int> leaves_under(RegionId id) const {
    std::vector<int> frontier{id.index};
    for (int k = id.layer; k < leaf_layer(); ++k) {
      std::vector<int> next;
      for (int i : frontier) {
        const auto& ch = layer(k).regions[static_cast<std::size_t>(i)].children;
        next.insert(next.end(), ch.begin(), ch.end());
      }
      frontier = std::move(next);
    }
    std::sort(frontier.begin(), frontier.end());
    return frontier;
  }

  /// Cell center in metres.
  [[nodiscard]] std::pair<double, double> center(RegionId id) const {
    const Region& r = region(id);
    double m = static_cast<double>(layer(id.layer).mesh_m);
    return {(r.col + 0.5) * m, (r.row + 0.5) * m};
  }

  /// Leaf index covering the metric point, if the cell exists.
  [[nodiscard]] std::optional<int> locate_leaf(double x, double y) const {
    const Layer& leaf = layer(leaf_layer());
    double m = static_cast<double>(leaf.mesh_m);
    if (x < 0 || y < 0) return std::nullopt;
    auto col = static_cast<long long>(std::floor(x / m));
    auto row = static_cast<long long>(std::floor(y / m));
    if (row >= leaf.rows || col >= leaf.cols) return std::nullopt;
    int idx = leaf_grid_[static_cast<std::size_t>(row * leaf.cols + col)];
    if (idx < 0) return std::nullopt;
    return idx;
  }

  /// Leaf whose cell is nearest the center of `id` (lowest index on ties).
  [[nodiscard]] int center_leaf(RegionId id) const {
    auto [cx, cy] = center(id);
    int best = -1;
    double best_d = 0;
    for (int leaf : leaves_under(id)) {
      auto [x, y] = center({leaf_layer(), leaf});
      double d = std::abs(x - cx) + std::abs(y - cy);
      if (best < 0 || d < best_d - 1e-9) {
        best = leaf;
        best_d = d;
      }
    }
    return best;
  }

 private:
  void rebuild_lookup() {
    leaf_grid_.clear();
    if (layers_.empty()) return;
    const Layer& leaf = layers_.back();
    leaf_grid_.assign(static_cast<std::size_t>(leaf.rows) * static_cast<std::size_t>(leaf.cols), -1);
    for (std::size_t i = 0; i < leaf.regions.size(); ++i) {
      const Region& r = leaf.regions[i];
      leaf_grid_[static_cast<std::size_t>(r.row * leaf.cols + r.col)] = static_cast<int>(i);
    }
  }

  std::vector<Layer> layers_;
  std::optional<int> branching_;
  std::vector<int> leaf_grid_;
};

/// Tiles the bounding box with square cells at every mesh size. Each finer
/// mesh must divide the next coarser one exactly.
inline RegionTree build_uniform_tree(const MeshConfig& cfg) {
  cfg.validate();
  const auto& sizes = cfg.mesh_sizes_m;
  std::vector<int> ratio(sizes.size(), 1);
  for (std::size_t k = 1; k < sizes.size(); ++k) {
    if (sizes[k - 1] % sizes[k] != 0)
      throw MeshError("mesh size " + std::to_string(sizes[k]) + " m does not divide " + std::to_string(sizes[k - 1]) +
                      " m");
    ratio[k] = static_cast<int>(sizes[k - 1] / sizes[k]);
  }

  std::vector<Layer> layers(sizes.size());
  layers[0].mesh_m = sizes[0];
  layers[0].rows = static_cast<int>(std::ceil(cfg.extent_height() / static_cast<double>(sizes[0]) - 1e-9));
  layers[0].cols = static_cast<int>(std::ceil(cfg.extent_width() / static_cast<double>(sizes[0]) - 1e-9));
  for (std::size_t k = 1; k < sizes.size(); ++k) {
    layers[k].mesh_m = sizes[k];
    layers[k].rows = layers[k - 1].rows * ratio[k];
    layers[k].cols = layers[k - 1].cols * ratio[k];
  }
  for (auto& layer : layers) {
    layer.regions.resize(static_cast<std::size_t>(layer.rows) * static_cast<std::size_t>(layer.cols));
    for (int r = 0; r < layer.rows; ++r)
      for (int c = 0; c < layer.cols; ++c) {
        auto& reg = layer.regions[static_cast<std::size_t>(r * layer.cols + c)];
        reg.row = r;
        reg.col = c;
      }
  }
  for (std::size_t k = 1; k < sizes.size(); ++k) {
    Layer& up = layers[k - 1];
    Layer& down = layers[k];
    const int q = ratio[k];
    for (int pr = 0; pr < up.rows; ++pr)
      for (int pc = 0; pc < up.cols; ++pc) {
        int pidx = pr * up.cols + pc;
        auto& parent = up.regions[static_cast<std::size_t>(pidx)];
        for (int dr = 0; dr < q; ++dr)
          for (int dc = 0; dc < q; ++dc) {
            int cidx = (pr * q + dr) * down.cols + (pc * q + dc);
            parent.children.push_back(cidx);
            down.regions[static_cast<std::size_t>(cidx)].parent = pidx;
          }
      }
  }

  std::optional<int> branching;
  if (sizes.size() > 1 && std::all_of(ratio.begin() + 1, ratio.end(), [&](int q) { return q == ratio[1]; }))
    branching = ratio[1] * ratio[1];
  return RegionTree(std::move(layers), branching);
}

/// Rebuilds a tree keeping only the flagged leaves and every ancestor that
/// still has a leaf below it. Regions keep their grid coordinates and are
/// re-indexed row-major. Returns the old-to-new leaf index map (-1 = removed).
inline std::pair<RegionTree, std::vector<int>> retain_leaves(const RegionTree& tree, const std::vector<bool>& keep) {
  const int depth = tree.depth();
  if (static_cast<int>(keep.size()) != tree.size(depth - 1)) throw TreeError("leaf mask has the wrong size");
  std::vector<std::vector<bool>> alive(static_cast<std::size_t>(depth));
  alive.back() = keep;
  for (int k = depth - 2; k >= 0; --k) {
    alive[static_cast<std::size_t>(k)].assign(static_cast<std::size_t>(tree.size(k)), false);
    for (int i = 0; i < tree.size(k); ++i)
      for (int c : tree.layer(k).regions[static_cast<std::size_t>(i)].children)
        if (alive[static_cast<std::size_t>(k + 1)][static_cast<std::size_t>(c)])
          alive[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] = true;
  }
  if (std::none_of(alive[0].begin(), alive[0].end(), [](bool b) { return b; }))
    throw TreeError("pruning removed every region");

  std::vector<std::vector<int>> remap(static_cast<std::size_t>(depth));
  std::vector<Layer> layers(static_cast<std::size_t>(depth));
  for (int k = 0; k < depth; ++k) {
    const Layer& src = tree.layer(k);
    Layer& dst = layers[static_cast<std::size_t>(k)];
    dst.mesh_m = src.mesh_m;
    dst.rows = src.rows;
    dst.cols = src.cols;
    auto& map = remap[static_cast<std::size_t>(k)];
    map.assign(src.regions.size(), -1);
    for (std::size_t i = 0; i < src.regions.size(); ++i) {
      if (!alive[static_cast<std::size_t>(k)][i]) continue;
      map[i] = static_cast<int>(dst.regions.size());
      Region r = src.regions[i];
      r.children.clear();
      dst.regions.push_back(std::move(r));
    }
  }
  for (int k = 0; k < depth; ++k) {
    const Layer& src = tree.layer(k);
    for (std::size_t i = 0; i < src.regions.size(); ++i) {
      int ni = remap[static_cast<std::size_t>(k)][i];
      if (ni < 0) continue;
      Region& r = layers[static_cast<std::size_t>(k)].regions[static_cast<std::size_t>(ni)];
      if (k > 0) r.parent = remap[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(src.regions[i].parent)];
      if (k + 1 < depth)
        for (int c : src.regions[i].children)
          if (int nc = remap[static_cast<std::size_t>(k + 1)][static_cast<std::size_t>(c)]; nc >= 0)
            r.children.push_back(nc);
    }
  }

  std::optional<int> branching = tree.branching();
  if (branching) {
    for (int k = 0; k + 1 < depth && branching; ++k)
      for (const auto& r : layers[static_cast<std::size_t>(k)].regions)
        if (static_cast<int>(r.children.size()) != *branching) {
          branching.reset();
          break;
        }
  }
  return {RegionTree(std::move(layers), branching), remap.back()};
}

/// The first `depth` layers of a tree; regions of the new leaf layer lose their children.
inline RegionTree truncate_tree(const RegionTree& tree, int depth) {
  if (depth < 1 || depth > tree.depth()) throw TreeError("truncated depth must lie between 1 and the tree depth");
  std::vector<Layer> layers(tree.layers().begin(), tree.layers().begin() + depth);
  for (auto& r : layers.back().regions) r.children.clear();
  return RegionTree(std::move(layers), depth > 1 ? tree.branching() : std::nullopt);
}

/// Pairwise travel times (whole steps) and costs between regions of one layer.
struct TravelMatrix {
  int n = 0;
  std::vector<int> tau;                 // row-major n*n, every entry >= 1
  std::vector<std::int64_t> cost_units;  // cost = cost_units / cost_den
  std::int64_t cost_den = 1;

  [[nodiscard]] int t(int i, int j) const { return tau[static_cast<std::size_t>(i * n + j)]; }
  [[nodiscard]] std::int64_t c(int i, int j) const { return cost_units[static_cast<std::size_t>(i * n + j)]; }
  [[nodiscard]] Rational cost(int i, int j) const { return Rational(c(i, j), cost_den); }
  [[nodiscard]] int max_tau() const { return tau.empty() ? 0 : *std::max_element(tau.begin(), tau.end()); }

  /// Builds costs as cost_per_step * tau off the diagonal and zero on it.
  static TravelMatrix from_tau(int n, std::vector<int> tau, const Rational& cost_per_step) {
    TravelMatrix m;
    m.n = n;
    m.tau = std::move(tau);
    m.cost_den = cost_per_step.den;
    m.cost_units.assign(m.tau.size(), 0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        auto idx = static_cast<std::size_t>(i * n + j);
        if (m.tau[idx] < 1) throw MeshError("travel times must be at least one step");
        m.cost_units[idx] = i == j ? 0 : checked_mul(cost_per_step.num, m.tau[idx]);
      }
    return m;
  }
};

/// Travel time in steps between two cells `cells` apart (L1, in cells of the given layer).
inline int steps_for_cells(const MeshConfig& cfg, int layer, std::int64_t mesh_m, int cells) {
  if (cells == 0) return 1;
  double minutes;
  if (!cfg.adjacent_tau_min.empty()) {
    minutes = cells * cfg.adjacent_tau_min.at(static_cast<std::size_t>(layer));
  } else {
    double metres = static_cast<double>(cells) * static_cast<double>(mesh_m);
    minutes = metres / cfg.v_avg_mps / 60.0;
  }
  double steps = minutes / cfg.step_min;
  return std::max(1, static_cast<int>(std::ceil(steps - 1e-9 * std::max(1.0, steps))));
}

/// tau_ij = max(1, ceil(D_ij / v_avg / step)) with D_ij the L1 distance between
/// cell centers; tau_ii = 1. Overrides from the config replace computed values.
inline TravelMatrix travel_matrix(const RegionTree& tree, std::span<const RegionId> regions, const MeshConfig& cfg) {
  if (regions.empty()) throw MeshError("travel matrix over an empty region set");
  const int layer = regions.front().layer;
  for (const auto& r : regions)
    if (r.layer != layer) throw MeshError("travel matrix regions must share one layer");
  const std::int64_t mesh = tree.layer(layer).mesh_m;
  const int n = static_cast<int>(regions.size());
  std::vector<int> tau(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 1);
  for (int a = 0; a < n; ++a) {
    const Region& ra = tree.region(regions[static_cast<std::size_t>(a)]);
    for (int b = 0; b < n; ++b) {
      if (a == b) continue;
      const Region& rb = tree.region(regions[static_cast<std::size_t>(b)]);
      int cells = std::abs(ra.row - rb.row) + std::abs(ra.col - rb.col);
      tau[static_cast<std::size_t>(a * n + b)] = steps_for_cells(cfg, layer, mesh, cells);
    }
  }
  if (!cfg.tau_override.empty()) {
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        auto it = cfg.tau_override.find({layer, regions[static_cast<std::size_t>(a)].index,
                                         regions[static_cast<std::size_t>(b)].index});
        if (it != cfg.tau_override.end()) {
          if (it->second < 1) throw MeshError("tau override must be at least one step");
          tau[static_cast<std::size_t>(a * n + b)] = it->second;
        }
      }
  }
  return TravelMatrix::from_tau(n, std::move(tau), cfg.cost_per_step);
}

inline TravelMatrix travel_matrix(const RegionTree& tree, int layer, const MeshConfig& cfg) {
  auto ids = tree.layer_ids(layer);
  return travel_matrix(tree, ids, cfg);
}

}  // namespace nero
