#pragma once

// Loading MeshConfig and other documents from TOML or JSON files.

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>

#include "json.hpp"
#include "toml.hpp"

#include "nero/csv.hpp"
#include "nero/error.hpp"
#include "nero/rational.hpp"
#include "nero/region_tree.hpp"

namespace nero {

namespace detail {

inline nlohmann::json toml_to_json(const toml::node& node) {
  if (const auto* t = node.as_table()) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [k, v] : *t) out[std::string(k.str())] = toml_to_json(v);
    return out;
  }
  if (const auto* a = node.as_array()) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& v : *a) out.push_back(toml_to_json(v));
    return out;
  }
  if (const auto* s = node.as_string()) return s->get();
  if (const auto* i = node.as_integer()) return i->get();
  if (const auto* f = node.as_floating_point()) return f->get();
  if (const auto* b = node.as_boolean()) return b->get();
  // dates and times are kept as their TOML text
  std::ostringstream os;
  if (const auto* d = node.as_date()) os << *d;
  else if (const auto* t = node.as_time()) os << *t;
  else if (const auto* dt = node.as_date_time()) os << *dt;
  return os.str();
}

}  // namespace detail

/// Reads a `.toml` or `.json` file into a JSON value.
inline nlohmann::json load_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  auto ext = std::filesystem::path(path).extension().string();
  try {
    if (ext == ".toml") return detail::toml_to_json(toml::parse(in, path));
    return nlohmann::json::parse(in);
  } catch (const toml::parse_error& e) {
    throw ConfigError(path + ": " + std::string(e.description()));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

/// Numbers are read exactly when given as strings ("1/3", "0.25").
inline Rational rational_value(const nlohmann::json& v) {
  if (v.is_string()) return Rational::parse(v.get<std::string>());
  if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
  if (v.is_number()) return Rational::from_double(v.get<double>());
  throw ConfigError("expected a number or a rational string");
}

/// tau_override CSV with columns layer,i,j,tau_steps.
inline std::map<std::tuple<int, int, int>, int> read_tau_override(const std::string& path) {
  std::ifstream probe(path);
  if (!probe) throw ConfigError("cannot read tau override file: " + path);
  probe.close();
  csv::Reader reader(path);
  auto need = [&](const char* c) {
    auto idx = reader.column(c);
    if (!idx) throw ConfigError(std::string("tau override file is missing column ") + c);
    return *idx;
  };
  std::size_t cl = need("layer"), ci = need("i"), cj = need("j"), ct = need("tau_steps");
  std::map<std::tuple<int, int, int>, int> out;
  std::vector<std::string_view> f;
  while (reader.next(f)) {
    int tau = static_cast<int>(csv::to_int(f[ct]));
    if (tau < 1) throw ConfigError("tau override must be at least one step");
    out[{static_cast<int>(csv::to_int(f[cl])), static_cast<int>(csv::to_int(f[ci])), static_cast<int>(csv::to_int(f[cj]))}] =
        tau;
  }
  return out;
}

/// Keys: bbox {min_lat, min_lon, max_lat, max_lon} or {width_m, height_m},
/// mesh_sizes_m, v_avg_mps, step_min, horizon_steps, cost_per_step, and the
/// optional adjacent_tau_min, window_start and tau_override (a CSV path,
/// resolved against `base_dir`).
inline MeshConfig mesh_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  if (!j.is_object()) throw ConfigError("mesh config must be a table");
  MeshConfig cfg;
  try {
    if (!j.contains("bbox")) throw ConfigError("mesh config needs a bbox");
    const auto& b = j.at("bbox");
    if (b.contains("width_m")) {
      cfg.width_m = b.at("width_m").get<double>();
      cfg.height_m = b.at("height_m").get<double>();
    } else {
      cfg.geo = GeoBox{b.at("min_lat").get<double>(), b.at("min_lon").get<double>(), b.at("max_lat").get<double>(),
                       b.at("max_lon").get<double>()};
    }
    cfg.mesh_sizes_m = j.at("mesh_sizes_m").get<std::vector<std::int64_t>>();
    if (j.contains("v_avg_mps")) cfg.v_avg_mps = j.at("v_avg_mps").get<double>();
    if (j.contains("step_min")) cfg.step_min = j.at("step_min").get<double>();
    if (j.contains("horizon_steps")) cfg.horizon_steps = j.at("horizon_steps").get<int>();
    if (j.contains("cost_per_step")) cfg.cost_per_step = rational_value(j.at("cost_per_step"));
    if (j.contains("adjacent_tau_min")) cfg.adjacent_tau_min = j.at("adjacent_tau_min").get<std::vector<double>>();
    if (j.contains("window_start")) cfg.window_start = j.at("window_start").get<std::string>();
    if (j.contains("tau_override")) {
      std::filesystem::path p = j.at("tau_override").get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      cfg.tau_override = read_tau_override(p.string());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("mesh config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

/// Loads a mesh config file. A top-level [mesh] table is used when present.
inline MeshConfig load_mesh_config(const std::string& path) {
  auto doc = load_document(path);
  const auto& j = doc.contains("mesh") ? doc.at("mesh") : doc;
  return mesh_config_from_json(j, std::filesystem::path(path).parent_path());
}

}  // namespace nero
