#pragma once

// Scenario files (JSON with unit-suffixed keys) and AIS baseline ingestion.

#include "quietvoyage/errors.hpp"
#include "quietvoyage/geo_env.hpp"
#include "quietvoyage/noise_source.hpp"
#include "quietvoyage/route.hpp"
#include "quietvoyage/speed_optimizer.hpp"
#include "quietvoyage/wildlife.hpp"

#include "json.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace qv {

using Json = nlohmann::ordered_json;

struct DataPaths {
  std::string bathymetry;
  std::string lane_mask; // empty: every water cell is navigable
  std::string sightings;
  std::string depths;
  std::string tl_cache = "tl_cache";
  std::string ais_track; // optional baseline

  friend bool operator==(const DataPaths&, const DataPaths&) = default;
};

struct TlSettings {
  std::vector<GeoPoint> sources; // empty: spread along departure-destination
  int source_count = 15;
  double radius_m = 20000.0;
  int ranges = 12;
  int bearings = 24;
  int depths = 3;
  int clusters = 250;
  int per_cluster = 2;
  double depth_weight = 0.2;

  friend bool operator==(const TlSettings&, const TlSettings&) = default;
};

struct PlannerSettings {
  int batch_size = 100;
  int max_batches = 12;
  double goal_radius_m = 500.0;
  double min_depth_m = 10.0;
  double time_budget_s = 120.0;

  friend bool operator==(const PlannerSettings&, const PlannerSettings&) = default;
};

struct SpeedSettings {
  int legs = kDefaultLegs;
  int population = 1000;
  int max_generations = 200;
  double time_budget_s = 300.0;

  friend bool operator==(const SpeedSettings&, const SpeedSettings&) = default;
};

struct SimSettings {
  double tick_min = 1.0;
  double replan_cadence_h = 0.5; // 0 disables re-planning

  friend bool operator==(const SimSettings&, const SimSettings&) = default;
};

struct Seeds {
  std::uint64_t planner = 1;
  std::uint64_t ga = 11;
  std::uint64_t wildlife = 5;
  std::uint64_t rbf = 7;

  friend bool operator==(const Seeds&, const Seeds&) = default;
};

struct ScenarioConfig {
  std::string name = "scenario";
  GeoPoint departure{};
  GeoPoint destination{};
  double eta_h = 0.0;
  ShipSpec ship{};
  int mammal_count = 0;
  std::vector<MammalState> mammals; // explicit placements win over the count
  double mammal_speed_min_kt = 0.5;
  double mammal_speed_max_kt = 2.5;
  DataPaths paths{};
  TlSettings tl{};
  PlannerSettings planner{};
  SpeedSettings speed{};
  SimSettings sim{};
  Seeds seeds{};
  std::string base_dir; // directory relative paths resolve against

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;

  [[nodiscard]] std::string resolve(const std::string& p) const {
    if (p.empty()) return p;
    const std::filesystem::path path(p);
    if (path.is_absolute() || base_dir.empty()) return p;
    return (std::filesystem::path(base_dir) / path).lexically_normal().string();
  }
};

namespace detail {

inline int key_line(const std::string& text, const std::string& key) {
  const auto pos = text.find("\"" + key + "\"");
  if (pos == std::string::npos) return 0;
  return 1 + static_cast<int>(std::count(text.begin(),
                                         text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

class Reader {
public:
  Reader(const std::string& text, std::vector<std::string>* warnings)
      : text_(text), warnings_(warnings) {}

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    const int line = key_line(text_, leaf(key));
    std::ostringstream os;
    os << "scenario key '" << key << "'";
    if (line > 0) os << " (line " << line << ")";
    os << ": " << msg;
    throw ParseError(key, line, os.str());
  }

  void warn(const std::string& msg) const {
    if (warnings_) warnings_->push_back(msg);
  }

  /// Rejects keys not in `known` so typos do not silently fall back to
  /// defaults.
  void only(const Json& obj, const std::string& where,
            std::initializer_list<const char*> known) const {
    std::set<std::string> ok(known.begin(), known.end());
    for (const auto& [k, v] : obj.items())
      if (!ok.count(k)) fail(where.empty() ? k : where + "." + k, "unknown key");
  }

  const Json& object(const Json& parent, const std::string& key,
                     const std::string& path) const {
    if (!parent.contains(key)) fail(path, "missing required key");
    const Json& v = parent.at(key);
    if (!v.is_object()) fail(path, "expected an object");
    return v;
  }

  double number(const Json& parent, const std::string& key,
                const std::string& path, std::optional<double> def = {}) const {
    if (!parent.contains(key)) {
      if (def) return *def;
      fail(path, "missing required key");
    }
    const Json& v = parent.at(key);
    if (!v.is_number()) fail(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(path, "must be finite");
    return d;
  }

  int integer(const Json& parent, const std::string& key,
              const std::string& path, std::optional<int> def = {}) const {
    if (!parent.contains(key)) {
      if (def) return *def;
      fail(path, "missing required key");
    }
    const Json& v = parent.at(key);
    if (!v.is_number_integer()) fail(path, "expected an integer");
    return v.get<int>();
  }

  std::uint64_t seed(const Json& parent, const std::string& key,
                     const std::string& path, std::uint64_t def) const {
    if (!parent.contains(key)) return def;
    const Json& v = parent.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      fail(path, "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  std::string string(const Json& parent, const std::string& key,
                     const std::string& path,
                     std::optional<std::string> def = {}) const {
    if (!parent.contains(key)) {
      if (def) return *def;
      fail(path, "missing required key");
    }
    const Json& v = parent.at(key);
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
  }

  GeoPoint point(const Json& parent, const std::string& key,
                 const std::string& path, double depth = 0.0) const {
    const Json& o = object(parent, key, path);
    only(o, path, {"lat_deg", "lon_deg"});
    GeoPoint p{number(o, "lat_deg", path + ".lat_deg"),
               number(o, "lon_deg", path + ".lon_deg"), depth};
    if (p.lat < -90 || p.lat > 90) fail(path + ".lat_deg", "outside [-90, 90]");
    if (p.lon < -180 || p.lon > 180) fail(path + ".lon_deg", "outside [-180, 180]");
    return p;
  }

private:
  static std::string leaf(const std::string& key) {
    const auto dot = key.rfind('.');
    std::string k = dot == std::string::npos ? key : key.substr(dot + 1);
    const auto br = k.find('[');
    return br == std::string::npos ? k : k.substr(0, br);
  }

  const std::string& text_;
  std::vector<std::string>* warnings_;
};

} // namespace detail

/// Parses scenario JSON text. Relative paths are kept as written and resolved
/// against `base_dir`; file existence is checked only when `check_files`.
inline ScenarioConfig parse_scenario_text(const std::string& text,
                                          const std::string& base_dir = "",
                                          std::vector<std::string>* warnings = nullptr,
                                          bool check_files = true) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const int line = 1 + static_cast<int>(std::count(
                             text.begin(),
                             text.begin() + static_cast<std::ptrdiff_t>(
                                                std::min<std::size_t>(e.byte, text.size())),
                             '\n'));
    throw ParseError("", line, std::string("scenario is not valid JSON: ") + e.what());
  }
  const detail::Reader rd(text, warnings);
  if (!j.is_object()) rd.fail("", "scenario must be a JSON object");
  rd.only(j, "", {"name", "departure", "destination", "eta_h", "ship",
                  "mammal_count", "mammals", "mammal_speed_min_kt",
                  "mammal_speed_max_kt", "paths", "tl", "planner", "speed",
                  "sim", "seeds"});
  ScenarioConfig c;
  c.base_dir = base_dir;
  c.name = rd.string(j, "name", "name", std::string("scenario"));
  c.departure = rd.point(j, "departure", "departure", kShipSourceDepthM);
  c.destination = rd.point(j, "destination", "destination", kShipSourceDepthM);
  if (c.departure.lat == c.destination.lat && c.departure.lon == c.destination.lon)
    rd.fail("destination", "must differ from departure");
  c.eta_h = rd.number(j, "eta_h", "eta_h");
  if (!(c.eta_h > 0.0)) rd.fail("eta_h", "must be > 0 hours");

  {
    const Json& s = rd.object(j, "ship", "ship");
    rd.only(s, "ship", {"name", "ais_type_id", "ship_class", "length_ft",
                        "v_min_kt", "v_max_kt", "service_speed_kt"});
    c.ship.name = rd.string(s, "name", "ship.name", std::string("ship"));
    c.ship.ais_type_id = rd.integer(s, "ais_type_id", "ship.ais_type_id", 0);
    if (c.ship.ais_type_id < 0) rd.fail("ship.ais_type_id", "must be >= 0");
    c.ship.length_ft = rd.number(s, "length_ft", "ship.length_ft");
    if (!(c.ship.length_ft > 0.0)) rd.fail("ship.length_ft", "must be > 0 feet");
    c.ship.v_min_kt = rd.number(s, "v_min_kt", "ship.v_min_kt");
    c.ship.v_max_kt = rd.number(s, "v_max_kt", "ship.v_max_kt");
    if (!(c.ship.v_min_kt > 0.0)) rd.fail("ship.v_min_kt", "must be > 0 knots");
    if (!(c.ship.v_max_kt >= c.ship.v_min_kt))
      rd.fail("ship.v_max_kt", "must be >= ship.v_min_kt");
    if (s.contains("ship_class")) {
      const auto name = rd.string(s, "ship_class", "ship.ship_class");
      const auto cls = ship_class_from_string(name);
      if (!cls) rd.fail("ship.ship_class", "unknown ship class '" + name + "'");
      c.ship.ship_class = *cls;
    } else {
      std::optional<double> service;
      if (s.contains("service_speed_kt"))
        service = rd.number(s, "service_speed_kt", "ship.service_speed_kt");
      c.ship.ship_class = classify_ais(c.ship.ais_type_id, c.ship.length_ft, service);
      rd.warn("ship.ship_class not given; derived '" +
              std::string(to_string(c.ship.ship_class)) + "' from AIS type " +
              std::to_string(c.ship.ais_type_id));
    }
  }

  c.mammal_count = rd.integer(j, "mammal_count", "mammal_count", 0);
  if (c.mammal_count < 0) rd.fail("mammal_count", "must be >= 0");
  c.mammal_speed_min_kt =
      rd.number(j, "mammal_speed_min_kt", "mammal_speed_min_kt", 0.5);
  c.mammal_speed_max_kt =
      rd.number(j, "mammal_speed_max_kt", "mammal_speed_max_kt", 2.5);
  if (c.mammal_speed_min_kt < 0.0)
    rd.fail("mammal_speed_min_kt", "must be >= 0 knots");
  if (c.mammal_speed_max_kt < c.mammal_speed_min_kt)
    rd.fail("mammal_speed_max_kt", "must be >= mammal_speed_min_kt");
  if (j.contains("mammals")) {
    const Json& arr = j.at("mammals");
    if (!arr.is_array()) rd.fail("mammals", "expected an array");
    std::set<int> ids;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = "mammals[" + std::to_string(i) + "]";
      const Json& m = arr[i];
      if (!m.is_object()) rd.fail(p, "expected an object");
      rd.only(m, p, {"id", "lat_deg", "lon_deg", "depth_m", "speed_kt", "heading_deg"});
      MammalState s;
      s.id = rd.integer(m, "id", p + ".id", static_cast<int>(i + 1));
      if (!ids.insert(s.id).second) rd.fail(p + ".id", "duplicate mammal id");
      s.position = {rd.number(m, "lat_deg", p + ".lat_deg"),
                    rd.number(m, "lon_deg", p + ".lon_deg"),
                    rd.number(m, "depth_m", p + ".depth_m", 0.0)};
      if (s.position.depth < 0.0 || s.position.depth > kMaxReceiverDepthM)
        rd.fail(p + ".depth_m", "must lie in [0, 100] m");
      s.speed_kt = rd.number(m, "speed_kt", p + ".speed_kt", 0.0);
      if (s.speed_kt < 0.0) rd.fail(p + ".speed_kt", "must be >= 0 knots");
      s.heading_deg = rd.number(m, "heading_deg", p + ".heading_deg", 0.0);
      c.mammals.push_back(s);
    }
    if (!c.mammals.empty() && c.mammal_count > 0)
      rd.warn("both mammal_count and explicit mammals given; using the " +
              std::to_string(c.mammals.size()) + " explicit mammals");
  }

  {
    const Json& p = rd.object(j, "paths", "paths");
    rd.only(p, "paths", {"bathymetry", "lane_mask", "sightings", "depths",
                         "tl_cache", "ais_track"});
    c.paths.bathymetry = rd.string(p, "bathymetry", "paths.bathymetry");
    c.paths.lane_mask = rd.string(p, "lane_mask", "paths.lane_mask", std::string());
    c.paths.sightings = rd.string(p, "sightings", "paths.sightings", std::string());
    c.paths.depths = rd.string(p, "depths", "paths.depths", std::string());
    c.paths.tl_cache = rd.string(p, "tl_cache", "paths.tl_cache", std::string("tl_cache"));
    c.paths.ais_track = rd.string(p, "ais_track", "paths.ais_track", std::string());
    if (c.mammals.empty() && c.mammal_count > 0) {
      if (c.paths.sightings.empty())
        rd.fail("paths.sightings", "required when mammal_count > 0");
      if (c.paths.depths.empty())
        rd.fail("paths.depths", "required when mammal_count > 0");
    }
    if (check_files) {
      auto need = [&](const std::string& key, const std::string& v) {
        if (!v.empty() && !std::filesystem::exists(c.resolve(v)))
          rd.fail(key, "file not found: " + c.resolve(v));
      };
      need("paths.bathymetry", c.paths.bathymetry);
      need("paths.lane_mask", c.paths.lane_mask);
      need("paths.sightings", c.paths.sightings);
      need("paths.depths", c.paths.depths);
      need("paths.ais_track", c.paths.ais_track);
    }
  }

  if (j.contains("tl")) {
    const Json& t = rd.object(j, "tl", "tl");
    rd.only(t, "tl", {"sources", "source_count", "radius_m", "ranges",
                      "bearings", "depths", "clusters", "per_cluster",
                      "depth_weight"});
    auto& s = c.tl;
    if (t.contains("sources")) {
      const Json& arr = t.at("sources");
      if (!arr.is_array()) rd.fail("tl.sources", "expected an array");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string p = "tl.sources[" + std::to_string(i) + "]";
        if (!arr[i].is_object()) rd.fail(p, "expected an object");
        rd.only(arr[i], p, {"lat_deg", "lon_deg"});
        s.sources.push_back({rd.number(arr[i], "lat_deg", p + ".lat_deg"),
                             rd.number(arr[i], "lon_deg", p + ".lon_deg"),
                             kShipSourceDepthM});
      }
    }
    s.source_count = rd.integer(t, "source_count", "tl.source_count", s.source_count);
    s.radius_m = rd.number(t, "radius_m", "tl.radius_m", s.radius_m);
    s.ranges = rd.integer(t, "ranges", "tl.ranges", s.ranges);
    s.bearings = rd.integer(t, "bearings", "tl.bearings", s.bearings);
    s.depths = rd.integer(t, "depths", "tl.depths", s.depths);
    s.clusters = rd.integer(t, "clusters", "tl.clusters", s.clusters);
    s.per_cluster = rd.integer(t, "per_cluster", "tl.per_cluster", s.per_cluster);
    s.depth_weight = rd.number(t, "depth_weight", "tl.depth_weight", s.depth_weight);
    if (s.source_count < 1) rd.fail("tl.source_count", "must be >= 1");
    if (!(s.radius_m > 0.0)) rd.fail("tl.radius_m", "must be > 0 m");
    if (s.ranges < 1) rd.fail("tl.ranges", "must be >= 1");
    if (s.bearings < 1) rd.fail("tl.bearings", "must be >= 1");
    if (s.depths < 1) rd.fail("tl.depths", "must be >= 1");
    if (s.clusters < 1) rd.fail("tl.clusters", "must be >= 1");
    if (s.per_cluster < 1) rd.fail("tl.per_cluster", "must be >= 1");
    if (!(s.depth_weight > 0.0)) rd.fail("tl.depth_weight", "must be > 0");
  }
  if (j.contains("planner")) {
    const Json& p = rd.object(j, "planner", "planner");
    rd.only(p, "planner", {"batch_size", "max_batches", "goal_radius_m",
                           "min_depth_m", "time_budget_s"});
    auto& s = c.planner;
    s.batch_size = rd.integer(p, "batch_size", "planner.batch_size", s.batch_size);
    s.max_batches = rd.integer(p, "max_batches", "planner.max_batches", s.max_batches);
    s.goal_radius_m = rd.number(p, "goal_radius_m", "planner.goal_radius_m", s.goal_radius_m);
    s.min_depth_m = rd.number(p, "min_depth_m", "planner.min_depth_m", s.min_depth_m);
    s.time_budget_s = rd.number(p, "time_budget_s", "planner.time_budget_s", s.time_budget_s);
    if (s.batch_size < 1) rd.fail("planner.batch_size", "must be >= 1");
    if (s.max_batches < 1) rd.fail("planner.max_batches", "must be >= 1");
    if (!(s.goal_radius_m > 0.0)) rd.fail("planner.goal_radius_m", "must be > 0 m");
    if (s.min_depth_m < 0.0) rd.fail("planner.min_depth_m", "must be >= 0 m");
    if (!(s.time_budget_s > 0.0)) rd.fail("planner.time_budget_s", "must be > 0 s");
  }
  if (j.contains("speed")) {
    const Json& p = rd.object(j, "speed", "speed");
    rd.only(p, "speed", {"legs", "population", "max_generations", "time_budget_s"});
    auto& s = c.speed;
    s.legs = rd.integer(p, "legs", "speed.legs", s.legs);
    s.population = rd.integer(p, "population", "speed.population", s.population);
    s.max_generations = rd.integer(p, "max_generations", "speed.max_generations", s.max_generations);
    s.time_budget_s = rd.number(p, "time_budget_s", "speed.time_budget_s", s.time_budget_s);
    if (s.legs < 2) rd.fail("speed.legs", "must be >= 2");
    if (s.population < 2) rd.fail("speed.population", "must be >= 2");
    if (s.max_generations < 1) rd.fail("speed.max_generations", "must be >= 1");
    if (!(s.time_budget_s > 0.0)) rd.fail("speed.time_budget_s", "must be > 0 s");
  }
  if (j.contains("sim")) {
    const Json& p = rd.object(j, "sim", "sim");
    rd.only(p, "sim", {"tick_min", "replan_cadence_h"});
    c.sim.tick_min = rd.number(p, "tick_min", "sim.tick_min", c.sim.tick_min);
    c.sim.replan_cadence_h =
        rd.number(p, "replan_cadence_h", "sim.replan_cadence_h", c.sim.replan_cadence_h);
    if (!(c.sim.tick_min > 0.0)) rd.fail("sim.tick_min", "must be > 0 minutes");
    if (c.sim.replan_cadence_h < 0.0)
      rd.fail("sim.replan_cadence_h", "must be >= 0 hours");
  }
  if (j.contains("seeds")) {
    const Json& p = rd.object(j, "seeds", "seeds");
    rd.only(p, "seeds", {"planner", "ga", "wildlife", "rbf"});
    c.seeds.planner = rd.seed(p, "planner", "seeds.planner", c.seeds.planner);
    c.seeds.ga = rd.seed(p, "ga", "seeds.ga", c.seeds.ga);
    c.seeds.wildlife = rd.seed(p, "wildlife", "seeds.wildlife", c.seeds.wildlife);
    c.seeds.rbf = rd.seed(p, "rbf", "seeds.rbf", c.seeds.rbf);
  }
  return c;
}

inline ScenarioConfig parse_scenario(const std::string& path,
                                     std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path);
  if (!in) throw ParseError("", 0, "cannot read scenario file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const auto dir = std::filesystem::absolute(path).parent_path().string();
  return parse_scenario_text(ss.str(), dir, warnings);
}

/// Every field with its effective value (defaults included).
inline Json scenario_to_json(const ScenarioConfig& c) {
  Json j;
  j["name"] = c.name;
  j["departure"] = {{"lat_deg", c.departure.lat}, {"lon_deg", c.departure.lon}};
  j["destination"] = {{"lat_deg", c.destination.lat}, {"lon_deg", c.destination.lon}};
  j["eta_h"] = c.eta_h;
  j["ship"] = {{"name", c.ship.name},
               {"ais_type_id", c.ship.ais_type_id},
               {"ship_class", std::string(to_string(c.ship.ship_class))},
               {"length_ft", c.ship.length_ft},
               {"v_min_kt", c.ship.v_min_kt},
               {"v_max_kt", c.ship.v_max_kt}};
  j["mammal_count"] = c.mammal_count;
  Json ms = Json::array();
  for (const auto& m : c.mammals)
    ms.push_back({{"id", m.id},
                  {"lat_deg", m.position.lat},
                  {"lon_deg", m.position.lon},
                  {"depth_m", m.position.depth},
                  {"speed_kt", m.speed_kt},
                  {"heading_deg", m.heading_deg}});
  j["mammals"] = ms;
  j["mammal_speed_min_kt"] = c.mammal_speed_min_kt;
  j["mammal_speed_max_kt"] = c.mammal_speed_max_kt;
  j["paths"] = {{"bathymetry", c.paths.bathymetry},
                {"lane_mask", c.paths.lane_mask},
                {"sightings", c.paths.sightings},
                {"depths", c.paths.depths},
                {"tl_cache", c.paths.tl_cache},
                {"ais_track", c.paths.ais_track}};
  Json src = Json::array();
  for (const auto& s : c.tl.sources)
    src.push_back({{"lat_deg", s.lat}, {"lon_deg", s.lon}});
  j["tl"] = {{"sources", src},
             {"source_count", c.tl.source_count},
             {"radius_m", c.tl.radius_m},
             {"ranges", c.tl.ranges},
             {"bearings", c.tl.bearings},
             {"depths", c.tl.depths},
             {"clusters", c.tl.clusters},
             {"per_cluster", c.tl.per_cluster},
             {"depth_weight", c.tl.depth_weight}};
  j["planner"] = {{"batch_size", c.planner.batch_size},
                  {"max_batches", c.planner.max_batches},
                  {"goal_radius_m", c.planner.goal_radius_m},
                  {"min_depth_m", c.planner.min_depth_m},
                  {"time_budget_s", c.planner.time_budget_s}};
  j["speed"] = {{"legs", c.speed.legs},
                {"population", c.speed.population},
                {"max_generations", c.speed.max_generations},
                {"time_budget_s", c.speed.time_budget_s}};
  j["sim"] = {{"tick_min", c.sim.tick_min},
              {"replan_cadence_h", c.sim.replan_cadence_h}};
  j["seeds"] = {{"planner", c.seeds.planner},
                {"ga", c.seeds.ga},
                {"wildlife", c.seeds.wildlife},
                {"rbf", c.seeds.rbf}};
  return j;
}

inline std::string serialize(const ScenarioConfig& c) {
  return scenario_to_json(c).dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// AIS baseline

struct AisRecord {
  double t_s = 0.0;
  double lat = 0.0;
  double lon = 0.0;
  double sog_kt = 0.0;
};

struct AisBaseline {
  std::vector<AisRecord> track; // after gap filling
  Route route;
  SpeedProfile profile;
  double eta_h = 0.0;
  double tdt_nm = 0.0;
};

inline constexpr double kMaxAisGapS = 30.0 * 60.0;

/// Reads an AIS CSV (timestamp_s, lat, lon, sog_kt; empty cells allowed in
/// lat/lon/sog and filled by linear interpolation in time), then resamples it
/// onto `legs` equal-time legs. Leg speeds come from the distance covered
/// along the track during each leg, so the profile's TDT equals the track
/// length. `legs` = 0 picks min(record intervals, default leg count).
inline AisBaseline ingest_ais(const std::string& path, int legs = 0) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open AIS file " + path);
  struct Raw {
    double t;
    std::optional<double> lat, lon, sog;
  };
  std::vector<Raw> raw;
  std::string line;
  int lineno = 0;
  auto opt_num = [&](const std::vector<std::string>& cells, std::size_t i)
      -> std::optional<double> {
    if (i >= cells.size() || cells[i].empty()) return std::nullopt;
    try {
      return std::stod(cells[i]);
    } catch (const std::exception&) {
      throw IngestError(path + ":" + std::to_string(lineno) + ": bad number '" +
                        cells[i] + "'");
    }
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = detail::split_csv(line);
    if (lineno == 1 && !detail::looks_numeric(cells[0])) continue;
    const auto t = opt_num(cells, 0);
    if (!t) throw IngestError(path + ":" + std::to_string(lineno) + ": missing timestamp");
    raw.push_back({*t, opt_num(cells, 1), opt_num(cells, 2), opt_num(cells, 3)});
  }
  if (raw.size() < 2) throw IngestError("AIS track needs at least 2 records");
  for (std::size_t i = 1; i < raw.size(); ++i)
    if (!(raw[i].t > raw[i - 1].t)) {
      std::ostringstream os;
      os << "AIS timestamps not strictly increasing at record " << i + 1 << " ("
         << raw[i - 1].t << " then " << raw[i].t << ")";
      throw IngestError(os.str());
    }
  std::vector<std::string> gaps;
  for (std::size_t i = 1; i < raw.size(); ++i)
    if (raw[i].t - raw[i - 1].t > kMaxAisGapS) {
      std::ostringstream os;
      os << "[" << raw[i - 1].t << ", " << raw[i].t << "]";
      gaps.push_back(os.str());
    }
  if (!gaps.empty()) {
    std::string msg = "AIS gaps longer than 30 min:";
    for (const auto& g : gaps) msg += " " + g;
    throw IngestError(msg);
  }
  // Fill each missing field by interpolating between neighbours that have it.
  auto fill = [&](std::optional<double> Raw::*field, const char* name) {
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i].*field) continue;
      std::size_t a = i, b = i;
      while (a > 0 && !(raw[a].*field)) --a;
      while (b + 1 < raw.size() && !(raw[b].*field)) ++b;
      if (!(raw[a].*field) || !(raw[b].*field))
        throw IngestError(std::string("AIS ") + name +
                          " missing at the start or end of the track");
      const double u = (raw[i].t - raw[a].t) / (raw[b].t - raw[a].t);
      raw[i].*field = *(raw[a].*field) + u * (*(raw[b].*field) - *(raw[a].*field));
    }
  };
  fill(&Raw::lat, "latitude");
  fill(&Raw::lon, "longitude");
  fill(&Raw::sog, "speed");

  AisBaseline out;
  for (const auto& r : raw) {
    if (*r.sog < 0.0) throw IngestError("AIS speed over ground must be >= 0");
    out.track.push_back({r.t, *r.lat, *r.lon, *r.sog});
  }
  // Route through the distinct positions; cumulative planar distance per record.
  std::vector<GeoPoint> pts;
  for (const auto& r : out.track) {
    const GeoPoint g{r.lat, r.lon, kShipSourceDepthM};
    if (pts.empty() || pts.back().lat != g.lat || pts.back().lon != g.lon)
      pts.push_back(g);
  }
  if (pts.size() < 2) throw IngestError("AIS track never moves");
  out.route = route_from_geo(pts);
  std::vector<double> cum(out.track.size(), 0.0);
  for (std::size_t i = 1; i < out.track.size(); ++i) {
    const auto a = to_planar({out.track[i - 1].lat, out.track[i - 1].lon, 0}, out.route.reference);
    const auto b = to_planar({out.track[i].lat, out.track[i].lon, 0}, out.route.reference);
    cum[i] = cum[i - 1] + distance(a, b);
  }
  const double t0 = out.track.front().t_s;
  out.eta_h = (out.track.back().t_s - t0) / 3600.0;
  if (legs <= 0)
    legs = static_cast<int>(std::min<std::size_t>(out.track.size() - 1,
                                                  static_cast<std::size_t>(kDefaultLegs)));
  auto dist_at = [&](double t_h) {
    const double t = t0 + t_h * 3600.0;
    if (t <= t0) return 0.0;
    if (t >= out.track.back().t_s) return cum.back();
    auto it = std::upper_bound(out.track.begin(), out.track.end(), t,
                               [](double v, const AisRecord& r) { return v < r.t_s; });
    const std::size_t i = static_cast<std::size_t>(it - out.track.begin());
    const double u = (t - out.track[i - 1].t_s) / (out.track[i].t_s - out.track[i - 1].t_s);
    return cum[i - 1] + u * (cum[i] - cum[i - 1]);
  };
  out.profile.leg_h = out.eta_h / legs;
  for (int k = 0; k < legs; ++k) {
    const double d = dist_at((k + 1) * out.profile.leg_h) - dist_at(k * out.profile.leg_h);
    out.profile.speeds_kt.push_back(units::m_to_nm(d) / out.profile.leg_h);
  }
  out.tdt_nm = tdt(out.profile);
  return out;
}

} // namespace qv
