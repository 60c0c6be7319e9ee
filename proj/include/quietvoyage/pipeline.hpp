#pragma once

// End-to-end voyage study driven by a ScenarioConfig: environment loading,
// TL cache and surrogate lifecycle, mammal initialisation, route planning,
// speed optimisation, replay, and the CSV / JSON result writers shared by
// the CLI and the HTTP service.

#include "quietvoyage/errors.hpp"
#include "quietvoyage/geo_env.hpp"
#include "quietvoyage/noise_source.hpp"
#include "quietvoyage/propagation.hpp"
#include "quietvoyage/propagation_io.hpp"
#include "quietvoyage/route.hpp"
#include "quietvoyage/route_planner.hpp"
#include "quietvoyage/scenario.hpp"
#include "quietvoyage/sim_engine.hpp"
#include "quietvoyage/speed_optimizer.hpp"
#include "quietvoyage/wildlife.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace qv {

inline constexpr std::string_view kVersion = "1.0.0";

/// Stage name and overall completion in [0, 1].
using ProgressFn = std::function<void(std::string_view stage, double fraction)>;

struct Environment {
  BathymetryGrid grid;
  RegionMask lanes; // ship workspace
  RegionMask water; // mammal workspace
};

inline Environment load_environment(const ScenarioConfig& c) {
  Environment env;
  env.grid = load_bathymetry(c.resolve(c.paths.bathymetry));
  std::vector<std::uint8_t> lane;
  if (!c.paths.lane_mask.empty())
    lane = load_mask_layer(c.resolve(c.paths.lane_mask), env.grid);
  env.lanes = RegionMask::from_grid(env.grid, lane);
  env.water = water_mask(env.grid);
  return env;
}

// ---------------------------------------------------------------------------
// TL cache and surrogate

/// Explicit sources, else `source_count` points evenly spaced on the straight
/// line from departure to destination.
inline std::vector<GeoPoint> tl_sources(const ScenarioConfig& c) {
  if (!c.tl.sources.empty()) return c.tl.sources;
  std::vector<GeoPoint> out;
  const int n = c.tl.source_count;
  for (int i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.5 : static_cast<double>(i) / (n - 1);
    out.push_back({c.departure.lat + t * (c.destination.lat - c.departure.lat),
                   c.departure.lon + t * (c.destination.lon - c.departure.lon),
                   kShipSourceDepthM});
  }
  return out;
}

inline LatticeSpec tl_lattice(const ScenarioConfig& c) {
  return LatticeSpec::uniform(c.tl.radius_m, c.tl.ranges, c.tl.bearings, c.tl.depths);
}

inline RbfOptions rbf_options(const ScenarioConfig& c) {
  RbfOptions o;
  o.clusters = c.tl.clusters;
  o.per_cluster = c.tl.per_cluster;
  o.dim_weight[4] = c.tl.depth_weight;
  o.seed = c.seeds.rbf;
  return o;
}

inline std::string tl_cache_dir(const ScenarioConfig& c) {
  return c.resolve(c.paths.tl_cache);
}
inline std::string rbf_dir(const ScenarioConfig& c) {
  return (std::filesystem::path(tl_cache_dir(c)) / "rbf").string();
}

inline TlFieldCache precompute_tl(const ScenarioConfig& c, const Environment& env) {
  auto cache = precompute_field(tl_sources(c), c.tl.radius_m, tl_lattice(c), env.grid);
  save_tl_cache(cache, tl_cache_dir(c));
  return cache;
}

inline RbfInterpolant fit_surrogate(const ScenarioConfig& c, const TlFieldCache& cache) {
  auto m = rbf_fit(cache.samples, rbf_options(c));
  save_rbf(m, rbf_dir(c));
  return m;
}

struct Surrogate {
  RbfInterpolant rbf;
  double tl_cap_db = 0.0; // largest band-mean TL in the cache
};

/// Loads the cache (required) and the fitted surrogate, fitting in memory
/// when no saved model exists.
inline Surrogate load_surrogate(const ScenarioConfig& c) {
  const auto dir = tl_cache_dir(c);
  if (!tl_cache_exists(dir))
    throw IoError("no TL cache at " + dir + "; run precompute-tl first");
  const auto cache = load_tl_cache(dir);
  Surrogate s;
  for (const auto& x : cache.samples) s.tl_cap_db = std::max(s.tl_cap_db, mean_band(x.tl));
  s.rbf = rbf_exists(rbf_dir(c)) ? load_rbf(rbf_dir(c)) : rbf_fit(cache.samples, rbf_options(c));
  return s;
}

// ---------------------------------------------------------------------------
// Mammals

inline std::vector<MammalState> initial_mammals(const ScenarioConfig& c,
                                                const Environment& env) {
  if (!c.mammals.empty()) return c.mammals;
  if (c.mammal_count == 0) return {};
  const auto sight = load_sightings(c.resolve(c.paths.sightings));
  const auto depths = load_depths(c.resolve(c.paths.depths));
  const auto pos = kde_fit(sight.latlon, {}, sight.weight);
  const auto dep = kde_fit(depths);
  std::mt19937_64 rng(c.seeds.wildlife);
  return init_population(static_cast<std::size_t>(c.mammal_count), pos, dep, rng,
                         env.grid, env.water,
                         {c.mammal_speed_min_kt, c.mammal_speed_max_kt});
}

// ---------------------------------------------------------------------------
// Runs

enum class RunMode { Plan, Simulate, SimulateBaseline, Compare };
enum class BaselineKind { Auto, Ais, ConstantSpeed };

struct VoyageResult {
  std::string label;
  Route route;
  SpeedProfile planned;  // before re-planning
  SpeedProfile executed; // after re-planning
  EventLog log;
  FootprintReport footprint;
  double eta_h = 0.0;
  double tdt_nm = 0.0;
  int replans = 0;
};

struct ResultBundle {
  ScenarioConfig config;
  std::vector<MammalState> mammals;
  double tl_cap_db = 0.0;
  std::optional<PlanResult> plan;
  std::optional<OptimizeResult> search;
  std::optional<VoyageResult> optimized;
  std::optional<VoyageResult> baseline;
  std::string baseline_source; // "ais" or "constant-speed"
  std::optional<ComparisonTable> comparison;
  std::vector<std::string> warnings;
};

inline PlannerConfig planner_config(const ScenarioConfig& c, double tl_cap_db) {
  PlannerConfig p;
  p.batch_size = c.planner.batch_size;
  p.max_batches = c.planner.max_batches;
  p.goal_radius_m = c.planner.goal_radius_m;
  p.min_depth_m = c.planner.min_depth_m;
  p.time_budget_s = c.planner.time_budget_s;
  p.seed = c.seeds.planner;
  p.cost.tl_cap_db = tl_cap_db;
  return p;
}

inline GaConfig ga_config(const ScenarioConfig& c) {
  GaConfig g;
  g.population = c.speed.population;
  g.max_generations = c.speed.max_generations;
  g.time_budget_s = c.speed.time_budget_s;
  g.seed = c.seeds.ga;
  return g;
}

inline SimOptions sim_options(const ScenarioConfig& c, bool replan) {
  SimOptions o;
  o.dt_h = c.sim.tick_min / 60.0;
  o.replan_cadence_h = replan ? c.sim.replan_cadence_h : 0.0;
  o.ga = ga_config(c);
  o.v_min_kt = c.ship.v_min_kt;
  o.v_max_kt = c.ship.v_max_kt;
  return o;
}

namespace detail {
struct Stages {
  const ProgressFn& fn;
  void operator()(std::string_view stage, double f) const {
    if (fn) fn(stage, std::clamp(f, 0.0, 1.0));
  }
};

template <typename Tl>
VoyageResult replay(std::string label, const Route& route, const SpeedProfile& p,
                    const std::vector<MammalState>& mammals, const ScenarioConfig& c,
                    const Tl& tl, const Environment& env, bool replan) {
  VoyageResult v;
  v.label = std::move(label);
  v.route = route;
  v.planned = p;
  auto run = run_voyage(route, p, mammals, c.ship, tl, env.grid, env.water,
                        sim_options(c, replan));
  v.executed = run.executed;
  v.replans = run.replans;
  v.log = std::move(run.log);
  v.eta_h = p.duration_h();
  v.tdt_nm = tdt(v.executed);
  if (!mammals.empty()) v.footprint = footprint(v.log);
  return v;
}
} // namespace detail

/// Runs the stages `mode` needs. Simulate replays the optimised voyage with
/// re-planning; SimulateBaseline replays the AIS track; Compare does both
/// (the baseline falls back to constant speed on the planned route when the
/// scenario has no AIS track, or when `baseline` asks for it).
inline ResultBundle run_scenario(const ScenarioConfig& c, RunMode mode,
                                 const ProgressFn& progress = {},
                                 BaselineKind baseline = BaselineKind::Auto) {
  const detail::Stages stage{progress};
  ResultBundle out;
  out.config = c;
  const bool want_ais =
      baseline == BaselineKind::Ais ||
      (baseline == BaselineKind::Auto && !c.paths.ais_track.empty());
  if (mode == RunMode::SimulateBaseline && c.paths.ais_track.empty())
    throw ValidationError("simulate --baseline needs paths.ais_track in the scenario");
  if (baseline == BaselineKind::Ais && c.paths.ais_track.empty())
    throw ValidationError("AIS baseline requested but paths.ais_track is empty");

  stage("load", 0.0);
  const Environment env = load_environment(c);
  const Surrogate sur = load_surrogate(c);
  out.tl_cap_db = sur.tl_cap_db;
  out.mammals = initial_mammals(c, env);
  if (out.mammals.empty())
    out.warnings.push_back("no mammals: exposure metrics are undefined");
  stage("load", 0.05);

  const bool need_plan = mode != RunMode::SimulateBaseline;
  if (need_plan) {
    stage("plan", 0.05);
    out.plan = plan_route(c.departure, c.destination, out.mammals, sur.rbf, env.grid,
                          env.lanes, planner_config(c, sur.tl_cap_db));
    stage("plan", 0.3);
  }
  if (mode == RunMode::Plan) {
    stage("done", 1.0);
    return out;
  }

  if (mode == RunMode::Simulate || mode == RunMode::Compare) {
    const Route& route = out.plan->route;
    VoyageConstraints vc{c.eta_h, route.length_nm, c.ship.v_min_kt, c.ship.v_max_kt};
    stage("optimize", 0.3);
    const auto speed = optimize_speeds(
        route, vc, out.mammals, c.ship, sur.rbf, env.grid, env.water, c.speed.legs,
        ga_config(c), c.sim.tick_min / 60.0,
        [&](double f) { stage("optimize", 0.3 + 0.3 * f); });
    out.search = speed.search;
    stage("simulate", 0.6);
    out.optimized = detail::replay("optimized", route, speed.profile, out.mammals, c,
                                   sur.rbf, env, true);
    stage("simulate", 0.9);
  }

  if (mode == RunMode::SimulateBaseline || mode == RunMode::Compare) {
    stage("baseline", 0.9);
    if (want_ais || mode == RunMode::SimulateBaseline) {
      const auto ais = ingest_ais(c.resolve(c.paths.ais_track));
      out.baseline_source = "ais";
      out.baseline = detail::replay("baseline", ais.route, ais.profile, out.mammals,
                                    c, sur.rbf, env, false);
    } else {
      const Route& route = out.plan->route;
      out.baseline_source = "constant-speed";
      out.baseline = detail::replay(
          "baseline", route,
          constant_profile(route.length_nm / c.eta_h, c.eta_h, c.speed.legs),
          out.mammals, c, sur.rbf, env, false);
    }
  }
  if (mode == RunMode::Compare && !out.mammals.empty())
    out.comparison = compare(out.baseline->footprint, out.optimized->footprint);
  stage("done", 1.0);
  return out;
}

// ---------------------------------------------------------------------------
// Writers. Numbers use the shortest round-trip form so that files are
// byte-stable and the JSON payload carries the same values.

namespace detail {
inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  return format_number(v);
}
inline nlohmann::ordered_json jnum(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}
} // namespace detail

inline void write_route_csv(std::ostream& os, const Route& r) {
  os << "index,lat,lon,cumulative_nm\n";
  const auto geo = r.geo_waypoints();
  double cum = 0.0;
  for (std::size_t i = 0; i < geo.size(); ++i) {
    if (i) cum += units::m_to_nm(distance(r.waypoints[i - 1].point(), r.waypoints[i].point()));
    os << i << ',' << detail::num(geo[i].lat) << ',' << detail::num(geo[i].lon) << ','
       << detail::num(cum) << '\n';
  }
}

inline void write_profile_csv(std::ostream& os, const SpeedProfile& p) {
  os << "leg_index,t_start_h,v_knots,cumulative_nm\n";
  double cum = 0.0;
  for (std::size_t i = 0; i < p.legs(); ++i) {
    cum += p.speeds_kt[i] * p.leg_h;
    os << i << ',' << detail::num(static_cast<double>(i) * p.leg_h) << ','
       << detail::num(p.speeds_kt[i]) << ',' << detail::num(cum) << '\n';
  }
}

inline void write_event_log_csv(std::ostream& os, const EventLog& log) {
  os << "t_h,ship_lat,ship_lon,v_kt";
  for (int id : log.mammal_ids())
    os << ",m" << id << "_lat,m" << id << "_lon,m" << id << "_depth,m" << id << "_nl_db";
  os << '\n';
  for (const auto& r : log.records) {
    os << detail::num(r.t_h) << ',' << detail::num(r.ship.position.lat) << ','
       << detail::num(r.ship.position.lon) << ',' << detail::num(r.ship.speed_kt);
    for (std::size_t j = 0; j < r.mammals.size(); ++j)
      os << ',' << detail::num(r.mammals[j].position.lat) << ','
         << detail::num(r.mammals[j].position.lon) << ','
         << detail::num(r.mammals[j].position.depth) << ',' << detail::num(r.nl_db[j]);
    os << '\n';
  }
}

inline void write_footprint_csv(std::ostream& os, const FootprintReport& f) {
  os << "mammal_id,sel_db,peak_spl_db\n";
  for (const auto& m : f.mammals) {
    double peak = -std::numeric_limits<double>::infinity();
    for (double v : m.spl_db) peak = std::max(peak, v);
    os << m.id << ',' << detail::num(m.sel_db) << ',' << detail::num(peak) << '\n';
  }
  os << "mean," << detail::num(f.mean_sel_db) << ",\n";
}

/// Per-mammal rows then a `mean` row whose delta is delta J_s.
inline void write_comparison_csv(std::ostream& os, const ComparisonTable& t) {
  os << "mammal_id,baseline_sel_db,optimized_sel_db,delta_j_s_db,reduction_pct\n";
  for (const auto& r : t.rows)
    os << r.id << ',' << detail::num(r.baseline_sel_db) << ','
       << detail::num(r.optimized_sel_db) << ',' << detail::num(r.delta_sel_db) << ','
       << detail::num(r.reduction_pct) << '\n';
  os << "mean," << detail::num(t.baseline_mean_db) << ','
     << detail::num(t.optimized_mean_db) << ',' << detail::num(t.delta_mean_db) << ','
     << detail::num(t.reduction_pct) << '\n';
}

inline void write_spectrum_csv(std::ostream& os, const SourceSpectrum& s) {
  os << "frequency_hz,level_db\n";
  for (std::size_t b = 0; b < kBandCount; ++b)
    os << detail::num(kBandCentersHz[b]) << ',' << detail::num(s.level_db[b]) << '\n';
}

/// One row per voyage: ETA, TDT, J_s, and delta J_s against the baseline.
inline void write_summary_csv(std::ostream& os, const ResultBundle& b) {
  os << "voyage,eta_h,tdt_nm,j_s_db,delta_j_s_db,reduction_pct\n";
  auto row = [&](const VoyageResult& v, double delta) {
    os << v.label << ',' << detail::num(v.eta_h) << ',' << detail::num(v.tdt_nm) << ','
       << detail::num(v.footprint.mean_sel_db) << ',' << detail::num(delta) << ','
       << detail::num(std::isfinite(delta) ? reduction_percent(-delta) : delta) << '\n';
  };
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (b.baseline) row(*b.baseline, 0.0);
  if (b.optimized) row(*b.optimized, b.comparison ? b.comparison->delta_mean_db : nan);
}

inline std::string summary_text(const ResultBundle& b) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "Scenario " << b.config.name << " (ship " << b.config.ship.name << ", "
     << to_string(b.config.ship.ship_class) << ", " << b.config.ship.length_ft
     << " ft, " << b.config.ship.v_min_kt << "-" << b.config.ship.v_max_kt
     << " kt, " << b.mammals.size() << " mammals)\n";
  os << "voyage      ETA (h)  TDT (NM)  J_s (dB)\n";
  auto line = [&](const VoyageResult& v) {
    os << std::left << std::setw(10) << v.label << std::right << std::setw(9)
       << v.eta_h << std::setw(10) << v.tdt_nm << std::setw(10)
       << v.footprint.mean_sel_db << '\n';
  };
  if (b.baseline) line(*b.baseline);
  if (b.optimized) line(*b.optimized);
  if (b.comparison)
    os << "delta J_s " << b.comparison->delta_mean_db << " dB ("
       << b.comparison->reduction_pct << " % exposure reduction, baseline "
       << b.baseline_source << ")\n";
  return os.str();
}

// JSON views use the CSV column names as field names.

inline nlohmann::ordered_json route_json(const Route& r) {
  nlohmann::ordered_json a = nlohmann::ordered_json::array();
  const auto geo = r.geo_waypoints();
  double cum = 0.0;
  for (std::size_t i = 0; i < geo.size(); ++i) {
    if (i) cum += units::m_to_nm(distance(r.waypoints[i - 1].point(), r.waypoints[i].point()));
    a.push_back({{"index", i}, {"lat", geo[i].lat}, {"lon", geo[i].lon}, {"cumulative_nm", cum}});
  }
  return a;
}

inline nlohmann::ordered_json profile_json(const SpeedProfile& p) {
  nlohmann::ordered_json a = nlohmann::ordered_json::array();
  double cum = 0.0;
  for (std::size_t i = 0; i < p.legs(); ++i) {
    cum += p.speeds_kt[i] * p.leg_h;
    a.push_back({{"leg_index", i},
                 {"t_start_h", static_cast<double>(i) * p.leg_h},
                 {"v_knots", p.speeds_kt[i]},
                 {"cumulative_nm", cum}});
  }
  return a;
}

inline nlohmann::ordered_json event_log_json(const EventLog& log) {
  nlohmann::ordered_json a = nlohmann::ordered_json::array();
  for (const auto& r : log.records) {
    nlohmann::ordered_json ms = nlohmann::ordered_json::array();
    for (std::size_t j = 0; j < r.mammals.size(); ++j)
      ms.push_back({{"mammal_id", r.mammals[j].id},
                    {"lat", r.mammals[j].position.lat},
                    {"lon", r.mammals[j].position.lon},
                    {"depth", r.mammals[j].position.depth},
                    {"nl_db", detail::jnum(r.nl_db[j])}});
    a.push_back({{"t_h", r.t_h},
                 {"ship_lat", r.ship.position.lat},
                 {"ship_lon", r.ship.position.lon},
                 {"v_kt", r.ship.speed_kt},
                 {"mammals", ms}});
  }
  return a;
}

inline nlohmann::ordered_json footprint_json(const FootprintReport& f) {
  nlohmann::ordered_json ms = nlohmann::ordered_json::array();
  for (const auto& m : f.mammals) {
    double peak = -std::numeric_limits<double>::infinity();
    for (double v : m.spl_db) peak = std::max(peak, v);
    ms.push_back({{"mammal_id", m.id},
                  {"sel_db", detail::jnum(m.sel_db)},
                  {"peak_spl_db", detail::jnum(peak)}});
  }
  return {{"mammals", ms}, {"j_s_db", detail::jnum(f.mean_sel_db)}};
}

inline nlohmann::ordered_json voyage_json(const VoyageResult& v) {
  return {{"label", v.label},
          {"eta_h", v.eta_h},
          {"tdt_nm", v.tdt_nm},
          {"replans", v.replans},
          {"route", route_json(v.route)},
          {"planned_profile", profile_json(v.planned)},
          {"profile", profile_json(v.executed)},
          {"footprint", footprint_json(v.footprint)},
          {"events", event_log_json(v.log)}};
}

inline nlohmann::ordered_json comparison_json(const ComparisonTable& t) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : t.rows)
    rows.push_back({{"mammal_id", r.id},
                    {"baseline_sel_db", detail::jnum(r.baseline_sel_db)},
                    {"optimized_sel_db", detail::jnum(r.optimized_sel_db)},
                    {"delta_j_s_db", detail::jnum(r.delta_sel_db)},
                    {"reduction_pct", detail::jnum(r.reduction_pct)}});
  return {{"rows", rows},
          {"baseline_j_s_db", detail::jnum(t.baseline_mean_db)},
          {"optimized_j_s_db", detail::jnum(t.optimized_mean_db)},
          {"delta_j_s_db", detail::jnum(t.delta_mean_db)},
          {"reduction_pct", detail::jnum(t.reduction_pct)}};
}

inline nlohmann::ordered_json bundle_json(const ResultBundle& b) {
  nlohmann::ordered_json j;
  j["version"] = std::string(kVersion);
  j["scenario"] = scenario_to_json(b.config);
  j["metadata"] = {{"seeds",
                    {{"planner", b.config.seeds.planner},
                     {"ga", b.config.seeds.ga},
                     {"wildlife", b.config.seeds.wildlife},
                     {"rbf", b.config.seeds.rbf}}},
                   {"cost_offset_db", kCostOffsetDb},
                   {"tl_cap_db", b.tl_cap_db},
                   {"baseline_source", b.baseline_source},
                   {"warnings", b.warnings}};
  nlohmann::ordered_json ms = nlohmann::ordered_json::array();
  for (const auto& m : b.mammals)
    ms.push_back({{"mammal_id", m.id},
                  {"lat", m.position.lat},
                  {"lon", m.position.lon},
                  {"depth", m.position.depth},
                  {"speed_kt", m.speed_kt},
                  {"heading_deg", m.heading_deg}});
  j["mammals"] = ms;
  if (b.plan)
    j["plan"] = {{"route", route_json(b.plan->route)},
                 {"length_nm", b.plan->route.length_nm},
                 {"route_cost", b.plan->route.cost},
                 {"path_cost", b.plan->path_cost},
                 {"batches", b.plan->batches},
                 {"vertices", b.plan->vertices}};
  if (b.search)
    j["search"] = {{"objective_db", b.search->objective_db},
                   {"constant_speed_objective_db", b.search->constant_speed_objective_db},
                   {"generations", b.search->generations}};
  if (b.optimized) j["optimized"] = voyage_json(*b.optimized);
  if (b.baseline) j["baseline"] = voyage_json(*b.baseline);
  if (b.comparison) {
    j["comparison"] = comparison_json(*b.comparison);
    j["delta_j_s_db"] = detail::jnum(b.comparison->delta_mean_db);
  }
  return j;
}

/// Writes every artifact the run produced into `dir`; returns the file names.
inline std::vector<std::string> write_outputs(const ResultBundle& b, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::string> files;
  auto open = [&](const std::string& name) {
    std::ofstream f(fs::path(dir) / name, std::ios::binary);
    if (!f) throw IoError("cannot write " + (fs::path(dir) / name).string());
    files.push_back(name);
    return f;
  };
  auto voyage = [&](const VoyageResult& v) {
    { auto f = open("route_" + v.label + ".csv"); write_route_csv(f, v.route); }
    { auto f = open("profile_" + v.label + ".csv"); write_profile_csv(f, v.executed); }
    { auto f = open("events_" + v.label + ".csv"); write_event_log_csv(f, v.log); }
    if (!v.footprint.mammals.empty()) {
      auto f = open("footprint_" + v.label + ".csv");
      write_footprint_csv(f, v.footprint);
    }
  };
  if (b.plan && !b.optimized) {
    auto f = open("route_planned.csv");
    write_route_csv(f, b.plan->route);
  }
  if (b.optimized) {
    voyage(*b.optimized);
    const auto& p = b.optimized->executed;
    auto f = open("spectrum.csv");
    write_spectrum_csv(f, source_spectrum(tdt(p) / p.duration_h(), b.config.ship.length_ft,
                                          b.config.ship.ship_class));
  }
  if (b.baseline) voyage(*b.baseline);
  if (b.comparison) {
    { auto f = open("comparison.csv"); write_comparison_csv(f, *b.comparison); }
    { auto f = open("summary.csv"); write_summary_csv(f, b); }
    { auto f = open("summary.txt"); f << summary_text(b); }
  }
  {
    auto f = open("result.json");
    f << bundle_json(b).dump(2) << '\n';
  }
  return files;
}

// ---------------------------------------------------------------------------
// TL heat map for display

struct TlTile {
  GeoPoint source{};
  double depth_m = 0.0;
  double lat_min = 0.0;
  double lon_min = 0.0;
  double cell_deg = 0.0;
  int rows = 0;
  int cols = 0;
  std::vector<double> tl_db; // band-mean TL, row-major from the south; NaN on land
};

/// Band-mean surrogate TL from `src` on every `stride`-th grid cell.
inline TlTile tl_tile(const RbfInterpolant& rbf, const Environment& env,
                      const GeoPoint& src, double depth_m = 10.0, int stride = 4) {
  env.grid.require_inside(src);
  if (stride < 1) throw DomainError("tile stride must be >= 1");
  TlTile t;
  t.source = {src.lat, src.lon, kShipSourceDepthM};
  t.depth_m = depth_m;
  t.cell_deg = env.grid.cell_size() * stride;
  t.lat_min = env.grid.lat_min();
  t.lon_min = env.grid.lon_min();
  t.rows = (env.grid.rows() + stride - 1) / stride;
  t.cols = (env.grid.cols() + stride - 1) / stride;
  for (int r = 0; r < t.rows; ++r)
    for (int c = 0; c < t.cols; ++c) {
      const int gr = std::min(r * stride + stride / 2, env.grid.rows() - 1);
      const int gc = std::min(c * stride + stride / 2, env.grid.cols() - 1);
      if (env.grid.at(gr, gc) < 0.0) {
        t.tl_db.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      const GeoPoint rcv{env.grid.node_lat(gr), env.grid.node_lon(gc), depth_m};
      t.tl_db.push_back(mean_band(rbf.bands(t.source, rcv)));
    }
  return t;
}

inline nlohmann::ordered_json tile_json(const TlTile& t) {
  nlohmann::ordered_json v = nlohmann::ordered_json::array();
  for (double x : t.tl_db) v.push_back(detail::jnum(x));
  return {{"src_lat", t.source.lat}, {"src_lon", t.source.lon}, {"r_z", t.depth_m},
          {"lat_min", t.lat_min},    {"lon_min", t.lon_min},    {"cell_deg", t.cell_deg},
          {"rows", t.rows},          {"cols", t.cols},          {"tl_db", v}};
}

} // namespace qv
