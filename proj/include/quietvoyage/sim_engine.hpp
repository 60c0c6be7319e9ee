#pragma once

// Closed-loop voyage replay: a fixed-step clock advances the ship along its
// route and the mammals along their drift lines, logs the received level at
// every mammal, and periodically re-optimises the remaining legs.

#include "quietvoyage/errors.hpp"
#include "quietvoyage/route.hpp"
#include "quietvoyage/speed_optimizer.hpp"
#include "quietvoyage/wildlife.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <sstream>
#include <vector>

namespace qv {

inline constexpr double kDefaultTickH = 1.0 / 60.0;
inline constexpr double kDefaultReplanH = 0.5;

struct SimClock {
  double t_h = 0.0;
  double dt_h = kDefaultTickH;
};

struct ShipNode {
  GeoPoint position{};
  double speed_kt = 0.0;
  double progress_nm = 0.0;
};

struct LogRecord {
  double t_h = 0.0;
  ShipNode ship;
  std::vector<MammalState> mammals;
  std::vector<double> nl_db; // one per mammal, -inf while the ship is stopped
};

struct EventLog {
  double dt_h = kDefaultTickH;
  std::vector<LogRecord> records;

  [[nodiscard]] std::vector<int> mammal_ids() const {
    std::vector<int> ids;
    if (!records.empty())
      for (const auto& m : records.front().mammals) ids.push_back(m.id);
    return ids;
  }
};

struct SimOptions {
  double dt_h = kDefaultTickH;
  double replan_cadence_h = kDefaultReplanH; // 0 disables re-planning
  GaConfig ga{};
  double v_min_kt = 0.0; // bounds for re-planning; taken from the ship when 0
  double v_max_kt = 0.0;
};

struct VoyageRun {
  EventLog log;
  SpeedProfile executed; // profile after every re-plan
  int replans = 0;
};

namespace detail {
/// Distance (m) reached at time `t` under a piecewise-constant profile.
inline double distance_at(const SpeedProfile& p, double t) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.legs(); ++i) {
    const double t0 = static_cast<double>(i) * p.leg_h;
    if (t <= t0) break;
    const double dt = std::min(t - t0, p.leg_h);
    s += units::nm_to_m(p.speeds_kt[i] * dt);
  }
  return s;
}
inline std::size_t leg_at(const SpeedProfile& p, double t) {
  const auto i = static_cast<std::size_t>(std::floor(t / p.leg_h + 1e-9));
  return std::min(i, p.legs() - 1);
}
} // namespace detail

/// Replays the voyage. Mammal ids and order are preserved in every record.
template <TransmissionLossModel Tl>
VoyageRun run_voyage(const Route& route, SpeedProfile profile,
                     const std::vector<MammalState>& mammals,
                     const ShipSpec& ship, const Tl& tl,
                     const BathymetryGrid& grid, const RegionMask& water,
                     const SimOptions& opt = {}) {
  if (!(opt.dt_h > 0.0)) throw ValidationError("tick dt must be positive");
  if (opt.replan_cadence_h < 0.0)
    throw ValidationError("re-plan cadence must be >= 0");
  if (profile.legs() < 1 || !(profile.leg_h > 0.0))
    throw ValidationError("speed profile is empty");
  ship.validate();
  const RoutePath path(route);
  const double len_nm = units::m_to_nm(path.length_m());
  const double miss_m = std::abs(tdt(profile) - len_nm) * units::meters_per_nm;
  if (miss_m > kDistanceToleranceM) {
    std::ostringstream os;
    os << "profile covers " << tdt(profile) << " NM but the route is " << len_nm
       << " NM";
    throw ValidationError(os.str());
  }
  const double eta = profile.duration_h();
  const double v_lo = opt.v_min_kt > 0.0 ? opt.v_min_kt : ship.v_min_kt;
  const double v_hi = opt.v_max_kt > 0.0 ? opt.v_max_kt : ship.v_max_kt;

  VoyageRun run;
  run.log.dt_h = opt.dt_h;
  const auto ticks = static_cast<long>(std::ceil(eta / opt.dt_h - 1e-9));
  std::vector<MammalState> cur = mammals;
  double last_replan = 0.0;
  double prev_t = 0.0;
  for (long k = 0; k <= ticks; ++k) {
    const double t = std::min(static_cast<double>(k) * opt.dt_h, eta);
    if (k > 0)
      for (auto& m : cur) m = step_trajectory(m, t - prev_t, grid, water);
    prev_t = t;

    LogRecord rec;
    rec.t_h = t;
    const double s = detail::distance_at(profile, t);
    rec.ship.position = path.position_at(s);
    rec.ship.progress_nm = units::m_to_nm(s);
    rec.ship.speed_kt = profile.speeds_kt[detail::leg_at(profile, t)];
    rec.mammals = cur;
    for (const auto& m : cur)
      rec.nl_db.push_back(rec.ship.speed_kt > 0.0
                              ? leg_noise(rec.ship.speed_kt, rec.ship.position,
                                          m, ship, tl)
                              : -std::numeric_limits<double>::infinity());
    run.log.records.push_back(std::move(rec));

    // Re-optimise the legs after the next boundary from the latest states.
    if (opt.replan_cadence_h > 0.0 && !cur.empty() && k < ticks &&
        t - last_replan >= opt.replan_cadence_h - 1e-9) {
      last_replan = t;
      const auto b = static_cast<std::size_t>(std::ceil(t / profile.leg_h - 1e-9));
      if (b + 2 > profile.legs()) continue;
      const double t_b = static_cast<double>(b) * profile.leg_h;
      const double s_b = detail::distance_at(profile, t_b);
      std::vector<MammalState> at_b = cur;
      if (t_b > t)
        at_b = forecast_mammals(cur, {t_b - t}, opt.dt_h, grid, water).front();
      VoyageConstraints c{eta - t_b, units::m_to_nm(path.length_m() - s_b),
                          v_lo, v_hi};
      const int legs = static_cast<int>(profile.legs() - b);
      GaConfig ga = opt.ga;
      ga.seed = opt.ga.seed + 7919ULL * static_cast<std::uint64_t>(run.replans + 1);
      try {
        c.validate();
      } catch (const ValidationError&) {
        continue; // keep the current plan
      }
      const auto plan = optimize_speeds(route, c, at_b, ship, tl, grid, water,
                                        legs, ga, opt.dt_h, {}, s_b);
      std::copy(plan.profile.speeds_kt.begin(), plan.profile.speeds_kt.end(),
                profile.speeds_kt.begin() + static_cast<std::ptrdiff_t>(b));
      ++run.replans;
    }
  }
  run.executed = profile;
  return run;
}

struct MammalFootprint {
  int id = 0;
  std::vector<double> t_h;
  std::vector<double> spl_db;
  double sel_db = 0.0;
};

struct FootprintReport {
  std::vector<MammalFootprint> mammals;
  double mean_sel_db = std::numeric_limits<double>::quiet_NaN(); // J_s
};

/// Per-mammal SEL from the tick series: record k holds over [t_k, t_k+1).
inline FootprintReport footprint(const EventLog& log) {
  if (log.records.empty()) throw DomainError("footprint: empty log");
  FootprintReport rep;
  const auto ids = log.mammal_ids();
  const std::size_t n = log.records.size();
  for (std::size_t j = 0; j < ids.size(); ++j) {
    MammalFootprint f;
    f.id = ids[j];
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& r : log.records) {
      f.t_h.push_back(r.t_h);
      f.spl_db.push_back(r.nl_db[j]);
      hi = std::max(hi, r.nl_db[j]);
    }
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const double dt = log.records[k + 1].t_h - log.records[k].t_h;
      if (std::isfinite(f.spl_db[k]))
        sum += std::pow(10.0, (f.spl_db[k] - hi) / 10.0) * dt;
    }
    f.sel_db = (std::isfinite(hi) && sum > 0.0)
                   ? hi + 10.0 * std::log10(sum)
                   : -std::numeric_limits<double>::infinity();
    rep.mammals.push_back(std::move(f));
  }
  if (!rep.mammals.empty()) {
    double s = 0.0;
    for (const auto& f : rep.mammals) s += f.sel_db;
    rep.mean_sel_db = s / static_cast<double>(rep.mammals.size());
  }
  return rep;
}

/// Percent exposure reduction for a reduction of `reduction_db` dB
/// (baseline minus optimised). Negative for increases.
inline double reduction_percent(double reduction_db) {
  return (1.0 - std::pow(10.0, -reduction_db / 10.0)) * 100.0;
}

struct ComparisonRow {
  int id = 0;
  double baseline_sel_db = 0.0;
  double optimized_sel_db = 0.0;
  double delta_sel_db = 0.0; // optimized - baseline
  double reduction_pct = 0.0;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
  double baseline_mean_db = 0.0;
  double optimized_mean_db = 0.0;
  double delta_mean_db = 0.0; // delta J_s
  double reduction_pct = 0.0;
};

inline ComparisonTable compare(const FootprintReport& baseline,
                               const FootprintReport& optimized) {
  std::map<int, double> base;
  for (const auto& m : baseline.mammals) base[m.id] = m.sel_db;
  std::map<int, double> opt;
  for (const auto& m : optimized.mammals) opt[m.id] = m.sel_db;
  if (base.size() != baseline.mammals.size() ||
      opt.size() != optimized.mammals.size())
    throw ComparisonError("compare: duplicate mammal id");
  std::vector<int> missing;
  for (const auto& [id, v] : base)
    if (!opt.count(id)) missing.push_back(id);
  for (const auto& [id, v] : opt)
    if (!base.count(id)) missing.push_back(id);
  if (!missing.empty()) {
    std::ostringstream os;
    os << "compare: mammal ids differ between reports:";
    for (int id : missing) os << ' ' << id;
    throw ComparisonError(os.str());
  }
  ComparisonTable t;
  for (const auto& m : baseline.mammals) {
    ComparisonRow r;
    r.id = m.id;
    r.baseline_sel_db = m.sel_db;
    r.optimized_sel_db = opt[m.id];
    r.delta_sel_db = r.optimized_sel_db - r.baseline_sel_db;
    r.reduction_pct = reduction_percent(-r.delta_sel_db);
    t.rows.push_back(r);
  }
  if (!t.rows.empty()) {
    t.baseline_mean_db = baseline.mean_sel_db;
    t.optimized_mean_db = optimized.mean_sel_db;
    t.delta_mean_db = t.optimized_mean_db - t.baseline_mean_db;
    t.reduction_pct = reduction_percent(-t.delta_mean_db);
  }
  return t;
}

} // namespace qv
