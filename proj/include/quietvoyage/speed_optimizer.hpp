#pragma once

// Per-leg speed profile optimisation. The voyage is split into N equal-time
// legs; a real-coded genetic algorithm picks one speed per leg so that the
// mean sound exposure level over the mammals is minimal while the distance
// sailed matches the route length.

#include "quietvoyage/errors.hpp"
#include "quietvoyage/noise_source.hpp"
#include "quietvoyage/propagation.hpp"
#include "quietvoyage/route.hpp"
#include "quietvoyage/wildlife.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <vector>

namespace qv {

struct SpeedProfile {
  std::vector<double> speeds_kt;
  double leg_h = 0.0; // duration of every leg

  [[nodiscard]] std::size_t legs() const { return speeds_kt.size(); }
  [[nodiscard]] double duration_h() const {
    return leg_h * static_cast<double>(speeds_kt.size());
  }
  friend bool operator==(const SpeedProfile&, const SpeedProfile&) = default;
};

inline constexpr double kDistanceToleranceM = 100.0;
inline constexpr int kDefaultLegs = 24;

struct VoyageConstraints {
  double eta_h = 0.0;
  double length_nm = 0.0;
  double v_min_kt = 0.0;
  double v_max_kt = 0.0;
  double epsilon_m = kDistanceToleranceM;

  [[nodiscard]] double mean_speed_kt() const { return length_nm / eta_h; }

  void validate() const {
    if (!(eta_h > 0.0)) throw ValidationError("ETA must be positive");
    if (!(length_nm > 0.0)) throw ValidationError("path length must be positive");
    if (!(v_min_kt > 0.0) || !(v_min_kt <= v_max_kt))
      throw ValidationError("speed bounds must satisfy 0 < v_min <= v_max");
    if (!(epsilon_m > 0.0)) throw ValidationError("distance tolerance must be positive");
    const double v = mean_speed_kt();
    // Infeasible only if even the extreme constant speeds miss by > epsilon.
    const double slack_kt = units::m_to_nm(epsilon_m) / eta_h;
    if (v < v_min_kt - slack_kt || v > v_max_kt + slack_kt) {
      std::ostringstream os;
      os << "infeasible voyage: " << length_nm << " NM in " << eta_h
         << " h needs " << v << " kt, outside [" << v_min_kt << ", "
         << v_max_kt << "] kt";
      throw ValidationError(os.str());
    }
  }
};

/// Total distance travelled, NM.
inline double tdt(const SpeedProfile& p) {
  double s = 0.0;
  for (double v : p.speeds_kt) s += v * p.leg_h;
  return s;
}

inline SpeedProfile constant_profile(double v_kt, double eta_h, int legs) {
  if (legs < 1) throw DomainError("profile needs >= 1 leg");
  if (!(eta_h > 0.0)) throw DomainError("ETA must be positive");
  return {std::vector<double>(static_cast<std::size_t>(legs), v_kt),
          eta_h / legs};
}

/// Broadband received level for one leg: NLS_b(v) - TL_b, power-summed.
inline double leg_noise(double v_kt, std::span<const double> tl_db,
                        const ShipSpec& ship) {
  if (!(v_kt > 0.0)) throw DomainError("leg_noise: speed must be positive");
  const auto nls = source_spectrum(v_kt, ship.length_ft, ship.ship_class);
  return received_level(nls.level_db, tl_db);
}

template <TransmissionLossModel Tl>
double leg_noise(double v_kt, const GeoPoint& ship_pos,
                 const MammalState& mammal, const ShipSpec& ship, const Tl& tl) {
  const BandLevels t = tl.bands(ship_pos, mammal.position);
  return leg_noise(v_kt, t, ship);
}

/// SEL in dB re 1 uPa^2 h: 10 log10((dt / 1 h) sum 10^(NL/10)). Legs at
/// -inf (ship stopped) contribute no energy.
inline double sel_total(std::span<const double> leg_levels_db, double dt_h) {
  if (leg_levels_db.empty()) throw DomainError("sel_total: no legs");
  if (!(dt_h > 0.0)) throw DomainError("sel_total: dt must be positive");
  double hi = -std::numeric_limits<double>::infinity();
  for (double l : leg_levels_db) {
    if (std::isnan(l)) throw DomainError("sel_total: NaN level");
    hi = std::max(hi, l);
  }
  if (!std::isfinite(hi)) return hi;
  double sum = 0.0;
  for (double l : leg_levels_db) sum += std::pow(10.0, (l - hi) / 10.0);
  return hi + 10.0 * std::log10(sum * dt_h);
}

struct MammalExposure {
  int id = 0;
  std::vector<double> nl_db;     // per leg
  std::vector<double> energy;    // uPa^2 h per leg
  double sel_db = 0.0;
};

struct ExposureLedger {
  std::vector<MammalExposure> mammals;
  double mean_sel_db = 0.0; // J_s
};

/// Mammal states at the midpoint of every leg, forecast from `now`.
inline std::vector<std::vector<MammalState>>
forecast_leg_midpoints(const std::vector<MammalState>& now, int legs,
                       double leg_h, double step_h, const BathymetryGrid& grid,
                       const RegionMask& water) {
  std::vector<double> t;
  for (int i = 0; i < legs; ++i) t.push_back((i + 0.5) * leg_h);
  return forecast_mammals(now, t, step_h, grid, water);
}

/// Distance along the route of the ship at the middle of each leg, meters.
inline std::vector<double> leg_midpoint_distances(const SpeedProfile& p,
                                                  double start_m = 0.0) {
  std::vector<double> out;
  double s = start_m;
  for (double v : p.speeds_kt) {
    const double leg = units::nm_to_m(v * p.leg_h);
    out.push_back(s + 0.5 * leg);
    s += leg;
  }
  return out;
}

/// Per-mammal leg levels and SEL. `forecast[i]` holds the mammals at the
/// middle of leg i; ship positions are taken at leg midpoints along `path`,
/// starting `start_m` meters in.
template <TransmissionLossModel Tl>
ExposureLedger exposure_ledger(const SpeedProfile& p, const RoutePath& path,
                               const std::vector<std::vector<MammalState>>& forecast,
                               const ShipSpec& ship, const Tl& tl,
                               double start_m = 0.0) {
  if (forecast.size() != p.legs())
    throw ShapeError("forecast must hold one mammal set per leg");
  const std::size_t m = forecast.empty() ? 0 : forecast.front().size();
  if (m == 0) throw DomainError("objective undefined without mammals");
  const auto mids = leg_midpoint_distances(p, start_m);
  ExposureLedger led;
  led.mammals.resize(m);
  for (std::size_t j = 0; j < m; ++j) led.mammals[j].id = forecast.front()[j].id;
  for (std::size_t i = 0; i < p.legs(); ++i) {
    const GeoPoint pos = path.position_at(mids[i]);
    for (std::size_t j = 0; j < m; ++j) {
      const double v = p.speeds_kt[i];
      const double nl = v > 0.0 ? leg_noise(v, pos, forecast[i][j], ship, tl)
                                : -std::numeric_limits<double>::infinity();
      led.mammals[j].nl_db.push_back(nl);
      led.mammals[j].energy.push_back(std::pow(10.0, nl / 10.0) * p.leg_h);
    }
  }
  double sum = 0.0;
  for (auto& e : led.mammals) {
    e.sel_db = sel_total(e.nl_db, p.leg_h);
    sum += e.sel_db;
  }
  led.mean_sel_db = sum / static_cast<double>(m);
  return led;
}

/// J_s: mean SEL over the mammals, dB re 1 uPa^2 h.
template <TransmissionLossModel Tl>
double objective(const SpeedProfile& p, const RoutePath& path,
                 const std::vector<std::vector<MammalState>>& forecast,
                 const ShipSpec& ship, const Tl& tl, double start_m = 0.0) {
  return exposure_ledger(p, path, forecast, ship, tl, start_m).mean_sel_db;
}

inline constexpr double kPenaltyWeightDb = 10.0;

/// Distance violation beyond epsilon, in meters (0 when feasible).
inline double distance_violation_m(const SpeedProfile& p,
                                   const VoyageConstraints& c) {
  return std::max(0.0, std::abs(tdt(p) - c.length_nm) * units::meters_per_nm -
                           c.epsilon_m);
}

inline double penalized_fitness(const SpeedProfile& p,
                                const VoyageConstraints& c, double j_s) {
  return j_s + kPenaltyWeightDb * distance_violation_m(p, c) / c.epsilon_m;
}

/// Feasibility-first ordering: any feasible candidate beats any infeasible
/// one; otherwise lower fitness wins.
struct Ranked {
  double fitness = std::numeric_limits<double>::infinity();
  double objective = std::numeric_limits<double>::infinity();
  double violation_m = std::numeric_limits<double>::infinity();
  [[nodiscard]] bool feasible() const { return violation_m == 0.0; }
};

inline bool ranks_before(const Ranked& a, const Ranked& b) {
  if (a.feasible() != b.feasible()) return a.feasible();
  return a.fitness < b.fitness;
}

/// Tabulated exposure for fast GA evaluation. Because the speed term of the
/// source model shifts every band equally, the broadband level factors as
///   NL(v, s) = G(s) + 60 log10(v / v_T),
/// with G(s) = broadband(NLS_b(v_T) - TL_b(ship at s -> mammal)). G is sampled
/// along the route for every (leg, mammal) and linearly interpolated.
class ExposureTable {
public:
  template <TransmissionLossModel Tl>
  ExposureTable(const RoutePath& path,
                const std::vector<std::vector<MammalState>>& forecast,
                const ShipSpec& ship, const Tl& tl, double start_m = 0.0,
                double step_m = 0.0)
      : legs_(forecast.size()), start_m_(start_m) {
    if (forecast.empty()) throw ShapeError("exposure table needs >= 1 leg");
    mammals_ = forecast.front().size();
    if (mammals_ == 0) throw DomainError("objective undefined without mammals");
    v_ref_ = reference_speed(ship.ship_class);
    const auto nls = source_spectrum(v_ref_, ship.length_ft, ship.ship_class);
    const double len = path.length_m();
    step_ = step_m > 0.0 ? step_m : std::max(25.0, len / 4000.0);
    points_ = static_cast<std::size_t>(std::ceil(len / step_)) + 1;
    step_ = points_ > 1 ? len / static_cast<double>(points_ - 1) : 1.0;
    length_m_ = len;
    std::vector<GeoPoint> ship_pos(points_);
    for (std::size_t k = 0; k < points_; ++k)
      ship_pos[k] = path.position_at(static_cast<double>(k) * step_);
    row_of_.assign(legs_ * mammals_, 0);
    for (std::size_t i = 0; i < legs_; ++i) {
      if (forecast[i].size() != mammals_)
        throw ShapeError("forecast mammal count varies between legs");
      for (std::size_t j = 0; j < mammals_; ++j) {
        const GeoPoint& rcv = forecast[i][j].position;
        // Reuse a row when the mammal has not moved since the previous leg.
        if (i > 0 && forecast[i - 1][j].position == rcv) {
          row_of_[i * mammals_ + j] = row_of_[(i - 1) * mammals_ + j];
          continue;
        }
        row_of_[i * mammals_ + j] = rows_.size() / points_;
        for (std::size_t k = 0; k < points_; ++k)
          rows_.push_back(received_level(nls.level_db,
                                         tl.bands(ship_pos[k], rcv)));
      }
    }
  }

  /// G at `s` meters along the route for leg i, mammal j.
  [[nodiscard]] double g(std::size_t leg, std::size_t mammal, double s) const {
    const double u = std::clamp(s, 0.0, length_m_) / step_;
    std::size_t k = static_cast<std::size_t>(u);
    if (k >= points_ - 1) k = points_ > 1 ? points_ - 2 : 0;
    const double t = points_ > 1 ? u - static_cast<double>(k) : 0.0;
    const double* row = &rows_[row_of_[leg * mammals_ + mammal] * points_];
    return points_ > 1 ? row[k] * (1.0 - t) + row[k + 1] * t : row[0];
  }

  [[nodiscard]] std::size_t legs() const { return legs_; }
  [[nodiscard]] std::size_t mammals() const { return mammals_; }

  /// Mean SEL for a profile; same contract as objective().
  [[nodiscard]] double mean_sel(const SpeedProfile& p) const {
    if (p.legs() != legs_) throw ShapeError("profile leg count differs from table");
    thread_local std::vector<double> acc;
    acc.assign(mammals_, 0.0);
    double s = start_m_;
    for (std::size_t i = 0; i < legs_; ++i) {
      const double v = p.speeds_kt[i];
      const double leg = units::nm_to_m(v * p.leg_h);
      if (v > 0.0) {
        const double shift = 60.0 * std::log10(v / v_ref_);
        for (std::size_t j = 0; j < mammals_; ++j)
          acc[j] += std::pow(10.0, (g(i, j, s + 0.5 * leg) + shift) / 10.0);
      }
      s += leg;
    }
    double sum = 0.0;
    for (double e : acc) sum += 10.0 * std::log10(e * p.leg_h);
    return sum / static_cast<double>(mammals_);
  }

private:
  std::size_t legs_ = 0;
  std::size_t mammals_ = 0;
  std::size_t points_ = 0;
  double start_m_ = 0.0;
  double step_ = 1.0;
  double length_m_ = 0.0;
  double v_ref_ = 1.0;
  std::vector<std::size_t> row_of_;
  std::vector<double> rows_;
};

struct GaConfig {
  int population = 1000;
  int max_generations = 200;
  double objective_tolerance_db = 0.01;
  int stagnation_generations = 20;
  double time_budget_s = 300.0;
  double crossover_rate_start = 0.9;
  double crossover_rate_end = 0.6;
  double mutation_rate_start = 0.3; // per gene
  double mutation_rate_end = 0.05;
  double mutation_sigma_frac = 0.1; // of (v_max - v_min)
  double sbx_eta = 15.0;
  double init_jitter = 0.2;         // +-20 % around the constant speed
  double init_uniform_fraction = 0.5;
  int elite = 2;
  std::uint64_t seed = 11;
};

struct OptimizeResult {
  SpeedProfile profile;
  double objective_db = 0.0;
  double constant_speed_objective_db = 0.0;
  double initial_best_db = 0.0;
  int generations = 0;
  std::vector<double> best_history;
};

/// Clips to the speed bounds, then shifts the unclipped genes uniformly until
/// the distance sailed equals the target (or every gene sits on a bound).
inline void repair_profile(std::vector<double>& v, double leg_h,
                           const VoyageConstraints& c) {
  for (double& x : v) x = std::clamp(x, c.v_min_kt, c.v_max_kt);
  const double target = c.length_nm / leg_h; // required sum of speeds
  for (int it = 0; it < 64; ++it) {
    const double sum = std::accumulate(v.begin(), v.end(), 0.0);
    const double gap = target - sum;
    if (std::abs(gap) * leg_h * units::meters_per_nm < 1e-6) break;
    std::size_t free_genes = 0;
    for (double x : v)
      if ((gap > 0 && x < c.v_max_kt) || (gap < 0 && x > c.v_min_kt)) ++free_genes;
    if (free_genes == 0) break;
    const double shift = gap / static_cast<double>(free_genes);
    for (double& x : v)
      if ((gap > 0 && x < c.v_max_kt) || (gap < 0 && x > c.v_min_kt))
        x = std::clamp(x + shift, c.v_min_kt, c.v_max_kt);
  }
}

/// Real-coded GA over the leg speeds. `eval` maps a profile to J_s.
inline OptimizeResult
optimize_profile(const VoyageConstraints& c, int legs,
                 const std::function<double(const SpeedProfile&)>& eval,
                 const GaConfig& ga = {},
                 const std::function<void(double)>& progress = {}) {
  c.validate();
  if (ga.population < 2) throw ConfigError("GA population must be >= 2");
  if (legs < 1) throw ConfigError("speed profile needs >= 1 leg");
  const double leg_h = c.eta_h / legs;
  const std::size_t n = static_cast<std::size_t>(legs);
  const double v0 = c.mean_speed_kt();
  std::mt19937_64 rng(ga.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  struct Individual {
    std::vector<double> genes;
    Ranked rank;
  };
  auto evaluate = [&](Individual& ind) {
    SpeedProfile p{ind.genes, leg_h};
    ind.rank.objective = eval(p);
    ind.rank.violation_m = distance_violation_m(p, c);
    ind.rank.fitness = penalized_fitness(p, c, ind.rank.objective);
  };
  auto by_rank = [](const Individual& a, const Individual& b) {
    return ranks_before(a.rank, b.rank);
  };

  std::vector<Individual> pop(static_cast<std::size_t>(ga.population));
  const std::size_t uniform_from = static_cast<std::size_t>(
      std::lround((1.0 - ga.init_uniform_fraction) * ga.population));
  for (std::size_t k = 0; k < pop.size(); ++k) {
    auto& g = pop[k].genes;
    g.resize(n);
    for (auto& x : g) {
      if (k == 0)
        x = v0;
      else if (k < uniform_from)
        x = v0 * (1.0 + ga.init_jitter * (2.0 * u01(rng) - 1.0));
      else
        x = c.v_min_kt + (c.v_max_kt - c.v_min_kt) * u01(rng);
    }
    repair_profile(g, leg_h, c);
    evaluate(pop[k]);
  }
  OptimizeResult res;
  res.constant_speed_objective_db = pop[0].rank.objective;
  std::sort(pop.begin(), pop.end(), by_rank);
  res.initial_best_db = pop.front().rank.objective;
  res.best_history.push_back(pop.front().rank.fitness);

  const auto t0 = std::chrono::steady_clock::now();
  const double range = c.v_max_kt - c.v_min_kt;
  int gen = 0;
  for (; gen < ga.max_generations; ++gen) {
    const double prog =
        ga.max_generations > 1 ? static_cast<double>(gen) / (ga.max_generations - 1) : 1.0;
    const double pc = ga.crossover_rate_start +
                      (ga.crossover_rate_end - ga.crossover_rate_start) * prog;
    const double pm = ga.mutation_rate_start +
                      (ga.mutation_rate_end - ga.mutation_rate_start) * prog;
    auto tournament = [&]() -> const Individual& {
      std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
      const auto& a = pop[pick(rng)];
      const auto& b = pop[pick(rng)];
      return ranks_before(b.rank, a.rank) ? b : a;
    };
    std::vector<Individual> next;
    next.reserve(pop.size());
    for (int e = 0; e < std::min<int>(ga.elite, ga.population); ++e)
      next.push_back(pop[static_cast<std::size_t>(e)]);
    while (next.size() < pop.size()) {
      Individual c1{tournament().genes, {}};
      Individual c2{tournament().genes, {}};
      if (u01(rng) < pc) {
        // Simulated binary crossover.
        for (std::size_t i = 0; i < n; ++i) {
          const double u = u01(rng);
          const double beta =
              u <= 0.5 ? std::pow(2.0 * u, 1.0 / (ga.sbx_eta + 1.0))
                       : std::pow(1.0 / (2.0 * (1.0 - u)), 1.0 / (ga.sbx_eta + 1.0));
          const double a = c1.genes[i], b = c2.genes[i];
          c1.genes[i] = 0.5 * ((1 + beta) * a + (1 - beta) * b);
          c2.genes[i] = 0.5 * ((1 - beta) * a + (1 + beta) * b);
        }
      }
      for (auto* ch : {&c1, &c2}) {
        for (auto& x : ch->genes)
          if (u01(rng) < pm) x += gauss(rng) * ga.mutation_sigma_frac * range;
        repair_profile(ch->genes, leg_h, c);
        evaluate(*ch);
        if (next.size() < pop.size()) next.push_back(std::move(*ch));
      }
    }
    pop = std::move(next);
    std::sort(pop.begin(), pop.end(), by_rank);
    res.best_history.push_back(pop.front().rank.fitness);
    if (progress) progress(static_cast<double>(gen + 1) / ga.max_generations);
    const std::size_t h = res.best_history.size();
    if (h > static_cast<std::size_t>(ga.stagnation_generations) &&
        res.best_history[h - 1 - static_cast<std::size_t>(ga.stagnation_generations)] -
                res.best_history[h - 1] <
            ga.objective_tolerance_db) {
      ++gen;
      break;
    }
    if (std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() >
        ga.time_budget_s) {
      ++gen;
      break;
    }
  }
  res.generations = gen;
  const auto& best = pop.front();
  if (!best.rank.feasible()) {
    std::ostringstream os;
    os << "no profile within " << c.epsilon_m << " m of the route length; best "
       << "violation " << best.rank.violation_m << " m beyond tolerance";
    throw OptimizationError(os.str());
  }
  res.profile = {best.genes, leg_h};
  res.objective_db = best.rank.objective;
  if (progress) progress(1.0);
  return res;
}

struct SpeedPlan {
  SpeedProfile profile;
  ExposureLedger ledger;
  OptimizeResult search;
};

/// Optimises leg speeds along `route` for mammals forecast from `now`.
/// With no mammals every feasible profile is optimal and the constant-speed
/// profile is returned.
template <TransmissionLossModel Tl>
SpeedPlan optimize_speeds(const Route& route, const VoyageConstraints& c,
                          const std::vector<MammalState>& now,
                          const ShipSpec& ship, const Tl& tl,
                          const BathymetryGrid& grid, const RegionMask& water,
                          int legs = kDefaultLegs, const GaConfig& ga = {},
                          double forecast_step_h = 1.0 / 60.0,
                          const std::function<void(double)>& progress = {},
                          double start_m = 0.0) {
  c.validate();
  ship.validate();
  const RoutePath path(route);
  SpeedPlan plan;
  if (now.empty()) {
    std::vector<double> v(static_cast<std::size_t>(legs), c.mean_speed_kt());
    repair_profile(v, c.eta_h / legs, c);
    plan.profile = {v, c.eta_h / legs};
    if (progress) progress(1.0);
    return plan;
  }
  const auto forecast = forecast_leg_midpoints(now, legs, c.eta_h / legs,
                                               forecast_step_h, grid, water);
  const ExposureTable table(path, forecast, ship, tl, start_m);
  plan.search = optimize_profile(
      c, legs, [&](const SpeedProfile& p) { return table.mean_sel(p); }, ga,
      progress);
  plan.profile = plan.search.profile;
  plan.ledger = exposure_ledger(plan.profile, path, forecast, ship, tl, start_m);
  return plan;
}

} // namespace qv
