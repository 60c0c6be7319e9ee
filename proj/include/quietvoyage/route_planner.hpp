#pragma once

// Route search with Batch Informed Trees (BIT*) over the lane mask. The cost
// of a state is a constant offset minus the mean transmission loss from the
// ship to every mammal, so quieter (more shadowed) states are cheaper.

#include "quietvoyage/errors.hpp"
#include "quietvoyage/geo_env.hpp"
#include "quietvoyage/propagation.hpp"
#include "quietvoyage/route.hpp"
#include "quietvoyage/wildlife.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <queue>
#include <random>
#include <span>
#include <sstream>
#include <tuple>
#include <vector>

namespace qv {

inline constexpr double kCostOffsetDb = 200.0;

struct CostParams {
  double offset_db = kCostOffsetDb;
  /// Upper clamp on the mean TL. Bounding it makes offset - cap a hard lower
  /// bound on the local cost, which is what keeps the planner's heuristic
  /// admissible when the surrogate overshoots.
  double tl_cap_db = kCostOffsetDb;

  [[nodiscard]] double min_cost(bool have_mammals) const {
    return have_mammals ? offset_db - std::min(tl_cap_db, offset_db)
                        : offset_db;
  }
};

/// C - mean_j(band-mean TL from `ship` to mammal j); C when there are none.
template <TransmissionLossModel Tl>
double local_cost(const GeoPoint& ship, std::span<const MammalState> mammals,
                  const Tl& tl, const CostParams& p = {}) {
  if (mammals.empty()) return p.offset_db;
  double sum = 0.0;
  for (const auto& m : mammals) sum += mean_band(tl.bands(ship, m.position));
  const double mean = sum / static_cast<double>(mammals.size());
  return p.offset_db - std::min(mean, std::min(p.tl_cap_db, p.offset_db));
}

template <TransmissionLossModel Tl>
double local_cost(const Se2State& s, const GeoPoint& reference,
                  std::span<const MammalState> mammals, const Tl& tl,
                  const CostParams& p = {}) {
  return local_cost(from_planar(s.point(), reference, kShipSourceDepthM),
                    mammals, tl, p);
}

/// Route objective: local cost at `points` equally spaced arc-length
/// positions, weighted by normalized trapezoid increments (weights sum to 1).
template <TransmissionLossModel Tl>
double route_cost(const Route& route, std::span<const MammalState> mammals,
                  const Tl& tl, const CostParams& p = {}, int points = 200) {
  if (points < 2) throw DomainError("route_cost: need at least 2 points");
  const RoutePath path(route);
  const double len = path.length_m();
  double total = 0.0;
  for (int i = 0; i < points; ++i) {
    const double tau = static_cast<double>(i) / (points - 1);
    const double w = (i == 0 || i == points - 1 ? 0.5 : 1.0) / (points - 1);
    total += w * local_cost(path.position_at(tau * len), mammals, tl, p);
  }
  return total;
}

struct PlannerConfig {
  int batch_size = 100;
  int max_batches = 12;
  double time_budget_s = 120.0; // safety stop; normal runs end on max_batches
  double goal_radius_m = 500.0;
  double min_depth_m = 10.0;
  double edge_check_m = 100.0;
  double cost_step_m = 250.0;
  double rewire_factor = 1.1;
  std::uint64_t seed = 1;
  CostParams cost{};
};

struct PlanResult {
  Route route;
  /// Best solution cost after each batch (inf until a solution exists), in
  /// cost-units x km.
  std::vector<double> incumbent_history;
  double path_cost = 0.0; // arc-length integral the search minimised
  double min_cost_per_km = 0.0;
  std::size_t vertices = 0;
  int batches = 0;
};

namespace detail {

/// Validity of a planar state in the planner workspace.
struct Workspace {
  const BathymetryGrid* grid;
  const RegionMask* mask;
  GeoPoint ref;
  double min_depth;
  double x_lo, x_hi, y_lo, y_hi;

  [[nodiscard]] GeoPoint geo(const PlanarPoint& p) const {
    return from_planar(p, ref, kShipSourceDepthM);
  }
  [[nodiscard]] bool valid(const PlanarPoint& p) const {
    const GeoPoint g = geo(p);
    return grid->contains(g) && is_navigable(g, *mask, *grid, min_depth);
  }
  [[nodiscard]] bool segment_valid(const PlanarPoint& a, const PlanarPoint& b,
                                   double step) const {
    const double d = distance(a, b);
    const int n = std::max(1, static_cast<int>(std::ceil(d / step)));
    for (int i = 0; i <= n; ++i) {
      const double t = static_cast<double>(i) / n;
      if (!valid({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)})) return false;
    }
    return true;
  }
};

} // namespace detail

/// Collision test for a whole route at `step` meter resolution.
inline bool route_collision_free(const Route& r, const BathymetryGrid& grid,
                                 const RegionMask& mask, double min_depth_m,
                                 double step_m = 100.0) {
  const detail::Workspace ws{&grid, &mask, r.reference, min_depth_m, 0, 0, 0, 0};
  for (std::size_t i = 0; i + 1 < r.waypoints.size(); ++i)
    if (!ws.segment_valid(r.waypoints[i].point(), r.waypoints[i + 1].point(),
                          step_m))
      return false;
  return true;
}

/// Integral of local cost along a planar segment (cost-units x km), by the
/// trapezoid rule with spacing <= `step` meters.
template <TransmissionLossModel Tl>
double segment_cost(const PlanarPoint& a, const PlanarPoint& b,
                    const GeoPoint& ref, std::span<const MammalState> mammals,
                    const Tl& tl, const CostParams& p, double step) {
  const double d = distance(a, b);
  if (d == 0.0) return 0.0;
  if (mammals.empty()) return p.offset_db * d / 1000.0;
  const int n = std::max(1, static_cast<int>(std::ceil(d / step)));
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    const GeoPoint g = from_planar({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)},
                                   ref, kShipSourceDepthM);
    acc += (i == 0 || i == n ? 0.5 : 1.0) * local_cost(g, mammals, tl, p);
  }
  return acc / n * d / 1000.0;
}

/// BIT* from `start` to `goal`. Mammal states are frozen for the query.
template <TransmissionLossModel Tl>
PlanResult plan_route(const GeoPoint& start, const GeoPoint& goal,
                      std::span<const MammalState> mammals, const Tl& tl,
                      const BathymetryGrid& grid, const RegionMask& mask,
                      const PlannerConfig& cfg = {}) {
  if (cfg.batch_size < 1) throw ConfigError("planner batch_size must be >= 1");
  if (cfg.max_batches < 1) throw ConfigError("planner max_batches must be >= 1");
  GeoPoint ref = start;
  ref.depth = 0.0;
  detail::Workspace ws{&grid, &mask, ref, cfg.min_depth_m, 0, 0, 0, 0};
  {
    const auto sw = to_planar({grid.lat_min(), grid.lon_min(), 0.0}, ref);
    const auto ne = to_planar({grid.lat_max(), grid.lon_max(), 0.0}, ref);
    ws.x_lo = sw.x;
    ws.y_lo = sw.y;
    ws.x_hi = ne.x;
    ws.y_hi = ne.y;
  }
  const PlanarPoint ps{0.0, 0.0};
  const PlanarPoint pg = to_planar(goal, ref);
  if (!ws.valid(ps)) throw ValidationError("plan_route: start is not navigable");
  if (!ws.valid(pg)) throw ValidationError("plan_route: goal is not navigable");
  if (distance(ps, pg) == 0.0)
    throw ValidationError("plan_route: start and goal coincide");

  const double c_min = cfg.cost.min_cost(!mammals.empty()) / 1000.0; // per m
  PlanResult res;
  res.min_cost_per_km = c_min * 1000.0;
  auto finish = [&](std::vector<PlanarPoint> pts, double cost) {
    res.route.reference = ref;
    for (const auto& p : pts) res.route.waypoints.push_back({p.x, p.y, 0.0});
    finalize_route(res.route);
    res.route.cost = route_cost(res.route, mammals, tl, cfg.cost);
    res.path_cost = cost;
    return res;
  };

  if (distance(ps, pg) <= cfg.goal_radius_m &&
      ws.segment_valid(ps, pg, cfg.edge_check_m)) {
    res.incumbent_history.push_back(
        segment_cost(ps, pg, ref, mammals, tl, cfg.cost, cfg.cost_step_m));
    res.batches = 0;
    res.vertices = 2;
    return finish({ps, pg}, res.incumbent_history.back());
  }

  constexpr double inf = std::numeric_limits<double>::infinity();
  struct Node {
    PlanarPoint p;
    double g = inf;
    int parent = -1;
    bool in_tree = false;
    bool alive = true;
    std::vector<int> children;
  };
  std::vector<Node> nodes;
  nodes.push_back({ps, 0.0, -1, true, true, {}});
  nodes.push_back({pg, inf, -1, false, true, {}});
  constexpr int kStart = 0, kGoal = 1;

  auto h_hat = [&](int i) { return distance(nodes[i].p, pg) * c_min; };
  auto g_hat = [&](int i) { return distance(ps, nodes[i].p) * c_min; };
  auto c_hat = [&](int i, int j) { return distance(nodes[i].p, nodes[j].p) * c_min; };

  std::map<std::pair<int, int>, double> edge_cache;
  auto true_cost = [&](int i, int j) {
    const auto key = std::minmax(i, j);
    auto it = edge_cache.find(key);
    if (it != edge_cache.end()) return it->second;
    const auto& a = nodes[key.first].p;
    const auto& b = nodes[key.second].p;
    double c = inf;
    if (ws.segment_valid(a, b, cfg.edge_check_m))
      c = segment_cost(a, b, ref, mammals, tl, cfg.cost, cfg.cost_step_m);
    edge_cache.emplace(key, c);
    return c;
  };

  // Free-space measure for the connection radius.
  double free_frac = 0.0;
  {
    std::size_t ok = 0;
    for (int r = 0; r < grid.rows(); ++r)
      for (int c = 0; c < grid.cols(); ++c)
        if (mask.is_lane(grid.index(r, c)) && grid.at(r, c) >= cfg.min_depth_m)
          ++ok;
    free_frac = static_cast<double>(ok) / static_cast<double>(grid.values().size());
  }
  const double free_area =
      std::max(free_frac, 1e-6) * (ws.x_hi - ws.x_lo) * (ws.y_hi - ws.y_lo);
  const double gamma = cfg.rewire_factor * 2.0 * std::sqrt(1.5) *
                       std::sqrt(free_area / std::numbers::pi);

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> ux(ws.x_lo, ws.x_hi);
  std::uniform_real_distribution<double> uy(ws.y_lo, ws.y_hi);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  auto c_best = [&] { return nodes[kGoal].in_tree ? nodes[kGoal].g : inf; };

  auto sample_batch = [&](double best) {
    const double focal = distance(ps, pg);
    const bool informed = std::isfinite(best) && c_min > 0.0;
    const double a = informed ? 0.5 * best / c_min : 0.0;
    const double b = informed ? std::sqrt(std::max(a * a - 0.25 * focal * focal, 0.0)) : 0.0;
    const double ang = std::atan2(pg.y - ps.y, pg.x - ps.x);
    const PlanarPoint mid{0.5 * (ps.x + pg.x), 0.5 * (ps.y + pg.y)};
    const bool use_ellipse =
        informed && std::numbers::pi * a * b < (ws.x_hi - ws.x_lo) * (ws.y_hi - ws.y_lo);
    int added = 0;
    const int max_attempts = 200 * cfg.batch_size;
    for (int att = 0; att < max_attempts && added < cfg.batch_size; ++att) {
      PlanarPoint p;
      if (use_ellipse) {
        const double rr = std::sqrt(u01(rng));
        const double th = 2.0 * std::numbers::pi * u01(rng);
        const double ex = a * rr * std::cos(th), ey = b * rr * std::sin(th);
        p = {mid.x + ex * std::cos(ang) - ey * std::sin(ang),
             mid.y + ex * std::sin(ang) + ey * std::cos(ang)};
        if (p.x < ws.x_lo || p.x > ws.x_hi || p.y < ws.y_lo || p.y > ws.y_hi)
          continue;
      } else {
        p = {ux(rng), uy(rng)};
      }
      if (informed && (distance(ps, p) + distance(p, pg)) * c_min >= best)
        continue;
      if (!ws.valid(p)) continue;
      nodes.push_back({p, inf, -1, false, true, {}});
      ++added;
    }
  };

  auto remove_child = [&](int parent, int child) {
    auto& ch = nodes[parent].children;
    ch.erase(std::remove(ch.begin(), ch.end(), child), ch.end());
  };
  auto propagate = [&](int root) {
    std::vector<int> stack{root};
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int c : nodes[v].children) {
        nodes[c].g = nodes[v].g + true_cost(v, c);
        stack.push_back(c);
      }
    }
  };

  auto prune = [&](double best) {
    for (std::size_t i = 2; i < nodes.size(); ++i) {
      auto& n = nodes[i];
      if (!n.alive) continue;
      const double f = g_hat(static_cast<int>(i)) + h_hat(static_cast<int>(i));
      if (!n.in_tree && f >= best) n.alive = false;
      if (n.in_tree && f > best) {
        n.alive = false;
        n.in_tree = false;
        if (n.parent >= 0) remove_child(n.parent, static_cast<int>(i));
        for (int c : n.children) nodes[c].parent = -1;
        n.children.clear();
        n.parent = -1;
      }
    }
    // Anything no longer reachable from the root becomes a sample again.
    std::vector<char> reach(nodes.size(), 0);
    std::vector<int> stack{kStart};
    reach[kStart] = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int c : nodes[v].children) {
        reach[static_cast<std::size_t>(c)] = 1;
        stack.push_back(c);
      }
    }
    for (std::size_t i = 1; i < nodes.size(); ++i) {
      auto& n = nodes[i];
      if (n.in_tree && !reach[i]) {
        n.in_tree = false;
        n.g = inf;
        if (n.parent >= 0) remove_child(n.parent, static_cast<int>(i));
        n.parent = -1;
        n.children.clear();
      }
    }
  };

  using VEntry = std::pair<double, int>;                       // key, vertex
  using EEntry = std::tuple<double, double, int, int>;         // key, g(v)+c_hat, v, x
  const auto t0 = std::chrono::steady_clock::now();
  auto out_of_time = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
               .count() > cfg.time_budget_s;
  };

  // The incumbent is only replaced by a strictly cheaper goal path, so
  // re-summed costs along rewired branches cannot nudge it upward.
  std::vector<PlanarPoint> best_pts;
  double best_cost = inf;
  auto record = [&] {
    if (!nodes[kGoal].in_tree || !(c_best() < best_cost - 1e-9)) return;
    best_cost = c_best();
    best_pts.clear();
    for (int v = kGoal; v >= 0; v = nodes[v].parent) best_pts.push_back(nodes[v].p);
    std::reverse(best_pts.begin(), best_pts.end());
  };

  for (int batch = 0; batch < cfg.max_batches && !out_of_time(); ++batch) {
    const double best0 = c_best();
    if (std::isfinite(best0)) prune(best0);
    sample_batch(best0);
    std::size_t q = 0;
    for (const auto& n : nodes) q += n.alive ? 1 : 0;
    const double radius =
        gamma * std::sqrt(std::log(static_cast<double>(q)) / static_cast<double>(q));

    std::priority_queue<VEntry, std::vector<VEntry>, std::greater<>> qv;
    std::priority_queue<EEntry, std::vector<EEntry>, std::greater<>> qe;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].alive && nodes[i].in_tree)
        qv.push({nodes[i].g + h_hat(static_cast<int>(i)), static_cast<int>(i)});

    auto expand = [&](int v) {
      const double gv = nodes[v].g;
      const double best = c_best();
      for (std::size_t j = 0; j < nodes.size(); ++j) {
        const int x = static_cast<int>(j);
        if (x == v || !nodes[j].alive) continue;
        if (distance(nodes[v].p, nodes[j].p) > radius) continue;
        const double ch = c_hat(v, x);
        if (!nodes[j].in_tree) {
          if (g_hat(v) + ch + h_hat(x) < best)
            qe.push({gv + ch + h_hat(x), gv + ch, v, x});
        } else if (x != nodes[v].parent && nodes[j].parent != v &&
                   g_hat(v) + ch + h_hat(x) < best && gv + ch < nodes[j].g) {
          qe.push({gv + ch + h_hat(x), gv + ch, v, x});
        }
      }
    };

    while (!out_of_time()) {
      while (!qv.empty()) {
        const auto [key, v] = qv.top();
        if (!nodes[v].in_tree || key > nodes[v].g + h_hat(v) + 1e-12) {
          qv.pop();
          continue;
        }
        if (!qe.empty() && key > std::get<0>(qe.top())) break;
        qv.pop();
        expand(v);
      }
      if (qe.empty()) break;
      const auto [key, gc_hat, v, x] = qe.top();
      qe.pop();
      if (!nodes[v].in_tree) continue;
      const double best = c_best();
      if (nodes[v].g + c_hat(v, x) + h_hat(x) >= best) {
        // Nothing left in this batch can improve the incumbent.
        break;
      }
      if (nodes[v].g + c_hat(v, x) >= nodes[x].g) continue;
      const double c = true_cost(v, x);
      if (!std::isfinite(c)) continue;
      if (g_hat(v) + c + h_hat(x) >= best) continue;
      const double g_new = nodes[v].g + c;
      if (g_new >= nodes[x].g) continue;
      // Refuse to attach x below one of its own descendants.
      bool cycle = false;
      for (int a = v; a >= 0; a = nodes[a].parent)
        if (a == x) {
          cycle = true;
          break;
        }
      if (cycle) continue;
      if (nodes[x].in_tree && nodes[x].parent >= 0)
        remove_child(nodes[x].parent, x);
      nodes[x].parent = v;
      nodes[x].g = g_new;
      nodes[x].in_tree = true;
      nodes[v].children.push_back(x);
      propagate(x);
      qv.push({nodes[x].g + h_hat(x), x});
    }
    record();
    res.incumbent_history.push_back(best_cost);
    res.batches = batch + 1;
  }

  if (best_pts.empty()) {
    double closest = inf;
    std::size_t tree = 0;
    for (const auto& n : nodes)
      if (n.in_tree) {
        ++tree;
        closest = std::min(closest, distance(n.p, pg));
      }
    std::ostringstream os;
    os << "plan_route: no route found after " << res.batches << " batches ("
       << tree << " tree vertices, closest approach to goal " << closest
       << " m)";
    throw PlanningError(os.str());
  }
  for (const auto& n : nodes) res.vertices += n.in_tree ? 1 : 0;
  return finish(std::move(best_pts), best_cost);
}

} // namespace qv
