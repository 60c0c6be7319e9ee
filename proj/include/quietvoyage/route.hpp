#pragma once

// Routes as planar SE2 waypoint lists plus arc-length parametrisation.

#include "quietvoyage/errors.hpp"
#include "quietvoyage/geo_env.hpp"
#include "quietvoyage/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace qv {

struct Se2State {
  double x = 0.0;   // meters east of the route reference
  double y = 0.0;   // meters north of the route reference
  double yaw = 0.0; // radians, counter-clockwise from east

  [[nodiscard]] PlanarPoint point() const { return {x, y}; }
  friend bool operator==(const Se2State&, const Se2State&) = default;
};

struct Route {
  GeoPoint reference{};            // planar origin
  std::vector<Se2State> waypoints; // N_w >= 2
  double length_nm = 0.0;
  double cost = 0.0;

  [[nodiscard]] std::vector<GeoPoint> geo_waypoints() const {
    std::vector<GeoPoint> out;
    out.reserve(waypoints.size());
    for (const auto& w : waypoints)
      out.push_back(from_planar(w.point(), reference, kShipSourceDepthM));
    return out;
  }
};

/// Sets yaw to each segment's heading (last waypoint repeats the final one)
/// and recomputes the length.
inline void finalize_route(Route& r) {
  if (r.waypoints.size() < 2) throw ValidationError("route needs >= 2 waypoints");
  double len = 0.0;
  for (std::size_t i = 0; i + 1 < r.waypoints.size(); ++i) {
    auto& a = r.waypoints[i];
    const auto& b = r.waypoints[i + 1];
    a.yaw = std::atan2(b.y - a.y, b.x - a.x);
    len += distance(a.point(), b.point());
  }
  r.waypoints.back().yaw = r.waypoints[r.waypoints.size() - 2].yaw;
  r.length_nm = units::m_to_nm(len);
}

/// Builds a route from geographic waypoints, projected about the first one.
inline Route route_from_geo(const std::vector<GeoPoint>& pts) {
  if (pts.size() < 2) throw ValidationError("route needs >= 2 waypoints");
  Route r;
  r.reference = pts.front();
  r.reference.depth = 0.0;
  for (const auto& p : pts) {
    const auto q = to_planar(p, r.reference);
    r.waypoints.push_back({q.x, q.y, 0.0});
  }
  finalize_route(r);
  return r;
}

/// Arc-length lookup along a route polyline.
class RoutePath {
public:
  explicit RoutePath(const Route& r) : ref_(r.reference) {
    if (r.waypoints.size() < 2)
      throw ValidationError("route needs >= 2 waypoints");
    cum_.push_back(0.0);
    for (const auto& w : r.waypoints) pts_.push_back(w.point());
    for (std::size_t i = 1; i < pts_.size(); ++i)
      cum_.push_back(cum_.back() + distance(pts_[i - 1], pts_[i]));
  }

  [[nodiscard]] double length_m() const { return cum_.back(); }
  [[nodiscard]] const std::vector<double>& cumulative_m() const { return cum_; }
  [[nodiscard]] const GeoPoint& reference() const { return ref_; }

  /// Planar position `s` meters along the route; clamped to the ends.
  [[nodiscard]] PlanarPoint planar_at(double s) const {
    s = std::clamp(s, 0.0, length_m());
    auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
    std::size_t i = it == cum_.begin() ? 0 : static_cast<std::size_t>(it - cum_.begin()) - 1;
    i = std::min(i, pts_.size() - 2);
    const double seg = cum_[i + 1] - cum_[i];
    const double t = seg > 0.0 ? (s - cum_[i]) / seg : 0.0;
    return {pts_[i].x + t * (pts_[i + 1].x - pts_[i].x),
            pts_[i].y + t * (pts_[i + 1].y - pts_[i].y)};
  }

  /// Ship source position (6 m depth) `s` meters along the route.
  [[nodiscard]] GeoPoint position_at(double s) const {
    return from_planar(planar_at(s), ref_, kShipSourceDepthM);
  }

private:
  GeoPoint ref_;
  std::vector<PlanarPoint> pts_;
  std::vector<double> cum_;
};

} // namespace qv
