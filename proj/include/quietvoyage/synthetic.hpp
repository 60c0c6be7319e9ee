#pragma once

// Deterministic synthetic study area used by the bundled fixtures and tests:
// an east-west strait with land on both shores, one shipping lane, and an
// island lying between the lane and a pinned mammal so that part of the
// transit is acoustically shadowed.

#include "quietvoyage/geo_env.hpp"
#include "quietvoyage/propagation.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace qv::synthetic {

struct StraitLayout {
  double lat_min = 48.56;
  double lon_min = -123.52;
  double cell_deg = 0.0025;
  int rows = 80;  // 0.20 deg
  int cols = 176; // 0.44 deg
  double south_shore_lat = 48.585;
  double north_shore_lat = 48.740;
  double island_lat_lo = 48.650;
  double island_lat_hi = 48.668;
  double island_lon_lo = -123.465;
  double island_lon_hi = -123.30;
  double lane_lat_lo = 48.672;
  double lane_lat_hi = 48.700;
  double lane_center_lat = 48.684;
  double departure_lon = -123.49;
  double destination_lon = -123.11;
};

inline constexpr GeoPoint kPinnedMammal{48.646343, -123.313054, 1.0};

inline double water_depth(const StraitLayout& s, double lat, double lon) {
  if (lat < s.south_shore_lat || lat > s.north_shore_lat) return -20.0;
  if (lat >= s.island_lat_lo && lat <= s.island_lat_hi &&
      lon >= s.island_lon_lo && lon <= s.island_lon_hi)
    return -15.0;
  // Deepest mid-channel, shoaling toward both shores.
  const double mid = 0.5 * (s.south_shore_lat + s.north_shore_lat);
  const double half = 0.5 * (s.north_shore_lat - s.south_shore_lat);
  const double u = (lat - mid) / half;
  return 12.0 + 188.0 * (1.0 - u * u) *
                    (0.9 + 0.1 * std::cos(12.0 * (lon - s.lon_min)));
}

inline BathymetryGrid make_bathymetry(const StraitLayout& s = {}) {
  std::vector<double> depth(static_cast<std::size_t>(s.rows) * s.cols);
  for (int r = 0; r < s.rows; ++r)
    for (int c = 0; c < s.cols; ++c) {
      const double lat = s.lat_min + (r + 0.5) * s.cell_deg;
      const double lon = s.lon_min + (c + 0.5) * s.cell_deg;
      depth[static_cast<std::size_t>(r) * s.cols + c] =
          std::round(water_depth(s, lat, lon) * 10.0) / 10.0;
    }
  return {GeoPoint{s.lat_min, s.lon_min, 0.0}, s.cell_deg, s.rows, s.cols,
          std::move(depth)};
}

inline std::vector<std::uint8_t> make_lane_layer(const BathymetryGrid& g,
                                                 const StraitLayout& s = {}) {
  std::vector<std::uint8_t> lane(g.values().size(), 0);
  for (int r = 0; r < g.rows(); ++r)
    for (int c = 0; c < g.cols(); ++c) {
      const double lat = g.node_lat(r);
      lane[g.index(r, c)] =
          (lat >= s.lane_lat_lo && lat <= s.lane_lat_hi && g.at(r, c) > 0.0)
              ? 1
              : 0;
    }
  return lane;
}

inline GeoPoint departure(const StraitLayout& s = {}) {
  return {s.lane_center_lat, s.departure_lon, kShipSourceDepthM};
}
inline GeoPoint destination(const StraitLayout& s = {}) {
  return {s.lane_center_lat, s.destination_lon, kShipSourceDepthM};
}

/// TL source positions: one row along the lane centre line, extending a
/// little past both voyage endpoints.
inline std::vector<GeoPoint> lane_sources(const StraitLayout& s = {},
                                          int count = 15) {
  std::vector<GeoPoint> out;
  for (int i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.5 : static_cast<double>(i) / (count - 1);
    out.push_back({s.lane_center_lat,
                   s.departure_lon - 0.01 +
                       t * (s.destination_lon - s.departure_lon + 0.02),
                   kShipSourceDepthM});
  }
  return out;
}

/// Lattice and surrogate settings the bundled fixture is built with.
inline LatticeSpec fixture_lattice() {
  return LatticeSpec::uniform(20000.0, 12, 24, 3);
}
inline RbfOptions fixture_rbf_options() {
  RbfOptions o;
  o.clusters = 250;
  o.per_cluster = 2;
  o.dim_weight[4] = 0.2;
  return o;
}

} // namespace qv::synthetic
