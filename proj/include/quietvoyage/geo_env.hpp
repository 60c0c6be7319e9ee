#pragma once

// Geographic handling for the planning workspace: an equirectangular local
// projection, a raster bathymetry grid (land stored as negative depth), the
// lane/land masks used for state validity, and a terrain occlusion test.

#include "quietvoyage/errors.hpp"
#include "quietvoyage/units.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace qv {

struct GeoPoint {
  double lat = 0.0;   // degrees north
  double lon = 0.0;   // degrees east, negative west
  double depth = 0.0; // meters below surface

  [[nodiscard]] bool valid() const {
    return std::isfinite(lat) && std::isfinite(lon) && std::isfinite(depth) &&
           lat >= -90.0 && lat <= 90.0 && lon >= -180.0 && lon <= 180.0 &&
           depth >= 0.0;
  }
  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

struct PlanarPoint {
  double x = 0.0; // meters east of the reference
  double y = 0.0; // meters north of the reference

  friend bool operator==(const PlanarPoint&, const PlanarPoint&) = default;
};

inline double distance(const PlanarPoint& a, const PlanarPoint& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

inline PlanarPoint to_planar(const GeoPoint& p, const GeoPoint& ref) {
  if (!std::isfinite(p.lat) || !std::isfinite(p.lon) ||
      !std::isfinite(ref.lat) || !std::isfinite(ref.lon))
    throw InvalidCoordinateError("to_planar: non-finite coordinate");
  if (std::abs(p.lat) >= 89.0 || std::abs(ref.lat) >= 89.0)
    throw InvalidCoordinateError("to_planar: latitude too close to a pole");
  const double k = units::deg2rad * units::earth_radius_m;
  return {(p.lon - ref.lon) * k * std::cos(ref.lat * units::deg2rad),
          (p.lat - ref.lat) * k};
}

/// Inverse of to_planar. The returned point carries `depth`.
inline GeoPoint from_planar(const PlanarPoint& q, const GeoPoint& ref,
                            double depth = 0.0) {
  if (!std::isfinite(q.x) || !std::isfinite(q.y))
    throw InvalidCoordinateError("from_planar: non-finite coordinate");
  const double k = units::deg2rad * units::earth_radius_m;
  return {ref.lat + q.y / k,
          ref.lon + q.x / (k * std::cos(ref.lat * units::deg2rad)), depth};
}

/// Great-circle (haversine) surface distance in meters.
inline double surface_distance_m(const GeoPoint& a, const GeoPoint& b) {
  const double la1 = a.lat * units::deg2rad, la2 = b.lat * units::deg2rad;
  const double dla = la2 - la1;
  const double dlo = (b.lon - a.lon) * units::deg2rad;
  const double h = std::sin(dla / 2) * std::sin(dla / 2) +
                   std::cos(la1) * std::cos(la2) * std::sin(dlo / 2) *
                       std::sin(dlo / 2);
  return 2.0 * units::earth_radius_m *
         std::asin(std::min(1.0, std::sqrt(h)));
}

/// Raster of water depth (positive) and land elevation (negative). Nodes sit
/// at cell centres; row 0 is the southern-most row.
class BathymetryGrid {
public:
  BathymetryGrid() = default;

  /// `south_west` is the outer south-west corner of the raster.
  BathymetryGrid(GeoPoint south_west, double cell_size_deg, int rows,
                 int cols, std::vector<double> depth)
      : origin_(south_west), cell_(cell_size_deg), rows_(rows), cols_(cols),
        depth_(std::move(depth)) {
    if (rows_ <= 0 || cols_ <= 0)
      throw ConfigError("bathymetry grid needs rows*cols > 0");
    if (!(cell_ > 0.0))
      throw ConfigError("bathymetry cell size must be positive");
    if (depth_.size() != static_cast<std::size_t>(rows_) * cols_)
      throw ShapeError("bathymetry value count does not match rows*cols");
    for (double d : depth_)
      if (!std::isfinite(d))
        throw ConfigError("bathymetry contains a non-finite value");
  }

  [[nodiscard]] const GeoPoint& origin() const { return origin_; }
  [[nodiscard]] double cell_size() const { return cell_; }
  [[nodiscard]] int rows() const { return rows_; }
  [[nodiscard]] int cols() const { return cols_; }
  [[nodiscard]] const std::vector<double>& values() const { return depth_; }

  [[nodiscard]] double at(int row, int col) const {
    return depth_[static_cast<std::size_t>(row) * cols_ + col];
  }
  [[nodiscard]] double node_lat(int row) const {
    return origin_.lat + (row + 0.5) * cell_;
  }
  [[nodiscard]] double node_lon(int col) const {
    return origin_.lon + (col + 0.5) * cell_;
  }
  [[nodiscard]] double lat_min() const { return origin_.lat; }
  [[nodiscard]] double lat_max() const { return origin_.lat + rows_ * cell_; }
  [[nodiscard]] double lon_min() const { return origin_.lon; }
  [[nodiscard]] double lon_max() const { return origin_.lon + cols_ * cell_; }

  [[nodiscard]] bool contains(const GeoPoint& p) const {
    return p.lat >= lat_min() && p.lat <= lat_max() && p.lon >= lon_min() &&
           p.lon <= lon_max();
  }

  void require_inside(const GeoPoint& p) const {
    if (!std::isfinite(p.lat) || !std::isfinite(p.lon))
      throw InvalidCoordinateError("non-finite coordinate");
    if (!contains(p)) {
      std::ostringstream os;
      os << std::setprecision(9) << "point (" << p.lat << ", " << p.lon
         << ") outside bathymetry bounds";
      throw RangeError(os.str());
    }
  }

  /// Row/column of the cell containing `p` (edges clamp inward).
  [[nodiscard]] std::pair<int, int> cell_of(const GeoPoint& p) const {
    int r = static_cast<int>(std::floor((p.lat - origin_.lat) / cell_));
    int c = static_cast<int>(std::floor((p.lon - origin_.lon) / cell_));
    return {std::clamp(r, 0, rows_ - 1), std::clamp(c, 0, cols_ - 1)};
  }

  [[nodiscard]] std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * cols_ + col;
  }

private:
  GeoPoint origin_{};
  double cell_ = 1.0;
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> depth_;
};

/// Bilinear depth between the four nodes surrounding `p`.
inline double depth_at(const BathymetryGrid& grid, const GeoPoint& p) {
  grid.require_inside(p);
  const double fr = std::clamp((p.lat - grid.origin().lat) / grid.cell_size() -
                                   0.5,
                               0.0, static_cast<double>(grid.rows() - 1));
  const double fc = std::clamp((p.lon - grid.origin().lon) / grid.cell_size() -
                                   0.5,
                               0.0, static_cast<double>(grid.cols() - 1));
  const int r0 = std::min(static_cast<int>(fr), std::max(grid.rows() - 2, 0));
  const int c0 = std::min(static_cast<int>(fc), std::max(grid.cols() - 2, 0));
  const int r1 = std::min(r0 + 1, grid.rows() - 1);
  const int c1 = std::min(c0 + 1, grid.cols() - 1);
  const double tr = fr - r0, tc = fc - c0;
  const double south = grid.at(r0, c0) * (1 - tc) + grid.at(r0, c1) * tc;
  const double north = grid.at(r1, c0) * (1 - tc) + grid.at(r1, c1) * tc;
  return south * (1 - tr) + north * tr;
}

/// Grid-aligned land and lane layers. A cell is never both.
class RegionMask {
public:
  RegionMask() = default;

  /// Land from negative grid depth; lanes from `lane` (row-major, row 0
  /// south) or every water cell when `lane` is empty.
  static RegionMask from_grid(const BathymetryGrid& grid,
                              const std::vector<std::uint8_t>& lane = {}) {
    const std::size_t n = grid.values().size();
    if (!lane.empty() && lane.size() != n)
      throw ShapeError("lane mask shape does not match bathymetry grid");
    RegionMask m;
    m.rows_ = grid.rows();
    m.cols_ = grid.cols();
    m.land_.resize(n);
    m.lane_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      m.land_[i] = grid.values()[i] < 0.0 ? 1 : 0;
      m.lane_[i] = (!m.land_[i] && (lane.empty() || lane[i] != 0)) ? 1 : 0;
    }
    return m;
  }

  [[nodiscard]] int rows() const { return rows_; }
  [[nodiscard]] int cols() const { return cols_; }
  [[nodiscard]] bool is_land(std::size_t i) const { return land_[i] != 0; }
  [[nodiscard]] bool is_lane(std::size_t i) const { return lane_[i] != 0; }
  [[nodiscard]] const std::vector<std::uint8_t>& land() const { return land_; }
  [[nodiscard]] const std::vector<std::uint8_t>& lane() const { return lane_; }

private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::uint8_t> land_;
  std::vector<std::uint8_t> lane_;
};

inline bool is_land_at(const BathymetryGrid& grid, const GeoPoint& p) {
  const auto [r, c] = grid.cell_of(p);
  return grid.at(r, c) < 0.0;
}

inline bool is_navigable(const GeoPoint& p, const RegionMask& mask,
                         const BathymetryGrid& grid, double min_depth_m) {
  grid.require_inside(p);
  if (mask.rows() != grid.rows() || mask.cols() != grid.cols())
    throw ShapeError("mask and grid dimensions differ");
  const auto [r, c] = grid.cell_of(p);
  const std::size_t i = grid.index(r, c);
  return mask.is_lane(i) && !mask.is_land(i) &&
         depth_at(grid, p) >= min_depth_m;
}

inline constexpr double kLosStepM = 250.0;

/// Fraction of evenly spaced samples (spacing <= 250 m, endpoints included)
/// on the segment src-rcv that fall in land cells. Endpoints are put in a
/// canonical order first so the result is exactly symmetric.
inline double blocked_fraction(const GeoPoint& src, const GeoPoint& rcv,
                               const BathymetryGrid& grid) {
  grid.require_inside(src);
  grid.require_inside(rcv);
  const bool swap = std::tie(src.lat, src.lon) > std::tie(rcv.lat, rcv.lon);
  const GeoPoint& a = swap ? rcv : src;
  const GeoPoint& b = swap ? src : rcv;
  const double d = surface_distance_m(a, b);
  const int n = static_cast<int>(std::ceil(d / kLosStepM)) + 1;
  if (n <= 1) return is_land_at(grid, a) ? 1.0 : 0.0;
  int land = 0;
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    const GeoPoint s{a.lat + (b.lat - a.lat) * t, a.lon + (b.lon - a.lon) * t,
                     0.0};
    land += is_land_at(grid, s) ? 1 : 0;
  }
  return static_cast<double>(land) / n;
}

// ---------------------------------------------------------------------------
// ESRI ASCII raster I/O. Files store the northern row first; in memory row 0
// is south. NODATA cells are read as land (-1 m).

namespace detail {

inline std::map<std::string, double> read_esri_header(std::istream& in,
                                                      double& first_value,
                                                      bool& have_first) {
  std::map<std::string, double> header;
  std::string token;
  have_first = false;
  while (in >> token) {
    std::string key = token;
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char ch) { return std::tolower(ch); });
    if (std::isalpha(static_cast<unsigned char>(key[0]))) {
      double v = 0.0;
      if (!(in >> v)) throw IoError("ESRI grid: missing value for " + token);
      header[key] = v;
    } else {
      first_value = std::stod(token);
      have_first = true;
      break;
    }
  }
  return header;
}

} // namespace detail

inline std::vector<double> read_esri_values(std::istream& in, int& rows,
                                            int& cols, GeoPoint& sw,
                                            double& cell) {
  double first = 0.0;
  bool have_first = false;
  auto h = detail::read_esri_header(in, first, have_first);
  for (const char* k : {"ncols", "nrows", "xllcorner", "yllcorner",
                        "cellsize"})
    if (!h.count(k)) throw IoError(std::string("ESRI grid: missing ") + k);
  cols = static_cast<int>(h["ncols"]);
  rows = static_cast<int>(h["nrows"]);
  sw = {h["yllcorner"], h["xllcorner"], 0.0};
  cell = h["cellsize"];
  const bool has_nodata = h.count("nodata_value") != 0;
  const double nodata = has_nodata ? h["nodata_value"] : 0.0;
  if (rows <= 0 || cols <= 0) throw IoError("ESRI grid: empty raster");
  std::vector<double> file_order;
  file_order.reserve(static_cast<std::size_t>(rows) * cols);
  if (have_first) file_order.push_back(first);
  double v = 0.0;
  while (file_order.size() < static_cast<std::size_t>(rows) * cols && in >> v)
    file_order.push_back(v);
  if (file_order.size() != static_cast<std::size_t>(rows) * cols)
    throw IoError("ESRI grid: expected " + std::to_string(rows * cols) +
                  " values, read " + std::to_string(file_order.size()));
  std::vector<double> out(file_order.size());
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double x = file_order[static_cast<std::size_t>(rows - 1 - r) * cols + c];
      if (has_nodata && x == nodata) x = -1.0;
      out[static_cast<std::size_t>(r) * cols + c] = x;
    }
  return out;
}

inline BathymetryGrid load_bathymetry(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open bathymetry file " + path);
  int rows = 0, cols = 0;
  GeoPoint sw;
  double cell = 0.0;
  auto values = read_esri_values(in, rows, cols, sw, cell);
  return BathymetryGrid(sw, cell, rows, cols, std::move(values));
}

/// Reads a 0/1 raster in the same layout as the bathymetry file.
inline std::vector<std::uint8_t> load_mask_layer(const std::string& path,
                                                 const BathymetryGrid& grid) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mask file " + path);
  int rows = 0, cols = 0;
  GeoPoint sw;
  double cell = 0.0;
  auto values = read_esri_values(in, rows, cols, sw, cell);
  if (rows != grid.rows() || cols != grid.cols())
    throw ShapeError("mask " + path + " shape differs from bathymetry");
  std::vector<std::uint8_t> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    out[i] = values[i] > 0.5 ? 1 : 0;
  return out;
}

template <typename T>
void write_esri_ascii(std::ostream& out, const GeoPoint& sw, double cell,
                      int rows, int cols, const std::vector<T>& row_major,
                      int precision = 3) {
  out << "ncols " << cols << "\nnrows " << rows << "\n"
      << std::setprecision(12) << "xllcorner " << sw.lon << "\nyllcorner "
      << sw.lat << "\ncellsize " << cell << "\nNODATA_value -9999\n";
  out << std::fixed << std::setprecision(precision);
  for (int r = rows - 1; r >= 0; --r) {
    for (int c = 0; c < cols; ++c) {
      if (c) out << ' ';
      out << row_major[static_cast<std::size_t>(r) * cols + c];
    }
    out << '\n';
  }
  out.unsetf(std::ios::fixed);
}

} // namespace qv
