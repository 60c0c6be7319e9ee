#pragma once

// Simulated marine mammals: Gaussian kernel density fits of sightings and
// dive depths, sampling from them, and straight-line drift with a simple
// coastline reflection.

#include "quietvoyage/errors.hpp"
#include "quietvoyage/geo_env.hpp"
#include "quietvoyage/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace qv {

struct KdeModel {
  std::vector<std::vector<double>> points; // n x d
  std::vector<double> weights;             // n, sums to 1
  std::vector<double> bandwidth;           // d, all > 0

  [[nodiscard]] std::size_t size() const { return points.size(); }
  [[nodiscard]] std::size_t dims() const { return bandwidth.size(); }
};

enum class BandwidthRule { Scott, Fixed };

struct BandwidthOptions {
  BandwidthRule rule = BandwidthRule::Scott;
  double fixed = 1.0;
  /// Used per dimension when the sample spread is zero (n = 1 or constant
  /// data), where Scott's rule would give h = 0.
  double floor = 1e-3;
};

/// Scott's rule: h_j = n^(-1/(d+4)) * sample std of dimension j.
inline KdeModel kde_fit(const std::vector<std::vector<double>>& data,
                        const BandwidthOptions& bw = {},
                        std::vector<double> weights = {}) {
  if (data.empty()) throw InsufficientDataError("kde_fit: empty data");
  const std::size_t n = data.size();
  const std::size_t d = data.front().size();
  if (d == 0) throw InsufficientDataError("kde_fit: zero-dimensional data");
  for (const auto& p : data) {
    if (p.size() != d) throw ShapeError("kde_fit: ragged data");
    for (double v : p)
      if (!std::isfinite(v)) throw DomainError("kde_fit: non-finite value");
  }
  if (weights.empty()) weights.assign(n, 1.0);
  if (weights.size() != n) throw ShapeError("kde_fit: weight count mismatch");
  double wsum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw DomainError("kde_fit: weights must be finite and >= 0");
    wsum += w;
  }
  if (!(wsum > 0.0)) throw DomainError("kde_fit: weights sum to zero");
  for (double& w : weights) w /= wsum;

  KdeModel m;
  m.points = data;
  m.weights = std::move(weights);
  m.bandwidth.resize(d);
  const double factor =
      std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(d) + 4.0));
  for (std::size_t j = 0; j < d; ++j) {
    if (bw.rule == BandwidthRule::Fixed) {
      m.bandwidth[j] = bw.fixed;
      continue;
    }
    double mean = 0.0;
    for (const auto& p : data) mean += p[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& p : data) var += (p[j] - mean) * (p[j] - mean);
    const double sd = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
    m.bandwidth[j] = sd > 0.0 ? factor * sd : bw.floor;
  }
  for (double h : m.bandwidth)
    if (!(h > 0.0)) throw DomainError("kde_fit: bandwidth must be positive");
  return m;
}

/// Product-Gaussian density estimate at `x`.
inline double kde_pdf(const KdeModel& m, std::span<const double> x) {
  if (x.size() != m.dims()) throw ShapeError("kde_pdf: dimension mismatch");
  const double norm1 = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  double hprod = 1.0;
  for (double h : m.bandwidth) hprod *= h;
  double sum = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    double q = 0.0;
    for (std::size_t j = 0; j < m.dims(); ++j) {
      const double u = (x[j] - m.points[i][j]) / m.bandwidth[j];
      q += u * u;
    }
    sum += m.weights[i] * std::exp(-0.5 * q);
  }
  return sum * std::pow(norm1, static_cast<double>(m.dims())) / hprod;
}

inline constexpr int kMaxRejections = 1000;

/// Smoothed bootstrap: pick a data point by weight, add N(0, h^2) noise.
/// Points failing `accept` are redrawn, at most 1000 times each.
template <typename Rng>
std::vector<std::vector<double>>
kde_sample(const KdeModel& m, std::size_t count, Rng& rng,
           const std::function<bool(const std::vector<double>&)>& accept = {},
           const std::string& region_name = "accepted region") {
  std::vector<std::vector<double>> out;
  out.reserve(count);
  std::discrete_distribution<std::size_t> pick(m.weights.begin(),
                                               m.weights.end());
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t k = 0; k < count; ++k) {
    bool ok = false;
    for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
      const auto& base = m.points[pick(rng)];
      std::vector<double> x(m.dims());
      for (std::size_t j = 0; j < m.dims(); ++j)
        x[j] = base[j] + m.bandwidth[j] * noise(rng);
      if (!accept || accept(x)) {
        out.push_back(std::move(x));
        ok = true;
        break;
      }
    }
    if (!ok)
      throw SamplingError("kde_sample: 1000 consecutive draws rejected by " +
                          region_name);
  }
  return out;
}

struct MammalState {
  int id = 0;
  GeoPoint position{};  // depth = static receiver depth
  double speed_kt = 0.0;
  double heading_deg = 0.0; // true, clockwise from north

  friend bool operator==(const MammalState&, const MammalState&) = default;
};

inline double normalize_heading(double deg) {
  double h = std::fmod(deg, 360.0);
  if (h < 0.0) h += 360.0;
  return h;
}

/// Mask whose "lane" layer is every water cell.
inline RegionMask water_mask(const BathymetryGrid& grid) {
  return RegionMask::from_grid(grid);
}

struct MammalSpeedRange {
  double min_kt = 0.5;
  double max_kt = 2.5;
};

/// Samples `count` mammals. Positions come from `pos_model` (lat, lon) and
/// must pass is_navigable under `mask`; mammals are not bound to shipping
/// lanes, so callers normally pass water_mask(grid). Depths come from
/// `depth_model`, clamped to [0, 100] m. Ids run 1..count.
template <typename Rng>
std::vector<MammalState>
init_population(std::size_t count, const KdeModel& pos_model,
                const KdeModel& depth_model, Rng& rng,
                const BathymetryGrid& grid, const RegionMask& mask,
                MammalSpeedRange speeds = {}) {
  if (count < 1) throw DomainError("init_population: count must be >= 1");
  if (pos_model.dims() != 2 || depth_model.dims() != 1)
    throw ShapeError("init_population: expected 2-D position and 1-D depth");
  auto in_water = [&](const std::vector<double>& x) {
    const GeoPoint p{x[0], x[1], 0.0};
    return grid.contains(p) && is_navigable(p, mask, grid, 0.0);
  };
  const auto pos = kde_sample(pos_model, count, rng, in_water, "water mask");
  const auto depth = kde_sample(depth_model, count, rng);
  std::uniform_real_distribution<double> speed(speeds.min_kt, speeds.max_kt);
  std::uniform_real_distribution<double> heading(0.0, 360.0);
  std::vector<MammalState> out;
  for (std::size_t i = 0; i < count; ++i) {
    MammalState s;
    s.id = static_cast<int>(i + 1);
    s.position = {pos[i][0], pos[i][1],
                  std::clamp(depth[i][0], 0.0, kMaxReceiverDepthM)};
    s.speed_kt = speed(rng);
    s.heading_deg = heading(rng);
    out.push_back(s);
  }
  return out;
}

namespace detail {
inline bool water_ok(const GeoPoint& p, const BathymetryGrid& grid,
                     const RegionMask& mask) {
  return grid.contains(p) && is_navigable(p, mask, grid, 0.0);
}
} // namespace detail

/// Advances one mammal along its heading for `dt_h` hours. A blocked move
/// mirrors the heading across whichever axis is blocked (both: reverse) and
/// retries once; if that is blocked too the mammal holds position.
inline MammalState step_trajectory(const MammalState& s, double dt_h,
                                   const BathymetryGrid& grid,
                                   const RegionMask& mask) {
  if (!(dt_h > 0.0)) throw DomainError("step_trajectory: dt must be positive");
  if (s.speed_kt <= 0.0) return s;
  const double dist = units::kt_to_mph(s.speed_kt) * dt_h;
  auto move = [&](double heading, double fx, double fy) {
    const double th = heading * units::deg2rad;
    return from_planar({fx * dist * std::sin(th), fy * dist * std::cos(th)},
                       s.position, s.position.depth);
  };
  MammalState next = s;
  const GeoPoint first = move(s.heading_deg, 1, 1);
  if (detail::water_ok(first, grid, mask)) {
    next.position = first;
    return next;
  }
  const bool x_blocked = !detail::water_ok(move(s.heading_deg, 1, 0), grid, mask);
  const bool y_blocked = !detail::water_ok(move(s.heading_deg, 0, 1), grid, mask);
  double h = s.heading_deg;
  if (x_blocked && !y_blocked)
    h = 360.0 - h;
  else if (y_blocked && !x_blocked)
    h = 180.0 - h;
  else
    h = h + 180.0;
  next.heading_deg = normalize_heading(h);
  const GeoPoint second = move(next.heading_deg, 1, 1);
  if (detail::water_ok(second, grid, mask)) next.position = second;
  return next;
}

/// Positions of every mammal at each of `times_h` (hours after now, non-
/// decreasing), stepping with increments of at most `step_h`.
inline std::vector<std::vector<MammalState>>
forecast_mammals(const std::vector<MammalState>& now,
                 const std::vector<double>& times_h, double step_h,
                 const BathymetryGrid& grid, const RegionMask& mask) {
  std::vector<std::vector<MammalState>> out;
  out.reserve(times_h.size());
  std::vector<MammalState> cur = now;
  double t = 0.0;
  for (double target : times_h) {
    while (t < target - 1e-12) {
      const double h = std::min(step_h, target - t);
      for (auto& m : cur) m = step_trajectory(m, h, grid, mask);
      t += h;
    }
    out.push_back(cur);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Input files

namespace detail {
inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    cell.erase(0, cell.find_first_not_of(" \t\r"));
    cell.erase(cell.find_last_not_of(" \t\r") + 1);
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}
inline bool looks_numeric(const std::string& s) {
  if (s.empty()) return false;
  char* end = nullptr;
  std::strtod(s.c_str(), &end);
  return end && *end == '\0';
}
} // namespace detail

struct Sightings {
  std::vector<std::vector<double>> latlon;
  std::vector<double> weight;
};

/// Sightings CSV: lat, lon[, weight]; an optional header line is skipped.
inline Sightings load_sightings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open sightings file " + path);
  Sightings s;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = detail::split_csv(line);
    if (lineno == 1 && !detail::looks_numeric(cells[0])) continue;
    if (cells.size() < 2)
      throw IoError(path + ":" + std::to_string(lineno) + ": need lat,lon");
    s.latlon.push_back({std::stod(cells[0]), std::stod(cells[1])});
    s.weight.push_back(cells.size() > 2 && !cells[2].empty()
                           ? std::stod(cells[2])
                           : 1.0);
  }
  return s;
}

/// Depth CSV: one max_depth_m value per line, optional header.
inline std::vector<std::vector<double>> load_depths(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open depth file " + path);
  std::vector<std::vector<double>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = detail::split_csv(line);
    if (lineno == 1 && !detail::looks_numeric(cells[0])) continue;
    out.push_back({std::stod(cells[0])});
  }
  return out;
}

} // namespace qv
