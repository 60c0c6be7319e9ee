#pragma once

#include <numbers>

namespace qv::units {

inline constexpr double earth_radius_m = 6'371'000.0;
inline constexpr double meters_per_nm = 1852.0;
inline constexpr double meters_per_ft = 0.3048;
inline constexpr double deg2rad = std::numbers::pi / 180.0;
inline constexpr double rad2deg = 180.0 / std::numbers::pi;

inline constexpr double nm_to_m(double nm) { return nm * meters_per_nm; }
inline constexpr double m_to_nm(double m) { return m / meters_per_nm; }
inline constexpr double ft_to_m(double ft) { return ft * meters_per_ft; }
inline constexpr double m_to_ft(double m) { return m / meters_per_ft; }

/// Knots to meters per hour.
inline constexpr double kt_to_mph(double kt) { return kt * meters_per_nm; }

} // namespace qv::units
