#pragma once

// Ship underwater radiated noise source levels per decidecade band (JE-type
// regression model: baseline spectrum plus speed and length corrections).

#include "quietvoyage/errors.hpp"
#include "quietvoyage/units.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace qv {

inline constexpr std::size_t kBandCount = 30;
using BandLevels = std::array<double, kBandCount>;

/// Nominal decidecade centre frequencies, 12.5 Hz to 10 kHz.
inline constexpr BandLevels kBandCentersHz = {
    12.5, 16,   20,   25,   31.5, 40,   50,   63,   80,   100,
    125,  160,  200,  250,  315,  400,  500,  630,  800,  1000,
    1250, 1600, 2000, 2500, 3150, 4000, 5000, 6300, 8000, 10000};

/// Reported alongside every spectrum; never added to computed levels.
inline constexpr double kSourceModelUncertaintyDb = 6.0;

enum class ShipClass {
  Fishing,
  Tug,
  Naval,
  Recreational,
  GovernmentResearch,
  Cruise,
  Passenger,
  Bulker,
  Containership,
  VehicleCarrier,
  Tanker,
  Dredger,
  Other
};

inline constexpr std::array<std::pair<ShipClass, std::string_view>, 13>
    kShipClassNames = {{{ShipClass::Fishing, "Fishing"},
                        {ShipClass::Tug, "Tug"},
                        {ShipClass::Naval, "Naval"},
                        {ShipClass::Recreational, "Recreational"},
                        {ShipClass::GovernmentResearch, "GovernmentResearch"},
                        {ShipClass::Cruise, "Cruise"},
                        {ShipClass::Passenger, "Passenger"},
                        {ShipClass::Bulker, "Bulker"},
                        {ShipClass::Containership, "Containership"},
                        {ShipClass::VehicleCarrier, "VehicleCarrier"},
                        {ShipClass::Tanker, "Tanker"},
                        {ShipClass::Dredger, "Dredger"},
                        {ShipClass::Other, "Other"}}};

inline std::string_view to_string(ShipClass c) {
  for (const auto& [k, name] : kShipClassNames)
    if (k == c) return name;
  return "Other";
}

inline std::optional<ShipClass> ship_class_from_string(std::string_view s) {
  for (const auto& [k, name] : kShipClassNames)
    if (name == s) return k;
  return std::nullopt;
}

struct ShipSpec {
  std::string name;
  int ais_type_id = 0;
  ShipClass ship_class = ShipClass::Other;
  double length_ft = 300.0;
  double v_min_kt = 1.0;
  double v_max_kt = 20.0;

  void validate() const {
    if (!(length_ft > 0.0)) throw DomainError("ship length must be positive");
    if (!(v_min_kt > 0.0) || !(v_min_kt <= v_max_kt))
      throw DomainError("ship speed limits must satisfy 0 < v_min <= v_max");
  }

  friend bool operator==(const ShipSpec&, const ShipSpec&) = default;
};

/// Reference speed v_T in knots for a ship class.
inline constexpr double reference_speed(ShipClass c) {
  switch (c) {
  case ShipClass::Fishing: return 6.4;
  case ShipClass::Tug: return 3.7;
  case ShipClass::Naval: return 11.1;
  case ShipClass::Recreational: return 10.6;
  case ShipClass::GovernmentResearch: return 8.0;
  case ShipClass::Cruise: return 17.1;
  case ShipClass::Passenger: return 9.7;
  case ShipClass::Bulker: return 13.9;
  case ShipClass::Containership: return 18.0;
  case ShipClass::VehicleCarrier: return 15.8;
  case ShipClass::Tanker: return 12.4;
  case ShipClass::Dredger: return 9.5;
  case ShipClass::Other: return 7.4;
  }
  return 7.4;
}

/// Class implied by an AIS ship-type id. IDs 70 and 75-79 are shared by bulk
/// carriers and container ships; they resolve to Bulker only when a service
/// speed <= 16 kt is supplied, otherwise to Containership. Vehicle carriers
/// have no AIS id and must be given explicitly.
inline ShipClass classify_ais(int ais_type_id, double length_ft,
                              std::optional<double> service_speed_kt = {}) {
  const int id = ais_type_id;
  if (id == 30) return ShipClass::Fishing;
  if (id == 31 || id == 32 || id == 52) return ShipClass::Tug;
  if (id == 33) return ShipClass::Dredger;
  if (id == 35) return ShipClass::Naval;
  if (id == 36 || id == 37) return ShipClass::Recreational;
  if (id == 51 || id == 53 || id == 55) return ShipClass::GovernmentResearch;
  if (id >= 60 && id <= 69)
    return units::ft_to_m(length_ft) > 100.0 ? ShipClass::Cruise
                                             : ShipClass::Passenger;
  if (id >= 71 && id <= 74) return ShipClass::Containership;
  if (id == 70 || (id >= 75 && id <= 79))
    return (service_speed_kt && *service_speed_kt <= 16.0)
               ? ShipClass::Bulker
               : ShipClass::Containership;
  if (id >= 80 && id <= 89) return ShipClass::Tanker;
  return ShipClass::Other;
}

inline double reference_speed(int ais_type_id, double length_ft) {
  return reference_speed(classify_ais(ais_type_id, length_ft));
}

inline constexpr bool is_cargo(ShipClass c) {
  return c == ShipClass::Containership || c == ShipClass::VehicleCarrier ||
         c == ShipClass::Bulker || c == ShipClass::Tanker;
}

/// Baseline spectrum NLS_0 in dB re 1 uPa m at frequency `f_hz`.
inline double baseline_spectrum(double f_hz, ShipClass c) {
  if (!(f_hz > 0.0) || !std::isfinite(f_hz))
    throw DomainError("baseline_spectrum: frequency must be positive");
  const double vt = reference_speed(c);
  if (is_cargo(c) && f_hz < 100.0) {
    const double f1 = 600.0 / vt;
    const double d = (c == ShipClass::Containership || c == ShipClass::Bulker)
                         ? 0.8
                         : 1.0;
    const double ratio = f_hz / f1;
    const double q = 1.0 - ratio * ratio;
    return 208.0 - 40.0 * std::log10(ratio) + 10.0 * std::log10(f_hz) -
           10.0 * std::log10(q * q + d * d);
  }
  const double f1 = 480.0 / vt;
  const double d = c == ShipClass::Cruise ? 4.0 : 3.0;
  const double ratio = f_hz / f1;
  const double q = 1.0 - ratio * ratio;
  return 191.0 - 20.0 * std::log10(f1) - 10.0 * std::log10(q * q + d * d);
}

inline constexpr double kReferenceLengthFt = 300.0;

/// Source level in dB re 1 uPa m at `f_hz` for speed `v_kt` and length
/// `length_ft`.
inline double source_level(double f_hz, double v_kt, double length_ft,
                           ShipClass c) {
  if (!(v_kt > 0.0)) throw DomainError("source_level: speed must be positive");
  if (!(length_ft > 0.0))
    throw DomainError("source_level: length must be positive");
  return baseline_spectrum(f_hz, c) +
         60.0 * std::log10(v_kt / reference_speed(c)) +
         20.0 * std::log10(length_ft / kReferenceLengthFt);
}

struct SourceSpectrum {
  BandLevels level_db{};
  double speed_kt = 0.0;
};

inline SourceSpectrum source_spectrum(double v_kt, double length_ft,
                                      ShipClass c) {
  SourceSpectrum s;
  s.speed_kt = v_kt;
  for (std::size_t b = 0; b < kBandCount; ++b)
    s.level_db[b] = source_level(kBandCentersHz[b], v_kt, length_ft, c);
  return s;
}

/// Power sum 10 log10(sum 10^(L/10)). Entries at -inf contribute nothing.
inline double broadband_level(std::span<const double> levels_db) {
  if (levels_db.empty()) throw DomainError("broadband_level: no bands");
  double hi = -std::numeric_limits<double>::infinity();
  for (double l : levels_db) {
    if (std::isnan(l)) throw DomainError("broadband_level: NaN band level");
    hi = std::max(hi, l);
  }
  if (!std::isfinite(hi)) return hi;
  double sum = 0.0;
  for (double l : levels_db) sum += std::pow(10.0, (l - hi) / 10.0);
  return hi + 10.0 * std::log10(sum);
}

} // namespace qv
