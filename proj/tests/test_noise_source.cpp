#include "quietvoyage/noise_source.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace qv;

TEST(ReferenceSpeed, AppendixTableRows) {
  const std::pair<ShipClass, double> rows[] = {
      {ShipClass::Fishing, 6.4},       {ShipClass::Tug, 3.7},
      {ShipClass::Naval, 11.1},        {ShipClass::Recreational, 10.6},
      {ShipClass::GovernmentResearch, 8.0}, {ShipClass::Cruise, 17.1},
      {ShipClass::Passenger, 9.7},     {ShipClass::Bulker, 13.9},
      {ShipClass::Containership, 18.0}, {ShipClass::VehicleCarrier, 15.8},
      {ShipClass::Tanker, 12.4},       {ShipClass::Other, 7.4},
      {ShipClass::Dredger, 9.5}};
  for (const auto& [c, v] : rows) EXPECT_EQ(reference_speed(c), v) << to_string(c);
}

TEST(ReferenceSpeed, AisIds) {
  EXPECT_EQ(reference_speed(30, 100.0), 6.4);
  EXPECT_EQ(reference_speed(85, 600.0), 12.4);
  EXPECT_EQ(reference_speed(999, 100.0), 7.4);
  EXPECT_EQ(reference_speed(52, 80.0), 3.7);
  EXPECT_EQ(reference_speed(33, 200.0), 9.5);
  // 60-69 split on 100 m (328.08 ft).
  EXPECT_EQ(classify_ais(65, 400.0), ShipClass::Cruise);
  EXPECT_EQ(classify_ais(65, 300.0), ShipClass::Passenger);
  // Shared bulker/container ids.
  EXPECT_EQ(classify_ais(70, 600.0), ShipClass::Containership);
  EXPECT_EQ(classify_ais(77, 600.0, 14.0), ShipClass::Bulker);
  EXPECT_EQ(classify_ais(77, 600.0, 19.0), ShipClass::Containership);
  EXPECT_EQ(classify_ais(72, 600.0, 14.0), ShipClass::Containership);
}

TEST(ReferenceSpeed, TotalOverIds) {
  for (int id = -5; id < 200; ++id) {
    const double v = reference_speed(id, 300.0);
    EXPECT_GT(v, 0.0);
  }
}

TEST(ShipClassNames, RoundTrip) {
  for (const auto& [c, name] : kShipClassNames) {
    EXPECT_EQ(to_string(c), name);
    EXPECT_EQ(ship_class_from_string(name), c);
  }
  EXPECT_FALSE(ship_class_from_string("Submarine"));
}

TEST(BaselineSpectrum, OtherAtCornerFrequency) {
  EXPECT_NEAR(baseline_spectrum(480.0 / 7.4, ShipClass::Other), 145.21738455271452, 1e-9);
}

TEST(BaselineSpectrum, ContainershipLowFrequencyBranch) {
  EXPECT_NEAR(baseline_spectrum(50.0, ShipClass::Containership), 214.5168905102921, 1e-9);
}

TEST(BaselineSpectrum, RealValuedAboveCorner) {
  for (double f : kBandCentersHz)
    for (const auto& [c, name] : kShipClassNames)
      EXPECT_TRUE(std::isfinite(baseline_spectrum(f, c))) << name << " " << f;
  EXPECT_THROW(baseline_spectrum(0.0, ShipClass::Other), DomainError);
}

TEST(BaselineSpectrum, DependsOnlyOnReferenceSpeedAndD) {
  // Naval and Recreational differ only in v_T, so the curves coincide once
  // f is rescaled by the v_T ratio, up to the -20 log10(f1) term.
  const double r = 11.1 / 10.6;
  for (double f : {200.0, 500.0, 2000.0})
    EXPECT_NEAR(baseline_spectrum(f, ShipClass::Recreational) -
                    baseline_spectrum(f / r, ShipClass::Naval),
                -20.0 * std::log10(r), 1e-9);
  // Bulker and Containership share D = 0.8; at equal f/f1 the same holds.
  const double q = 18.0 / 13.9;
  EXPECT_NEAR(baseline_spectrum(40.0, ShipClass::Bulker) -
                  baseline_spectrum(40.0 / q, ShipClass::Containership),
              10.0 * std::log10(q), 1e-9);
}

TEST(SourceLevel, ReferenceStateEqualsBaseline) {
  for (double f : kBandCentersHz)
    EXPECT_DOUBLE_EQ(source_level(f, 13.9, 300.0, ShipClass::Bulker),
                     baseline_spectrum(f, ShipClass::Bulker));
}

TEST(SourceLevel, SpeedAndLengthLaws) {
  for (const auto& [c, name] : kShipClassNames) {
    const double vt = reference_speed(c);
    for (double f : kBandCentersHz) {
      EXPECT_NEAR(source_level(f, 2 * vt, 300, c) - source_level(f, vt, 300, c),
                  18.061799739838870, 1e-9);
      EXPECT_NEAR(source_level(f, vt, 600, c) - source_level(f, vt, 300, c),
                  6.0205999132796239, 1e-9);
      EXPECT_NEAR(source_level(f, 1.7 * vt, 450, c) - source_level(f, vt, 450, c),
                  60.0 * std::log10(1.7), 1e-9);
    }
  }
  EXPECT_THROW(source_level(100, 0.0, 300, ShipClass::Other), DomainError);
  EXPECT_THROW(source_level(100, 10.0, -1, ShipClass::Other), DomainError);
}

TEST(BroadbandLevel, PowerSums) {
  const double ninf = -std::numeric_limits<double>::infinity();
  std::vector<double> one(30, ninf);
  one[4] = 100.0;
  EXPECT_DOUBLE_EQ(broadband_level(one), 100.0);
  one[9] = 100.0;
  EXPECT_NEAR(broadband_level(one), 103.0103, 1e-4);
  std::vector<double> all(30, 100.0);
  EXPECT_NEAR(broadband_level(all), 114.7712, 1e-4);
  EXPECT_THROW(broadband_level(std::vector<double>{}), DomainError);
}

TEST(BroadbandLevel, BoundedByMaxBand) {
  const auto s = source_spectrum(12.0, 684.97, ShipClass::Other);
  const double hi = *std::max_element(s.level_db.begin(), s.level_db.end());
  const double bb = broadband_level(s.level_db);
  EXPECT_GE(bb, hi);
  EXPECT_LE(bb, hi + 10.0 * std::log10(30.0));
}
