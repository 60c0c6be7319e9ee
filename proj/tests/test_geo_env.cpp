#include "support.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace qv;

namespace {

BathymetryGrid flat(double depth, int rows = 4, int cols = 4) {
  return {GeoPoint{48.0, -123.0, 0.0}, 0.01, rows, cols,
          std::vector<double>(static_cast<std::size_t>(rows * cols), depth)};
}

} // namespace

TEST(Projection, ReferenceMapsToOrigin) {
  const GeoPoint ref{48.6, -123.3, 0.0};
  const auto q = to_planar(ref, ref);
  EXPECT_EQ(q.x, 0.0);
  EXPECT_EQ(q.y, 0.0);
}

TEST(Projection, OneDegreeNorthAtEquator) {
  const auto q = to_planar({1.0, 0.0, 0.0}, {0.0, 0.0, 0.0});
  EXPECT_NEAR(q.y, 111195.0, 1.0);
  EXPECT_NEAR(q.x, 0.0, 1e-9);
}

TEST(Projection, RoundTripThousandPoints) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> dlat(-1.0, 1.0), dlon(-1.0, 1.0);
  const GeoPoint ref{48.6, -123.3, 0.0};
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const GeoPoint p{ref.lat + dlat(rng), ref.lon + dlon(rng), 0.0};
    const auto back = from_planar(to_planar(p, ref), ref);
    worst = std::max({worst, std::abs(back.lat - p.lat), std::abs(back.lon - p.lon)});
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(Projection, RejectsNonFiniteAndPolar) {
  EXPECT_THROW(to_planar({NAN, 0, 0}, {0, 0, 0}), InvalidCoordinateError);
  EXPECT_THROW(to_planar({89.5, 0, 0}, {0, 0, 0}), InvalidCoordinateError);
}

TEST(DepthAt, NodeValueAndConstantField) {
  const auto g = flat(100.0);
  EXPECT_DOUBLE_EQ(depth_at(g, {g.node_lat(1), g.node_lon(2), 0}), 100.0);
  EXPECT_DOUBLE_EQ(depth_at(g, {48.0123, -122.9877, 0}), 100.0);
}

TEST(DepthAt, BilinearCellCentre) {
  // South nodes 100 m, north nodes 200 m: halfway between them is 150 m.
  const BathymetryGrid g({48.0, -123.0, 0.0}, 0.01, 2, 2, {100, 100, 200, 200});
  const GeoPoint mid{0.5 * (g.node_lat(0) + g.node_lat(1)),
                     0.5 * (g.node_lon(0) + g.node_lon(1)), 0};
  EXPECT_NEAR(depth_at(g, mid), 150.0, 1e-9);
}

TEST(DepthAt, BoundedBySurroundingNodes) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-30.0, 300.0);
  std::vector<double> v(36);
  for (auto& x : v) x = d(rng);
  const BathymetryGrid g({48.0, -123.0, 0.0}, 0.01, 6, 6, v);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const GeoPoint p{g.node_lat(0) + u(rng) * 0.05, g.node_lon(0) + u(rng) * 0.05, 0};
    const int r = std::min(static_cast<int>((p.lat - g.node_lat(0)) / 0.01), 4);
    const int c = std::min(static_cast<int>((p.lon - g.node_lon(0)) / 0.01), 4);
    const double lo = std::min({g.at(r, c), g.at(r + 1, c), g.at(r, c + 1), g.at(r + 1, c + 1)});
    const double hi = std::max({g.at(r, c), g.at(r + 1, c), g.at(r, c + 1), g.at(r + 1, c + 1)});
    const double z = depth_at(g, p);
    EXPECT_GE(z, lo - 1e-9);
    EXPECT_LE(z, hi + 1e-9);
  }
}

TEST(DepthAt, OutsideGridThrows) {
  const auto g = flat(50.0);
  EXPECT_THROW(depth_at(g, {47.0, -123.0, 0}), RangeError);
}

TEST(Navigable, LandLaneAndDepth) {
  std::vector<double> v{200, 200, 10, -5};
  const BathymetryGrid g({48.0, -123.0, 0.0}, 0.01, 2, 2, v);
  const auto mask = RegionMask::from_grid(g, {1, 0, 1, 1});
  const auto at = [&](int r, int c) { return GeoPoint{g.node_lat(r), g.node_lon(c), 0}; };
  EXPECT_TRUE(is_navigable(at(0, 0), mask, g, 15.0));
  EXPECT_FALSE(is_navigable(at(0, 1), mask, g, 15.0)); // outside the lane
  EXPECT_FALSE(is_navigable(at(1, 0), mask, g, 15.0)); // 10 m < 15 m
  EXPECT_FALSE(is_navigable(at(1, 1), mask, g, 0.0));  // land
  EXPECT_FALSE(mask.is_lane(g.index(1, 1)));
}

TEST(BlockedFraction, OpenWaterIslandAndSymmetry) {
  const auto grid = synthetic::make_bathymetry();
  const GeoPoint a{48.70, -123.45, 6}, b{48.70, -123.20, 6};
  EXPECT_EQ(blocked_fraction(a, b, grid), 0.0);
  const GeoPoint n{48.672, -123.40, 6}, s{48.645, -123.40, 0};
  const double f = blocked_fraction(n, s, grid);
  EXPECT_GT(f, 0.3);
  EXPECT_LT(f, 1.0);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> lat(48.59, 48.73), lon(-123.5, -123.1);
  for (int i = 0; i < 200; ++i) {
    const GeoPoint p{lat(rng), lon(rng), 6}, q{lat(rng), lon(rng), 10};
    const double x = blocked_fraction(p, q, grid);
    EXPECT_EQ(x, blocked_fraction(q, p, grid));
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, 1.0);
  }
}

TEST(BlockedFraction, EntirelyOnLand) {
  const auto g = flat(-10.0);
  EXPECT_EQ(blocked_fraction({48.005, -122.995, 6}, {48.035, -122.965, 6}, g), 1.0);
}

TEST(EsriAscii, WriteThenLoadRoundTrip) {
  const auto grid = synthetic::make_bathymetry();
  const auto dir = qvtest::temp_dir("esri");
  {
    std::ofstream f(dir / "b.asc");
    write_esri_ascii(f, grid.origin(), grid.cell_size(), grid.rows(), grid.cols(),
                     grid.values(), 1);
  }
  const auto back = load_bathymetry((dir / "b.asc").string());
  EXPECT_EQ(back.rows(), grid.rows());
  EXPECT_EQ(back.cols(), grid.cols());
  EXPECT_NEAR(back.origin().lat, grid.origin().lat, 1e-12);
  EXPECT_NEAR(back.cell_size(), grid.cell_size(), 1e-15);
  for (std::size_t i = 0; i < grid.values().size(); ++i)
    ASSERT_NEAR(back.values()[i], grid.values()[i], 1e-9);
  std::filesystem::remove_all(dir);
}

TEST(EsriAscii, NodataIsLandAndShortFileFails) {
  std::istringstream ok("ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\n"
                        "NODATA_value -9999\n5 -9999\n");
  int r = 0, c = 0;
  GeoPoint sw;
  double cell = 0;
  const auto v = read_esri_values(ok, r, c, sw, cell);
  EXPECT_EQ(v[1], -1.0);
  std::istringstream bad("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 2 3\n");
  EXPECT_THROW(read_esri_values(bad, r, c, sw, cell), IoError);
}

TEST(EsriAscii, MaskShapeMustMatch) {
  const auto g = flat(10.0, 3, 3);
  const auto dir = qvtest::temp_dir("mask");
  {
    std::ofstream f(dir / "m.asc");
    write_esri_ascii(f, g.origin(), g.cell_size(), 2, 2, std::vector<int>{1, 0, 1, 1}, 0);
  }
  EXPECT_THROW(load_mask_layer((dir / "m.asc").string(), g), ShapeError);
  std::filesystem::remove_all(dir);
}
