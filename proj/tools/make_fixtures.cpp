// Regenerates the bundled fixtures under data/ from the synthetic strait.
// Usage: make_fixtures <data-dir>

#include "quietvoyage/pipeline.hpp"
#include "quietvoyage/synthetic.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

namespace fs = std::filesystem;
using namespace qv;

namespace {

constexpr double kM1EtaH = 1.35;
constexpr double kAisStartS = 1'700'000'000.0;
constexpr double kAisStepS = 270.0;

std::ofstream create(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot write " + p.string());
  return f;
}

ShipSpec c1_ship() {
  ShipSpec s;
  s.name = "C1";
  s.ais_type_id = 0;
  s.ship_class = ShipClass::Other;
  s.length_ft = 684.97;
  s.v_min_kt = 8.0;
  s.v_max_kt = 16.0;
  return s;
}

void write_m1(const fs::path& dir) {
  fs::create_directories(dir);
  const synthetic::StraitLayout lay;
  const auto grid = synthetic::make_bathymetry(lay);
  {
    auto f = create(dir / "bathymetry.asc");
    write_esri_ascii(f, grid.origin(), grid.cell_size(), grid.rows(), grid.cols(),
                     grid.values(), 1);
  }
  {
    auto f = create(dir / "lanes.asc");
    const auto lane = synthetic::make_lane_layer(grid, lay);
    std::vector<int> v(lane.begin(), lane.end());
    write_esri_ascii(f, grid.origin(), grid.cell_size(), grid.rows(), grid.cols(), v, 0);
  }

  // Sightings cluster in the channel south of the island.
  std::mt19937_64 rng(20240611);
  std::normal_distribution<double> dlat(0.0, 0.012), dlon(0.0, 0.04);
  std::uniform_real_distribution<double> w(0.5, 2.0), depth(5.0, 60.0);
  {
    auto f = create(dir / "sightings.csv");
    f << "lat,lon,weight\n";
    int n = 0;
    while (n < 40) {
      const GeoPoint p{48.625 + dlat(rng), -123.30 + dlon(rng), 0.0};
      const double wt = w(rng);
      if (!grid.contains(p) || is_land_at(grid, p)) continue;
      f << format_number(std::round(p.lat * 1e6) / 1e6) << ','
        << format_number(std::round(p.lon * 1e6) / 1e6) << ','
        << format_number(std::round(wt * 100) / 100) << '\n';
      ++n;
    }
  }
  {
    auto f = create(dir / "depths.csv");
    f << "max_depth_m\n";
    for (int i = 0; i < 40; ++i) f << format_number(std::round(depth(rng) * 10) / 10) << '\n';
  }

  // Observed voyage: constant speed along the lane centre line.
  {
    const GeoPoint a = synthetic::departure(lay), b = synthetic::destination(lay);
    const int steps = static_cast<int>(std::round(kM1EtaH * 3600.0 / kAisStepS));
    const double len_nm = units::m_to_nm(distance(to_planar(a, a), to_planar(b, a)));
    auto f = create(dir / "ais.csv");
    f << "timestamp_s,lat,lon,sog_kt\n";
    for (int i = 0; i <= steps; ++i) {
      const double t = static_cast<double>(i) / steps;
      f << static_cast<long long>(kAisStartS + i * kAisStepS) << ','
        << format_number(a.lat + t * (b.lat - a.lat)) << ','
        << format_number(a.lon + t * (b.lon - a.lon)) << ','
        << format_number(std::round(len_nm / kM1EtaH * 1e4) / 1e4) << '\n';
    }
  }

  ScenarioConfig c;
  c.name = "m1";
  c.departure = synthetic::departure(lay);
  c.destination = synthetic::destination(lay);
  c.eta_h = kM1EtaH;
  c.ship = c1_ship();
  MammalState m;
  m.id = 1;
  m.position = synthetic::kPinnedMammal;
  c.mammals = {m};
  c.paths = {"bathymetry.asc", "lanes.asc", "sightings.csv", "depths.csv", "tl_cache",
             "ais.csv"};
  c.tl.sources = synthetic::lane_sources(lay);
  c.tl.source_count = static_cast<int>(c.tl.sources.size());
  const auto lat = synthetic::fixture_lattice();
  c.tl.radius_m = lat.ranges_m.back();
  c.tl.ranges = static_cast<int>(lat.ranges_m.size());
  c.tl.bearings = static_cast<int>(lat.bearings_deg.size());
  c.tl.depths = static_cast<int>(lat.depths_m.size());
  const auto rbf = synthetic::fixture_rbf_options();
  c.tl.clusters = rbf.clusters;
  c.tl.per_cluster = rbf.per_cluster;
  c.tl.depth_weight = rbf.dim_weight[4];
  c.seeds.rbf = rbf.seed;
  auto f = create(dir / "scenario.json");
  f << serialize(c);
}

// Table-1 style voyage configuration used by the parser tests.
void write_c1(const fs::path& dir) {
  fs::create_directories(dir);
  auto f = create(dir / "scenario.json");
  f << R"({
  "name": "c1",
  "departure": {"lat_deg": 48.684, "lon_deg": -123.49},
  "destination": {"lat_deg": 48.684, "lon_deg": -123.11},
  "eta_h": 12.36,
  "ship": {
    "name": "C1",
    "ais_type_id": 0,
    "ship_class": "Other",
    "length_ft": 684.97,
    "v_min_kt": 8.0,
    "v_max_kt": 16.0
  },
  "mammal_count": 3,
  "paths": {
    "bathymetry": "../m1/bathymetry.asc",
    "lane_mask": "../m1/lanes.asc",
    "sightings": "../m1/sightings.csv",
    "depths": "../m1/depths.csv",
    "tl_cache": "tl_cache"
  }
}
)";
}

} // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures <data-dir>\n";
    return 1;
  }
  try {
    write_m1(fs::path(argv[1]) / "m1");
    write_c1(fs::path(argv[1]) / "c1");
  } catch (const std::exception& e) {
    std::cerr << "make_fixtures: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
