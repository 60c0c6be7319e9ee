#pragma once

// Shared fixtures for the test binaries.

#include "quietvoyage/pipeline.hpp"
#include "quietvoyage/synthetic.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace qvtest {

namespace fs = std::filesystem;

inline std::string data_dir() { return QV_DATA_DIR; }
inline std::string m1_scenario() { return data_dir() + "/m1/scenario.json"; }

/// Fresh empty directory under the system temp dir.
inline fs::path temp_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  const auto p = fs::temp_directory_path() /
                 ("qv_" + tag + "_" + std::to_string(rng() % 1000000000ULL));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

/// M1 scenario with a TL cache (and fitted surrogate) in `dir`; GA sizes can
/// be shrunk for speed.
inline qv::ScenarioConfig m1_with_cache(const fs::path& dir, int population = 0,
                                        int generations = 0) {
  auto c = qv::parse_scenario(m1_scenario());
  c.paths.tl_cache = (dir / "tl_cache").string();
  if (population) c.speed.population = population;
  if (generations) c.speed.max_generations = generations;
  if (!qv::tl_cache_exists(qv::tl_cache_dir(c))) {
    const auto env = qv::load_environment(c);
    qv::fit_surrogate(c, qv::precompute_tl(c, env));
  }
  return c;
}

/// Same scenario written as a standalone file with absolute paths.
inline fs::path write_scenario(const qv::ScenarioConfig& c, const fs::path& dir,
                               const std::string& name = "scenario.json") {
  auto abs = c;
  for (auto* p : {&abs.paths.bathymetry, &abs.paths.lane_mask, &abs.paths.sightings,
                  &abs.paths.depths, &abs.paths.tl_cache, &abs.paths.ais_track})
    if (!p->empty()) *p = fs::absolute(c.resolve(*p)).string();
  abs.base_dir.clear();
  spit(dir / name, qv::serialize(abs));
  return dir / name;
}

} // namespace qvtest
