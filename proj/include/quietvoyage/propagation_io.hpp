#pragma once

// On-disk formats for the precomputed TL field and the fitted surrogate.
// Each lives in a directory holding CSV tables and a manifest.json.

#include "quietvoyage/errors.hpp"
#include "quietvoyage/propagation.hpp"

#include "json.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace qv {

inline constexpr int kTlCacheVersion = 1;
inline constexpr int kRbfModelVersion = 1;

/// Shortest decimal form that parses back to the same double.
inline std::string format_number(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

namespace detail {

inline double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (e[-1] == ' ' || e[-1] == '\r' || e[-1] == '\t')) --e;
  const auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc() || r.ptr != e)
    throw IoError(where + ": bad number '" + s + "'");
  return v;
}

inline std::vector<std::vector<double>> read_numeric_csv(const std::string& path,
                                                         std::size_t columns,
                                                         bool header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (header && n == 1) continue;
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      const auto cell = line.substr(start, comma == std::string::npos
                                               ? std::string::npos
                                               : comma - start);
      row.push_back(parse_double(cell, path + ":" + std::to_string(n)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (columns && row.size() != columns)
      throw ShapeError(path + ":" + std::to_string(n) + ": expected " +
                       std::to_string(columns) + " columns, got " +
                       std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::json read_manifest(const std::filesystem::path& dir,
                                    const char* what, int version) {
  const auto path = dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw IoError(std::string("no ") + what + " manifest in " + dir.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  if (j.value("kind", "") != what)
    throw IoError(path.string() + ": not a " + std::string(what) + " manifest");
  if (j.value("version", -1) != version)
    throw IoError(path.string() + ": unsupported version " +
                  j.value("version", nlohmann::json(-1)).dump());
  return j;
}

inline void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_number(m(i, j));
    }
    out << '\n';
  }
}

inline Eigen::MatrixXd read_matrix(const std::filesystem::path& path,
                                   Eigen::Index rows, Eigen::Index cols) {
  const auto data = read_numeric_csv(path.string(), static_cast<std::size_t>(cols), false);
  if (static_cast<Eigen::Index>(data.size()) != rows)
    throw ShapeError(path.string() + ": expected " + std::to_string(rows) + " rows");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      m(i, j) = data[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

inline nlohmann::json to_json(const RbfInput& v) {
  return nlohmann::json(std::vector<double>(v.begin(), v.end()));
}
inline RbfInput input_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != static_cast<std::size_t>(kRbfInputDims))
    throw ShapeError("expected 5 input dimensions");
  RbfInput out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

} // namespace detail

/// samples.csv: s_lat,s_lon,r_lat,r_lon,r_z,tl_b1..tl_b30.
inline void save_tl_cache(const TlFieldCache& cache, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / "samples.csv");
    if (!out) throw IoError("cannot write TL cache in " + dir);
    out << "s_lat,s_lon,r_lat,r_lon,r_z";
    for (std::size_t b = 1; b <= kBandCount; ++b) out << ",tl_b" << b;
    out << '\n';
    for (const auto& s : cache.samples) {
      for (int d = 0; d < kRbfInputDims; ++d)
        out << (d ? "," : "") << format_number(s.x[d]);
      for (double v : s.tl) out << ',' << format_number(v);
      out << '\n';
    }
  }
  nlohmann::json src = nlohmann::json::array();
  for (const auto& s : cache.sources) src.push_back({s.lat, s.lon});
  nlohmann::json m = {
      {"kind", "tl_cache"},
      {"version", kTlCacheVersion},
      {"radius_m", cache.radius_m},
      {"sources", src},
      {"ranges_m", cache.lattice.ranges_m},
      {"bearings_deg", cache.lattice.bearings_deg},
      {"depths_m", cache.lattice.depths_m},
      {"skip_land_receivers", cache.lattice.skip_land_receivers},
      {"band_centers_hz", std::vector<double>(kBandCentersHz.begin(), kBandCentersHz.end())},
      {"samples", cache.samples.size()}};
  std::ofstream out(fs::path(dir) / "manifest.json");
  out << m.dump(2) << '\n';
}

inline bool tl_cache_exists(const std::string& dir) {
  return std::filesystem::exists(std::filesystem::path(dir) / "manifest.json") &&
         std::filesystem::exists(std::filesystem::path(dir) / "samples.csv");
}

inline TlFieldCache load_tl_cache(const std::string& dir) {
  namespace fs = std::filesystem;
  const auto m = detail::read_manifest(dir, "tl_cache", kTlCacheVersion);
  TlFieldCache c;
  try {
    c.radius_m = m.at("radius_m").get<double>();
    for (const auto& s : m.at("sources"))
      c.sources.push_back({s.at(0).get<double>(), s.at(1).get<double>(), kShipSourceDepthM});
    c.lattice.ranges_m = m.at("ranges_m").get<std::vector<double>>();
    c.lattice.bearings_deg = m.at("bearings_deg").get<std::vector<double>>();
    c.lattice.depths_m = m.at("depths_m").get<std::vector<double>>();
    c.lattice.skip_land_receivers = m.at("skip_land_receivers").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("TL cache manifest in " + dir + ": " + e.what());
  }
  const auto rows = detail::read_numeric_csv((fs::path(dir) / "samples.csv").string(),
                                             kRbfInputDims + kBandCount, true);
  if (rows.size() != m.value("samples", std::size_t{0}))
    throw ShapeError("TL cache in " + dir + ": sample count differs from manifest");
  c.samples.reserve(rows.size());
  for (const auto& r : rows) {
    TlSample s;
    for (int d = 0; d < kRbfInputDims; ++d) s.x[d] = r[static_cast<std::size_t>(d)];
    for (std::size_t b = 0; b < kBandCount; ++b) s.tl[b] = r[kRbfInputDims + b];
    c.samples.push_back(s);
  }
  return c;
}

inline void save_rbf(const RbfInterpolant& m, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  detail::write_matrix(fs::path(dir) / "centers.csv", m.centers);
  detail::write_matrix(fs::path(dir) / "weights.csv", m.weights);
  detail::write_matrix(fs::path(dir) / "pca_components.csv", m.basis.components);
  nlohmann::json j = {
      {"kind", "rbf_model"},
      {"version", kRbfModelVersion},
      {"centers", m.centers.rows()},
      {"sigma", m.sigma},
      {"ridge", m.ridge},
      {"input_mean", detail::to_json(m.input_mean)},
      {"input_scale", detail::to_json(m.input_scale)},
      {"box_min", detail::to_json(m.box_min)},
      {"box_max", detail::to_json(m.box_max)},
      {"pca_mean", std::vector<double>(m.basis.mean.data(),
                                       m.basis.mean.data() + m.basis.mean.size())},
      {"explained_variance",
       std::vector<double>(m.basis.explained_variance.data(),
                           m.basis.explained_variance.data() +
                               m.basis.explained_variance.size())}};
  std::ofstream out(fs::path(dir) / "manifest.json");
  if (!out) throw IoError("cannot write RBF manifest in " + dir);
  out << j.dump(2) << '\n';
}

inline bool rbf_exists(const std::string& dir) {
  return std::filesystem::exists(std::filesystem::path(dir) / "manifest.json") &&
         std::filesystem::exists(std::filesystem::path(dir) / "weights.csv");
}

inline RbfInterpolant load_rbf(const std::string& dir) {
  namespace fs = std::filesystem;
  const auto j = detail::read_manifest(dir, "rbf_model", kRbfModelVersion);
  RbfInterpolant m;
  Eigen::Index n = 0;
  try {
    n = j.at("centers").get<Eigen::Index>();
    m.sigma = j.at("sigma").get<double>();
    m.ridge = j.at("ridge").get<double>();
    m.input_mean = detail::input_from_json(j.at("input_mean"));
    m.input_scale = detail::input_from_json(j.at("input_scale"));
    m.box_min = detail::input_from_json(j.at("box_min"));
    m.box_max = detail::input_from_json(j.at("box_max"));
    const auto mean = j.at("pca_mean").get<std::vector<double>>();
    const auto ev = j.at("explained_variance").get<std::vector<double>>();
    if (mean.size() != kBandCount || ev.size() != static_cast<std::size_t>(kPcaComponents))
      throw ShapeError("RBF manifest in " + dir + ": PCA shape mismatch");
    m.basis.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), kBandCount);
    m.basis.explained_variance =
        Eigen::Map<const Eigen::VectorXd>(ev.data(), kPcaComponents);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("RBF manifest in " + dir + ": " + e.what());
  }
  m.centers = detail::read_matrix(fs::path(dir) / "centers.csv", n, kRbfInputDims);
  m.weights = detail::read_matrix(fs::path(dir) / "weights.csv", n, kPcaComponents);
  m.basis.components = detail::read_matrix(fs::path(dir) / "pca_components.csv",
                                           kPcaComponents, kBandCount);
  return m;
}

} // namespace qv
