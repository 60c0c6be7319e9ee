#pragma once

// Transmission loss: a synthetic spreading + absorption + terrain-occlusion
// field standing in for a full ray-traced model, PCA compression of the 30
// band values, a Gaussian RBF surrogate over (source, receiver) positions, and
// the passive sonar equation.

#include "quietvoyage/errors.hpp"
#include "quietvoyage/geo_env.hpp"
#include "quietvoyage/noise_source.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <vector>

namespace qv {

inline constexpr double kShipSourceDepthM = 6.0;
inline constexpr double kMaxReceiverDepthM = 100.0;
inline constexpr int kPcaComponents = 10;
inline constexpr int kRbfInputDims = 5;

/// Anything that yields a 30-band transmission loss between a source and a
/// receiver.
template <typename M>
concept TransmissionLossModel = requires(const M& m, const GeoPoint& p) {
  { m.bands(p, p) } -> std::convertible_to<BandLevels>;
};

/// Thorp seawater absorption in dB/km; `f_hz` is converted to kHz.
inline double thorp_absorption_db_per_km(double f_hz) {
  const double f = f_hz / 1000.0;
  const double f2 = f * f;
  return 0.11 * f2 / (1.0 + f2) + 44.0 * f2 / (4100.0 + f2) + 2.75e-4 * f2 +
         0.003;
}

/// Slant range between a source and a receiver, meters.
inline double slant_range_m(const GeoPoint& src, const GeoPoint& rcv) {
  return std::hypot(surface_distance_m(src, rcv), rcv.depth - src.depth);
}

namespace detail {
inline void require_source_depth(const GeoPoint& src) {
  if (std::abs(src.depth - kShipSourceDepthM) > 1e-9)
    throw DomainError("synthetic TL expects the source at 6 m depth");
}
inline double synth_tl_from(double range_m, double blocked, double f_hz) {
  return 20.0 * std::log10(std::max(range_m, 1.0)) +
         thorp_absorption_db_per_km(f_hz) * range_m / 1000.0 + 60.0 * blocked;
}
} // namespace detail

inline double synth_tl(const GeoPoint& src, const GeoPoint& rcv, double f_hz,
                       const BathymetryGrid& grid) {
  detail::require_source_depth(src);
  return detail::synth_tl_from(slant_range_m(src, rcv),
                               blocked_fraction(src, rcv, grid), f_hz);
}

/// All 30 bands at once; the occlusion test runs once.
inline BandLevels synth_tl_bands(const GeoPoint& src, const GeoPoint& rcv,
                                 const BathymetryGrid& grid) {
  detail::require_source_depth(src);
  const double r = slant_range_m(src, rcv);
  const double blocked = blocked_fraction(src, rcv, grid);
  BandLevels out{};
  for (std::size_t b = 0; b < kBandCount; ++b)
    out[b] = detail::synth_tl_from(r, blocked, kBandCentersHz[b]);
  return out;
}

/// Direct synthetic field as a TransmissionLossModel.
struct SyntheticTl {
  const BathymetryGrid* grid = nullptr;
  [[nodiscard]] BandLevels bands(const GeoPoint& src,
                                 const GeoPoint& rcv) const {
    return synth_tl_bands(src, rcv, *grid);
  }
};

/// NL_b = NLS_b - TL_b, returned as the broadband power sum.
inline double received_level(std::span<const double> nls_db,
                             std::span<const double> tl_db) {
  if (nls_db.size() != tl_db.size() || nls_db.empty())
    throw ShapeError("received_level: band counts differ");
  std::vector<double> nl(nls_db.size());
  for (std::size_t b = 0; b < nl.size(); ++b) nl[b] = nls_db[b] - tl_db[b];
  return broadband_level(nl);
}

inline double mean_band(const BandLevels& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / kBandCount;
}

// ---------------------------------------------------------------------------
// Precomputed field

using RbfInput = std::array<double, kRbfInputDims>;

struct TlSample {
  RbfInput x{}; // s_lat, s_lon, r_lat, r_lon, r_z
  BandLevels tl{};
};

inline GeoPoint sample_source(const TlSample& s) {
  return {s.x[0], s.x[1], kShipSourceDepthM};
}
inline GeoPoint sample_receiver(const TlSample& s) {
  return {s.x[2], s.x[3], s.x[4]};
}
inline RbfInput make_input(const GeoPoint& src, const GeoPoint& rcv) {
  return {src.lat, src.lon, rcv.lat, rcv.lon, rcv.depth};
}

struct LatticeSpec {
  std::vector<double> ranges_m;
  std::vector<double> bearings_deg;
  std::vector<double> depths_m;
  bool skip_land_receivers = true;

  [[nodiscard]] std::size_t size() const {
    return ranges_m.size() * bearings_deg.size() * depths_m.size();
  }

  /// `n_ranges` ranges evenly spaced on (0, radius], `n_bearings` bearings
  /// evenly spaced on [0, 360), and `n_depths` depths on [0, 100] m.
  static LatticeSpec uniform(double radius_m, int n_ranges, int n_bearings,
                             int n_depths) {
    LatticeSpec s;
    for (int i = 1; i <= n_ranges; ++i)
      s.ranges_m.push_back(radius_m * i / n_ranges);
    for (int i = 0; i < n_bearings; ++i)
      s.bearings_deg.push_back(360.0 * i / n_bearings);
    for (int i = 0; i < n_depths; ++i)
      s.depths_m.push_back(n_depths == 1 ? 0.0
                                         : kMaxReceiverDepthM * i /
                                               (n_depths - 1));
    return s;
  }
};

struct TlFieldCache {
  std::vector<GeoPoint> sources;
  double radius_m = 0.0;
  LatticeSpec lattice;
  std::vector<TlSample> samples;
};

/// Deterministic range x bearing x depth lattice around each source.
/// Receivers outside the grid (and, by default, on land) are omitted.
inline TlFieldCache precompute_field(std::vector<GeoPoint> sources,
                                     double radius_m, const LatticeSpec& lat,
                                     const BathymetryGrid& grid) {
  if (sources.empty()) throw ConfigError("precompute_field: no sources");
  if (!(radius_m > 0.0))
    throw ConfigError("precompute_field: radius must be positive");
  for (double d : lat.depths_m)
    if (d < 0.0 || d > kMaxReceiverDepthM)
      throw ConfigError("precompute_field: receiver depth outside [0, 100] m");
  for (double r : lat.ranges_m)
    if (r < 0.0 || r > radius_m)
      throw ConfigError("precompute_field: lattice range outside radius");
  TlFieldCache cache;
  cache.radius_m = radius_m;
  cache.lattice = lat;
  for (auto& s : sources) {
    s.depth = kShipSourceDepthM;
    grid.require_inside(s);
    if (is_land_at(grid, s))
      throw ConfigError("precompute_field: source on land");
  }
  cache.sources = sources;
  for (const auto& src : sources) {
    for (double range : lat.ranges_m) {
      for (double bearing : lat.bearings_deg) {
        const double th = bearing * units::deg2rad;
        const GeoPoint surf = from_planar(
            {range * std::sin(th), range * std::cos(th)}, src, 0.0);
        if (!grid.contains(surf)) continue;
        if (lat.skip_land_receivers && is_land_at(grid, surf)) continue;
        const double blocked = blocked_fraction(src, surf, grid);
        for (double z : lat.depths_m) {
          GeoPoint rcv = surf;
          rcv.depth = z;
          TlSample s;
          s.x = make_input(src, rcv);
          const double r = slant_range_m(src, rcv);
          for (std::size_t b = 0; b < kBandCount; ++b)
            s.tl[b] = detail::synth_tl_from(r, blocked, kBandCentersHz[b]);
          cache.samples.push_back(s);
        }
      }
    }
  }
  return cache;
}

// ---------------------------------------------------------------------------
// PCA band compression

struct PcaBasis {
  Eigen::VectorXd mean;               // 30
  Eigen::MatrixXd components;         // 10 x 30, orthonormal rows
  Eigen::VectorXd explained_variance; // 10, non-increasing
};

inline PcaBasis pca_fit(std::span<const BandLevels> samples) {
  if (samples.size() < static_cast<std::size_t>(kPcaComponents))
    throw InsufficientDataError("pca_fit needs at least 10 samples");
  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd data(n, kBandCount);
  for (Eigen::Index i = 0; i < n; ++i)
    for (std::size_t b = 0; b < kBandCount; ++b)
      data(i, static_cast<Eigen::Index>(b)) = samples[i][b];
  PcaBasis basis;
  basis.mean = data.colwise().mean().transpose();
  data.rowwise() -= basis.mean.transpose();
  const Eigen::MatrixXd cov =
      (data.transpose() * data) / static_cast<double>(std::max<Eigen::Index>(n - 1, 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success)
    throw FitError("pca_fit: eigen decomposition failed");
  basis.components.resize(kPcaComponents, kBandCount);
  basis.explained_variance.resize(kPcaComponents);
  for (int k = 0; k < kPcaComponents; ++k) {
    // Eigen sorts ascending.
    const Eigen::Index src = kBandCount - 1 - k;
    Eigen::VectorXd v = eig.eigenvectors().col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    basis.components.row(k) = v.transpose();
    basis.explained_variance(k) = std::max(eig.eigenvalues()(src), 0.0);
  }
  return basis;
}

inline Eigen::VectorXd pca_project(const PcaBasis& basis,
                                   const BandLevels& tl) {
  Eigen::Map<const Eigen::VectorXd> v(tl.data(), kBandCount);
  return basis.components * (v - basis.mean);
}

inline BandLevels pca_reconstruct(const PcaBasis& basis,
                                  const Eigen::VectorXd& coeffs) {
  if (coeffs.size() != kPcaComponents)
    throw ShapeError("pca_reconstruct: expected 10 coefficients");
  const Eigen::VectorXd v =
      basis.mean + basis.components.transpose() * coeffs;
  BandLevels out{};
  for (std::size_t b = 0; b < kBandCount; ++b)
    out[b] = v(static_cast<Eigen::Index>(b));
  return out;
}

// ---------------------------------------------------------------------------
// Gaussian RBF surrogate

inline double gaussian_kernel(double r, double sigma) {
  const double q = r / sigma;
  return std::exp(-0.5 * q * q);
}

enum class SigmaRule { MedianNearestNeighbor, Fixed };

struct RbfOptions {
  int clusters = 50;
  int per_cluster = 10;
  SigmaRule sigma_rule = SigmaRule::MedianNearestNeighbor;
  double fixed_sigma = 1.0; // normalized units, used with SigmaRule::Fixed
  double ridge = 1e-8;
  RbfInput dim_weight{1.0, 1.0, 1.0, 1.0, 1.0};
  int kmeans_iterations = 25;
  std::uint64_t seed = 7;
};

struct RbfResult {
  BandLevels tl{};
  bool extrapolated = false;
};

class RbfInterpolant {
public:
  RbfInput input_mean{};
  RbfInput input_scale{};
  Eigen::MatrixXd centers; // n x 5, normalized
  Eigen::MatrixXd weights; // n x 10
  double sigma = 1.0;
  double ridge = 1e-8;
  PcaBasis basis;
  RbfInput box_min{}; // normalized bounding box of the centers
  RbfInput box_max{};

  [[nodiscard]] Eigen::Index size() const { return centers.rows(); }

  [[nodiscard]] RbfInput normalize(const RbfInput& x) const {
    RbfInput z{};
    for (int d = 0; d < kRbfInputDims; ++d)
      z[d] = (x[d] - input_mean[d]) / input_scale[d];
    return z;
  }

  [[nodiscard]] RbfInput denormalize(const RbfInput& z) const {
    RbfInput x{};
    for (int d = 0; d < kRbfInputDims; ++d)
      x[d] = z[d] * input_scale[d] + input_mean[d];
    return x;
  }

  /// PCA coefficients at a normalized input.
  [[nodiscard]] Eigen::VectorXd components_at(const RbfInput& z) const {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(kPcaComponents);
    const double inv2s2 = 0.5 / (sigma * sigma);
    for (Eigen::Index i = 0; i < centers.rows(); ++i) {
      double r2 = 0.0;
      for (int d = 0; d < kRbfInputDims; ++d) {
        const double t = z[d] - centers(i, d);
        r2 += t * t;
      }
      const double w = std::exp(-r2 * inv2s2);
      if (w < 1e-300) continue;
      acc.noalias() += w * weights.row(i).transpose();
    }
    return acc;
  }

  [[nodiscard]] bool outside_support(const RbfInput& z) const {
    for (int d = 0; d < kRbfInputDims; ++d)
      if (z[d] < box_min[d] - 2 * sigma || z[d] > box_max[d] + 2 * sigma)
        return true;
    return false;
  }

  [[nodiscard]] RbfResult eval(const GeoPoint& src, const GeoPoint& rcv) const {
    const RbfInput z = normalize(make_input(src, rcv));
    RbfResult res;
    res.extrapolated = outside_support(z);
    res.tl = pca_reconstruct(basis, components_at(z));
    for (double& v : res.tl) v = std::max(v, 0.0);
    return res;
  }

  [[nodiscard]] BandLevels bands(const GeoPoint& src,
                                 const GeoPoint& rcv) const {
    return eval(src, rcv).tl;
  }
};

inline RbfResult rbf_eval(const RbfInterpolant& interp, const GeoPoint& src,
                          const GeoPoint& rcv) {
  return interp.eval(src, rcv);
}

namespace detail {

inline double sq_dist(const RbfInput& a, const RbfInput& b) {
  double s = 0.0;
  for (int d = 0; d < kRbfInputDims; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return s;
}

/// Lloyd's k-means with k-means++ seeding; returns a cluster label per point.
inline std::vector<int> kmeans(const std::vector<RbfInput>& pts, int k,
                               int iterations, std::mt19937_64& rng) {
  const std::size_t n = pts.size();
  k = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(k), n));
  std::vector<RbfInput> cent;
  cent.reserve(static_cast<std::size_t>(k));
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  cent.push_back(pts[pick(rng)]);
  std::vector<double> d2(n, std::numeric_limits<double>::max());
  while (static_cast<int>(cent.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], sq_dist(pts[i], cent.back()));
      total += d2[i];
    }
    if (total <= 0.0) break;
    std::uniform_real_distribution<double> u(0.0, total);
    double target = u(rng);
    std::size_t chosen = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      target -= d2[i];
      if (target <= 0.0) {
        chosen = i;
        break;
      }
    }
    cent.push_back(pts[chosen]);
  }
  std::vector<int> label(n, 0);
  for (int it = 0; it < iterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double bd = std::numeric_limits<double>::max();
      for (std::size_t c = 0; c < cent.size(); ++c) {
        const double d = sq_dist(pts[i], cent[c]);
        if (d < bd) {
          bd = d;
          best = static_cast<int>(c);
        }
      }
      if (label[i] != best) {
        label[i] = best;
        changed = true;
      }
    }
    std::vector<RbfInput> sum(cent.size(), RbfInput{});
    std::vector<std::size_t> count(cent.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& s = sum[static_cast<std::size_t>(label[i])];
      for (int d = 0; d < kRbfInputDims; ++d) s[d] += pts[i][d];
      ++count[static_cast<std::size_t>(label[i])];
    }
    for (std::size_t c = 0; c < cent.size(); ++c)
      if (count[c])
        for (int d = 0; d < kRbfInputDims; ++d)
          cent[c][d] = sum[c][d] / static_cast<double>(count[c]);
    if (!changed && it > 0) break;
  }
  return label;
}

} // namespace detail

/// Fits the surrogate on exactly the given samples (every sample becomes a
/// centre). The PCA basis is fitted on `pca_samples` when non-empty, else on
/// `centers` (needs >= 10 of them in that case).
inline RbfInterpolant rbf_fit_centers(std::span<const TlSample> centers,
                                      const RbfOptions& opt,
                                      const PcaBasis* basis = nullptr) {
  if (centers.empty()) throw FitError("rbf_fit: no centres selected");
  RbfInterpolant m;
  m.ridge = opt.ridge;
  if (basis) {
    m.basis = *basis;
  } else {
    std::vector<BandLevels> tl;
    for (const auto& s : centers) tl.push_back(s.tl);
    m.basis = pca_fit(tl);
  }
  const auto n = static_cast<Eigen::Index>(centers.size());
  for (int d = 0; d < kRbfInputDims; ++d) {
    double mean = 0.0;
    for (const auto& s : centers) mean += s.x[d];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& s : centers) var += (s.x[d] - mean) * (s.x[d] - mean);
    var /= static_cast<double>(n);
    m.input_mean[d] = mean;
    m.input_scale[d] = (var > 1e-24 ? std::sqrt(var) : 1.0) / opt.dim_weight[d];
  }
  m.centers.resize(n, kRbfInputDims);
  std::vector<RbfInput> z(centers.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    z[i] = m.normalize(centers[i].x);
    for (int d = 0; d < kRbfInputDims; ++d) m.centers(i, d) = z[i][d];
  }
  for (int d = 0; d < kRbfInputDims; ++d) {
    m.box_min[d] = std::numeric_limits<double>::max();
    m.box_max[d] = std::numeric_limits<double>::lowest();
    for (const auto& p : z) {
      m.box_min[d] = std::min(m.box_min[d], p[d]);
      m.box_max[d] = std::max(m.box_max[d], p[d]);
    }
  }
  if (opt.sigma_rule == SigmaRule::Fixed) {
    m.sigma = opt.fixed_sigma;
  } else {
    std::vector<double> nn;
    for (Eigen::Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::max();
      for (Eigen::Index j = 0; j < n; ++j)
        if (i != j) best = std::min(best, detail::sq_dist(z[i], z[j]));
      if (best > 0.0 && best < std::numeric_limits<double>::max())
        nn.push_back(std::sqrt(best));
    }
    if (nn.empty()) {
      m.sigma = 1.0;
    } else {
      std::nth_element(nn.begin(), nn.begin() + nn.size() / 2, nn.end());
      m.sigma = nn[nn.size() / 2];
    }
  }
  if (!(m.sigma > 0.0)) throw FitError("rbf_fit: kernel width must be positive");

  Eigen::MatrixXd psi(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) {
      const double v =
          gaussian_kernel(std::sqrt(detail::sq_dist(z[i], z[j])), m.sigma);
      psi(i, j) = v;
      psi(j, i) = v;
    }
  psi.diagonal().array() += opt.ridge;
  Eigen::MatrixXd rhs(n, kPcaComponents);
  for (Eigen::Index i = 0; i < n; ++i)
    rhs.row(i) = pca_project(m.basis, centers[i].tl).transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(psi);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ev(psi,
                                                      Eigen::EigenvaluesOnly);
    std::ostringstream os;
    os << "rbf_fit: kernel matrix not positive definite (eigenvalue range "
       << ev.eigenvalues().minCoeff() << " .. " << ev.eigenvalues().maxCoeff()
       << ")";
    throw FitError(os.str());
  }
  m.weights = llt.solve(rhs);
  return m;
}

/// Index of the samples chosen as centres: k-means on normalized inputs,
/// then `per_cluster` uniform picks from each cluster.
inline std::vector<std::size_t>
select_rbf_centers(std::span<const TlSample> samples, const RbfOptions& opt) {
  const std::size_t n = samples.size();
  if (opt.clusters < 1 || opt.per_cluster < 1)
    throw ConfigError("rbf_fit: clusters and per_cluster must be >= 1");
  if (static_cast<std::size_t>(opt.clusters) * opt.per_cluster > n)
    throw ConfigError("rbf_fit: clusters*per_cluster exceeds sample count");
  RbfInput mean{}, scale{};
  for (int d = 0; d < kRbfInputDims; ++d) {
    double mu = 0.0;
    for (const auto& s : samples) mu += s.x[d];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& s : samples) var += (s.x[d] - mu) * (s.x[d] - mu);
    var /= static_cast<double>(n);
    mean[d] = mu;
    scale[d] = (var > 1e-24 ? std::sqrt(var) : 1.0) / opt.dim_weight[d];
  }
  std::vector<RbfInput> z(n);
  for (std::size_t i = 0; i < n; ++i)
    for (int d = 0; d < kRbfInputDims; ++d)
      z[i][d] = (samples[i].x[d] - mean[d]) / scale[d];
  std::mt19937_64 rng(opt.seed);
  const auto label = detail::kmeans(z, opt.clusters, opt.kmeans_iterations, rng);
  std::vector<std::vector<std::size_t>> members(
      static_cast<std::size_t>(opt.clusters));
  for (std::size_t i = 0; i < n; ++i)
    members[static_cast<std::size_t>(label[i])].push_back(i);
  std::vector<std::size_t> chosen;
  for (auto& mem : members) {
    std::shuffle(mem.begin(), mem.end(), rng);
    const std::size_t take =
        std::min(mem.size(), static_cast<std::size_t>(opt.per_cluster));
    chosen.insert(chosen.end(), mem.begin(),
                  mem.begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

/// Clustered subsampling, PCA on the full sample set, then the RBF solve.
inline RbfInterpolant rbf_fit(std::span<const TlSample> samples,
                              const RbfOptions& opt) {
  const auto idx = select_rbf_centers(samples, opt);
  if (idx.empty()) throw FitError("rbf_fit: no centres selected");
  std::vector<BandLevels> all;
  all.reserve(samples.size());
  for (const auto& s : samples) all.push_back(s.tl);
  const PcaBasis basis = pca_fit(all);
  std::vector<TlSample> picked;
  picked.reserve(idx.size());
  for (auto i : idx) picked.push_back(samples[i]);
  return rbf_fit_centers(picked, opt, &basis);
}

} // namespace qv
