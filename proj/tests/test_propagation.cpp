#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace qv;

namespace {

BathymetryGrid open_sea() {
  return {GeoPoint{48.0, -124.0, 0.0}, 0.01, 60, 60,
          std::vector<double>(3600, 150.0)};
}

const GeoPoint kSrc{48.3, -123.7, kShipSourceDepthM};

// Fixture cache and surrogate are shared by several tests.
struct Fixture {
  BathymetryGrid grid = synthetic::make_bathymetry();
  TlFieldCache cache = precompute_field(synthetic::lane_sources(), 20000.0,
                                        synthetic::fixture_lattice(), grid);
  std::vector<std::size_t> centres =
      select_rbf_centers(cache.samples, synthetic::fixture_rbf_options());
  RbfInterpolant rbf = rbf_fit(cache.samples, synthetic::fixture_rbf_options());
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

TlSample sample_at(const RbfInput& x, double value) {
  TlSample s;
  s.x = x;
  s.tl.fill(value);
  return s;
}

} // namespace

TEST(Thorp, KnownValues) {
  EXPECT_NEAR(thorp_absorption_db_per_km(12.5), 0.0030189046128270653, 1e-12);
  EXPECT_NEAR(thorp_absorption_db_per_km(10000.0), 1.1870299387081567, 1e-12);
}

TEST(SynthTl, OneMetreIsNearZero) {
  const auto grid = open_sea();
  const GeoPoint rcv{kSrc.lat, kSrc.lon, kShipSourceDepthM + 1.0};
  EXPECT_NEAR(synth_tl(kSrc, rcv, 100.0, grid), 0.0, 1e-5);
}

TEST(SynthTl, OneKilometreAtLowFrequency) {
  const auto grid = open_sea();
  const auto rcv = from_planar({0.0, 1000.0}, kSrc, kShipSourceDepthM);
  EXPECT_NEAR(synth_tl(kSrc, rcv, 12.5, grid), 60.00301890461283, 1e-6);
  EXPECT_NEAR(synth_tl(kSrc, rcv, 12.5, grid), 60.0, 0.01);
}

TEST(SynthTl, FullyBlockedAddsSixty) {
  auto grid = open_sea();
  const auto rcv = from_planar({0.0, 1000.0}, kSrc, kShipSourceDepthM);
  const double open = synth_tl(kSrc, rcv, 400.0, grid);
  std::vector<double> land(3600, -5.0);
  const BathymetryGrid island{grid.origin(), grid.cell_size(), 60, 60, land};
  EXPECT_NEAR(synth_tl(kSrc, rcv, 400.0, island) - open, 60.0, 1e-9);
}

TEST(SynthTl, BandsMatchSingleFrequency) {
  const auto grid = synthetic::make_bathymetry();
  const GeoPoint src = synthetic::departure();
  const GeoPoint rcv = synthetic::kPinnedMammal;
  const auto bands = synth_tl_bands(src, rcv, grid);
  for (std::size_t b = 0; b < kBandCount; ++b)
    EXPECT_DOUBLE_EQ(bands[b], synth_tl(src, rcv, kBandCentersHz[b], grid));
}

TEST(SynthTl, RejectsWrongSourceDepth) {
  const auto grid = open_sea();
  const GeoPoint src{kSrc.lat, kSrc.lon, 10.0};
  EXPECT_THROW(synth_tl(src, src, 100.0, grid), DomainError);
}

TEST(SynthTl, ReceiverOutsideGrid) {
  const auto grid = open_sea();
  EXPECT_THROW(synth_tl(kSrc, {10.0, 10.0, 5.0}, 100.0, grid), RangeError);
}

TEST(SynthTl, GrowsWithRange) {
  const auto grid = open_sea();
  double prev = -1.0;
  for (double r = 10.0; r < 20000.0; r *= 1.7) {
    const double tl = synth_tl(kSrc, from_planar({r, 0.0}, kSrc, 6.0), 1000.0, grid);
    EXPECT_GT(tl, prev);
    prev = tl;
  }
}

TEST(ReceivedLevel, EqualBandsPowerSum) {
  const std::vector<double> nls(30, 150.0), tl(30, 50.0);
  EXPECT_NEAR(received_level(nls, tl), 114.77121254719663, 1e-9);
}

TEST(ReceivedLevel, BandCountMismatch) {
  const std::vector<double> a(30, 1.0), b(29, 1.0);
  EXPECT_THROW(received_level(a, b), ShapeError);
}

TEST(Lattice, Cardinality) {
  const auto grid = open_sea();
  const auto lat = LatticeSpec::uniform(1000.0, 2, 2, 2);
  const auto cache = precompute_field({kSrc}, 1000.0, lat, grid);
  EXPECT_EQ(lat.size(), 8u);
  EXPECT_EQ(cache.samples.size(), 8u);
}

TEST(Lattice, UniformSpacing) {
  const auto lat = LatticeSpec::uniform(20000.0, 4, 8, 3);
  EXPECT_EQ(lat.ranges_m, (std::vector<double>{5000, 10000, 15000, 20000}));
  EXPECT_DOUBLE_EQ(lat.bearings_deg[1], 45.0);
  EXPECT_EQ(lat.depths_m, (std::vector<double>{0, 50, 100}));
}

TEST(Lattice, ConfigErrors) {
  const auto grid = open_sea();
  const auto lat = LatticeSpec::uniform(1000.0, 2, 2, 2);
  EXPECT_THROW(precompute_field({}, 1000.0, lat, grid), ConfigError);
  EXPECT_THROW(precompute_field({kSrc}, 0.0, lat, grid), ConfigError);
  EXPECT_THROW(precompute_field({kSrc}, 500.0, lat, grid), ConfigError);
  auto deep = lat;
  deep.depths_m = {150.0};
  EXPECT_THROW(precompute_field({kSrc}, 1000.0, deep, grid), ConfigError);
}

TEST(Lattice, FixtureSamplesNonNegativeAndDeterministic) {
  const auto& f = fixture();
  EXPECT_EQ(f.cache.samples.size(), 6360u);
  for (const auto& s : f.cache.samples)
    for (double v : s.tl) ASSERT_GE(v, 0.0);
  const auto again = precompute_field(synthetic::lane_sources(), 20000.0,
                                      synthetic::fixture_lattice(), f.grid);
  ASSERT_EQ(again.samples.size(), f.cache.samples.size());
  for (std::size_t i = 0; i < again.samples.size(); ++i) {
    ASSERT_EQ(again.samples[i].x, f.cache.samples[i].x);
    ASSERT_EQ(again.samples[i].tl, f.cache.samples[i].tl);
  }
}

TEST(Pca, ComponentsOrthonormalAndVarianceSorted) {
  const auto& f = fixture();
  const auto& b = f.rbf.basis;
  const Eigen::MatrixXd g = b.components * b.components.transpose();
  EXPECT_LT((g - Eigen::MatrixXd::Identity(kPcaComponents, kPcaComponents)).norm(), 1e-9);
  for (int k = 1; k < kPcaComponents; ++k)
    EXPECT_LE(b.explained_variance(k), b.explained_variance(k - 1) + 1e-12);
}

TEST(Pca, FixtureReconstructionWithinOneDb) {
  // Range and blocking enter every band the same way, so the field is
  // low-rank and ten components reproduce it.
  const auto& f = fixture();
  double se = 0.0;
  std::size_t n = 0;
  for (const auto& s : f.cache.samples) {
    const auto back = pca_reconstruct(f.rbf.basis, pca_project(f.rbf.basis, s.tl));
    for (std::size_t b = 0; b < kBandCount; ++b) {
      se += (back[b] - s.tl[b]) * (back[b] - s.tl[b]);
      ++n;
    }
  }
  EXPECT_LE(std::sqrt(se / n), 1.0);
  EXPECT_LT(std::sqrt(se / n), 1e-6);
}

TEST(Pca, MeanProjectsToZero) {
  const auto& b = fixture().rbf.basis;
  BandLevels mean{};
  for (std::size_t i = 0; i < kBandCount; ++i) mean[i] = b.mean(static_cast<Eigen::Index>(i));
  EXPECT_LT(pca_project(b, mean).norm(), 1e-9);
  const auto back = pca_reconstruct(b, Eigen::VectorXd::Zero(kPcaComponents));
  for (std::size_t i = 0; i < kBandCount; ++i) EXPECT_DOUBLE_EQ(back[i], mean[i]);
}

TEST(Pca, NeedsTenSamples) {
  std::vector<BandLevels> few(9);
  EXPECT_THROW(pca_fit(few), InsufficientDataError);
  EXPECT_THROW(pca_reconstruct(fixture().rbf.basis, Eigen::VectorXd::Zero(3)), ShapeError);
}

TEST(Kernel, Properties) {
  EXPECT_DOUBLE_EQ(gaussian_kernel(0.0, 0.7), 1.0);
  EXPECT_NEAR(gaussian_kernel(1.0, 1.0), std::exp(-0.5), 1e-15);
  EXPECT_DOUBLE_EQ(gaussian_kernel(-0.3, 0.5), gaussian_kernel(0.3, 0.5));
  double prev = 2.0;
  for (double r = 0.0; r < 5.0; r += 0.25) {
    const double k = gaussian_kernel(r, 0.8);
    EXPECT_LT(k, prev);
    EXPECT_GT(k, 0.0);
    prev = k;
  }
}

TEST(Rbf, SingleCentreWeightIsProjection) {
  const auto& basis = fixture().rbf.basis;
  auto s = fixture().cache.samples[123];
  RbfOptions opt;
  const std::vector<TlSample> one{s};
  const auto m = rbf_fit_centers(one, opt, &basis);
  const Eigen::VectorXd p = pca_project(basis, s.tl);
  for (int k = 0; k < kPcaComponents; ++k)
    EXPECT_NEAR(m.weights(0, k), p(k) / (1.0 + opt.ridge), 1e-12);
}

TEST(Rbf, SymmetricPairHasEqualWeights) {
  const auto& basis = fixture().rbf.basis;
  const std::vector<TlSample> pair{sample_at({48.6, -123.3, 48.61, -123.31, 10.0}, 70.0),
                                   sample_at({48.6, -123.3, 48.61, -123.29, 10.0}, 70.0)};
  RbfOptions opt;
  opt.sigma_rule = SigmaRule::Fixed;
  opt.fixed_sigma = 1.5;
  const auto m = rbf_fit_centers(pair, opt, &basis);
  for (int k = 0; k < kPcaComponents; ++k)
    EXPECT_NEAR(m.weights(0, k), m.weights(1, k), 1e-12);
  const auto v = m.eval({48.6, -123.3, 6.0}, {48.61, -123.31, 10.0}).tl;
  for (double x : v) EXPECT_NEAR(x, 70.0, 1e-4);
}

TEST(Rbf, InterpolatesCentres) {
  const auto& f = fixture();
  ASSERT_EQ(f.rbf.size(), static_cast<Eigen::Index>(f.centres.size()));
  double worst = 0.0;
  for (auto i : f.centres) {
    const auto& s = f.cache.samples[i];
    const auto r = f.rbf.eval(sample_source(s), sample_receiver(s));
    EXPECT_FALSE(r.extrapolated);
    for (std::size_t b = 0; b < kBandCount; ++b)
      worst = std::max(worst, std::abs(r.tl[b] - s.tl[b]));
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Rbf, HeldOutRmseWithinThreeDb) {
  const auto& f = fixture();
  ASSERT_EQ(f.centres.size(), 500u);
  std::vector<bool> used(f.cache.samples.size(), false);
  for (auto i : f.centres) used[i] = true;
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> pick(0, f.cache.samples.size() - 1);
  double se = 0.0;
  int n = 0, held = 0;
  while (held < 100) {
    const auto i = pick(rng);
    if (used[i]) continue;
    used[i] = true;
    ++held;
    const auto& s = f.cache.samples[i];
    const auto r = f.rbf.eval(sample_source(s), sample_receiver(s));
    for (std::size_t b = 0; b < kBandCount; ++b) {
      se += (r.tl[b] - s.tl[b]) * (r.tl[b] - s.tl[b]);
      ++n;
    }
  }
  EXPECT_LE(std::sqrt(se / n), 3.0);
}

TEST(Rbf, FarQueryFallsBackToMean) {
  const auto& f = fixture();
  const auto r = f.rbf.eval({10.0, 10.0, 6.0}, {10.1, 10.1, 50.0});
  EXPECT_TRUE(r.extrapolated);
  for (std::size_t b = 0; b < kBandCount; ++b)
    EXPECT_NEAR(r.tl[b], std::max(f.rbf.basis.mean(static_cast<Eigen::Index>(b)), 0.0), 1e-9);
}

TEST(Rbf, SelectionErrors) {
  const auto& f = fixture();
  RbfOptions opt;
  opt.clusters = 0;
  EXPECT_THROW(select_rbf_centers(f.cache.samples, opt), ConfigError);
  opt.clusters = 5000;
  opt.per_cluster = 2;
  EXPECT_THROW(select_rbf_centers(f.cache.samples, opt), ConfigError);
  EXPECT_THROW(rbf_fit_centers(std::span<const TlSample>{}, RbfOptions{}), FitError);
}

TEST(Rbf, SelectionIsSeeded) {
  const auto& f = fixture();
  auto opt = synthetic::fixture_rbf_options();
  EXPECT_EQ(select_rbf_centers(f.cache.samples, opt), f.centres);
  opt.seed = 99;
  EXPECT_NE(select_rbf_centers(f.cache.samples, opt), f.centres);
}

TEST(CacheIo, RoundTrip) {
  const auto dir = qvtest::temp_dir("tlcache");
  const auto& f = fixture();
  save_tl_cache(f.cache, dir.string());
  ASSERT_TRUE(tl_cache_exists(dir.string()));
  const auto back = load_tl_cache(dir.string());
  EXPECT_EQ(back.radius_m, f.cache.radius_m);
  EXPECT_EQ(back.lattice.ranges_m, f.cache.lattice.ranges_m);
  EXPECT_EQ(back.sources.size(), f.cache.sources.size());
  ASSERT_EQ(back.samples.size(), f.cache.samples.size());
  for (std::size_t i = 0; i < back.samples.size(); i += 97) {
    EXPECT_EQ(back.samples[i].x, f.cache.samples[i].x);
    EXPECT_EQ(back.samples[i].tl, f.cache.samples[i].tl);
  }
  std::filesystem::remove_all(dir);
}

TEST(CacheIo, RejectsWrongKindAndTruncation) {
  const auto dir = qvtest::temp_dir("tlbad");
  EXPECT_THROW(load_tl_cache(dir.string()), IoError);
  save_rbf(fixture().rbf, dir.string());
  EXPECT_THROW(load_tl_cache(dir.string()), IoError);
  const auto grid = open_sea();
  const auto cache = precompute_field({kSrc}, 1000.0, LatticeSpec::uniform(1000.0, 2, 2, 2), grid);
  save_tl_cache(cache, dir.string());
  auto text = qvtest::slurp(dir / "samples.csv");
  text.erase(text.rfind('\n', text.size() - 2) + 1);
  qvtest::spit(dir / "samples.csv", text);
  EXPECT_THROW(load_tl_cache(dir.string()), ShapeError);
  std::filesystem::remove_all(dir);
}

TEST(RbfIo, RoundTripEvaluatesIdentically) {
  const auto dir = qvtest::temp_dir("rbf");
  const auto& f = fixture();
  save_rbf(f.rbf, dir.string());
  ASSERT_TRUE(rbf_exists(dir.string()));
  const auto back = load_rbf(dir.string());
  EXPECT_EQ(back.sigma, f.rbf.sigma);
  const GeoPoint src = synthetic::departure();
  const GeoPoint rcv = synthetic::kPinnedMammal;
  EXPECT_EQ(back.eval(src, rcv).tl, f.rbf.eval(src, rcv).tl);
  std::filesystem::remove_all(dir);
}
