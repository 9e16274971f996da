#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.h"
#include "terraperm/error.h"
#include "terraperm/indices.h"
#include "terraperm/parallel.h"
#include "terraperm/temporal.h"
#include "test_util.h"

namespace terraperm {
namespace {

constexpr double kNd = kDefaultNodata;

TEST(Percentile, Examples) {
  const std::vector<double> odd{1, 2, 3, 4, 5}, even{1, 2, 3, 4}, one{7};
  EXPECT_EQ(percentile(odd, 50), 3.0);
  EXPECT_EQ(percentile(even, 50), 2.5);
  for (double p : {0.0, 13.0, 50.0, 100.0}) EXPECT_EQ(percentile(one, p), 7.0);
  EXPECT_EQ(percentile(std::vector<double>{5, 1, 4}, 0), 1.0);
  EXPECT_EQ(percentile(std::vector<double>{5, 1, 4}, 100), 5.0);
  EXPECT_THROW(percentile(std::vector<double>{}, 50), InvalidArgument);
  EXPECT_THROW(percentile(odd, 101), InvalidArgument);
}

TEST(TemporalStats, Examples) {
  const std::vector<double> constant{2, 2, 2, 2};
  const TemporalStats c = temporal_stats(constant, kNd);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(c[i], 2.0);
  EXPECT_EQ(c[6], 0.0);

  const std::vector<double> ramp{1, 2, 3, 4, 5};
  const TemporalStats r = temporal_stats(ramp, kNd);
  const TemporalStats expected{3, 1, 2, 3, 4, 5, 2};
  for (std::size_t i = 0; i < 7; ++i) EXPECT_DOUBLE_EQ(r[i], expected[i]) << i;

  const std::vector<double> sparse{5, kNd, kNd};
  for (double v : temporal_stats(sparse, kNd)) EXPECT_EQ(v, kNd);
  const std::vector<double> with_nan{1, NAN, 3};
  EXPECT_EQ(temporal_stats(with_nan, kNd)[0], 2.0);
}

TEST(TemporalStats, MatchesOracleAndOrdering) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> v(-5, 5), u(0, 1);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> s(2 + rng() % 17);
    for (auto& x : s) x = u(rng) < 0.2 ? kNd : v(rng);
    const TemporalStats got = temporal_stats(s, kNd);
    const std::vector<double> want = oracle::temporal_stats(s, kNd);
    for (std::size_t i = 0; i < 7; ++i) EXPECT_NEAR(got[i], want[i], 1e-10);
    if (got[0] == kNd) continue;
    EXPECT_LE(got[1], got[2]);
    EXPECT_LE(got[2], got[3]);
    EXPECT_LE(got[3], got[4]);
    EXPECT_LE(got[4], got[5]);
    EXPECT_GE(got[6], 0.0);
  }
}

TEST(TemporalStats, VarianceZeroIffConstant) {
  std::vector<double> s{0.1, 0.1, 0.1, kNd, 0.1};
  EXPECT_EQ(temporal_stats(s, kNd)[6], 0.0);
  s[1] = 0.1 + 1e-6;
  EXPECT_GT(temporal_stats(s, kNd)[6], 1e-14);
  // Large offset: two-pass variance stays accurate.
  std::vector<double> big{1e9 + 1, 1e9 + 2, 1e9 + 3};
  EXPECT_NEAR(temporal_stats(big, kNd)[6], 2.0 / 3.0, 1e-6);
}

TEST(FeatureCube, Counts133And119And14) {
  const auto optical = derive_index_series(oracle::random_stack(Sensor::kOptical, 18, 6, 5, 0.05, 1), {});
  const auto radar = oracle::random_stack(Sensor::kRadar, 12, 6, 5, 0.05, 2);
  const FeatureCube both = build_feature_cube(optical, radar);
  EXPECT_EQ(both.feature_count(), 133u);
  EXPECT_EQ(build_feature_cube(optical).feature_count(), 119u);
  EXPECT_EQ(build_feature_cube(radar).feature_count(), 14u);
  EXPECT_EQ(both.feature_names()[0], "B01_mean");
  EXPECT_EQ(both.feature_names()[6], "B01_variance");
  EXPECT_EQ(both.feature_names()[13 * 7], "NDVI_mean");
  EXPECT_EQ(both.feature_names()[118], "EVI_variance");
  EXPECT_EQ(both.feature_names()[119], "VV_mean");
  EXPECT_EQ(both.feature_names()[132], "VH_variance");
  // The optical part of the joint cube is the optical-only cube.
  const FeatureCube only = build_feature_cube(optical);
  for (std::size_t i = 0; i < both.pixel_count(); ++i) {
    for (std::size_t f = 0; f < 119; ++f) EXPECT_EQ(both.pixel(i)[f], only.pixel(i)[f]);
  }
}

TEST(FeatureCube, ValuesMatchOracleAndMask) {
  const auto radar = oracle::random_stack(Sensor::kRadar, 5, 7, 4, 0.4, 3);
  const FeatureCube cube = build_feature_cube(radar);
  for (std::size_t i = 0; i < cube.pixel_count(); ++i) {
    bool any_nodata = false;
    for (std::size_t b = 0; b < 2; ++b) {
      std::vector<double> series;
      for (std::size_t d = 0; d < 5; ++d) series.push_back(radar.grid(d, b).values()[i]);
      const auto want = oracle::temporal_stats(series, kNd);
      for (std::size_t s = 0; s < 7; ++s) {
        EXPECT_NEAR(cube.pixel(i)[b * 7 + s], want[s], 1e-12);
        any_nodata |= cube.pixel(i)[b * 7 + s] == kNd;
      }
    }
    EXPECT_EQ(cube.valid(i), !any_nodata);
  }
}

TEST(FeatureCube, CloudedEverywhereIsInvalid) {
  auto optical = oracle::random_stack(Sensor::kOptical, 3, 3, 3, 0.0, 4);
  std::vector<RasterGrid> grids;
  for (std::size_t d = 0; d < 3; ++d) {
    for (std::size_t b = 0; b < kOpticalBandCount; ++b) {
      RasterGrid g = optical.grid(d, b);
      g.at(1, 2) = kNd;
      grids.push_back(g);
    }
  }
  const TimeSeriesStack clouded(Sensor::kOptical, optical.dates(), optical.bands(), grids);
  const FeatureCube cube = build_feature_cube(derive_index_series(clouded, {}));
  EXPECT_FALSE(cube.valid(clouded.geometry().index(1, 2)));
  EXPECT_TRUE(cube.valid(0));
}

TEST(FeatureCube, DateOrderDoesNotMatter) {
  const auto optical = derive_index_series(oracle::random_stack(Sensor::kOptical, 9, 5, 4, 0.1, 5), {});
  const auto radar = oracle::random_stack(Sensor::kRadar, 6, 5, 4, 0.1, 6);
  const FeatureCube base = build_feature_cube(optical, radar);
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<std::size_t> po(9), pr(6);
    std::iota(po.begin(), po.end(), 0);
    std::iota(pr.begin(), pr.end(), 0);
    std::shuffle(po.begin(), po.end(), rng);
    std::shuffle(pr.begin(), pr.end(), rng);
    EXPECT_EQ(build_feature_cube(optical.with_date_order(po), radar.with_date_order(pr)), base);
  }
}

TEST(FeatureCube, ThreadCountDoesNotMatter) {
  const auto optical = derive_index_series(oracle::random_stack(Sensor::kOptical, 6, 9, 7, 0.1, 8), {});
  const auto radar = oracle::random_stack(Sensor::kRadar, 4, 9, 7, 0.1, 9);
  set_thread_count(1);
  const FeatureCube one = build_feature_cube(optical, radar);
  set_thread_count(4);
  const FeatureCube four = build_feature_cube(optical, radar);
  set_thread_count(1);
  EXPECT_EQ(one, four);
}

TEST(FeatureCube, SeriesCountErrors) {
  const auto optical = oracle::random_stack(Sensor::kOptical, 2, 3, 3, 0.0, 10);
  const auto radar = oracle::random_stack(Sensor::kRadar, 2, 3, 3, 0.0, 11);
  try {
    build_feature_cube(optical, radar);  // indices not derived
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("17"), std::string::npos) << e.what();
  }
  const auto other = oracle::random_stack(Sensor::kRadar, 2, 4, 3, 0.0, 12);
  EXPECT_THROW(build_feature_cube(derive_index_series(optical, {}), other), GeometryError);
}

TEST(FeatureCube, DiskRoundTrip) {
  testing::TempDir dir;
  const auto radar = oracle::random_stack(Sensor::kRadar, 4, 5, 3, 0.3, 13);
  const FeatureCube cube = build_feature_cube(radar);
  write_feature_cube(cube, dir / "cube");
  EXPECT_EQ(read_feature_cube(dir / "cube"), cube);
  EXPECT_TRUE(std::filesystem::exists(dir / "cube" / "features.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "cube" / "valid_mask.asc"));
}

}  // namespace
}  // namespace terraperm
