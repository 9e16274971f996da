#ifndef TERRAPERM_TEMPORAL_H_
#define TERRAPERM_TEMPORAL_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "terraperm/raster.h"
#include "terraperm/stack.h"

namespace terraperm {

enum class StatName { kMean, kP0, kP25, kP50, kP75, kP100, kVariance };

inline constexpr std::size_t kStatCount = 7;
inline constexpr std::array<StatName, kStatCount> kAllStats = {
    StatName::kMean, StatName::kP0,   StatName::kP25,     StatName::kP50,
    StatName::kP75,  StatName::kP100, StatName::kVariance};

std::string_view to_string(StatName stat);

// Linear interpolation between closest ranks on the sorted values:
// r = (n-1) p / 100, v[floor r] + frac(r) (v[ceil r] - v[floor r]).
// Throws InvalidArgument on an empty list or p outside [0, 100].
double percentile(std::span<const double> values, double p);

// Same, for input already sorted ascending.
double percentile_sorted(std::span<const double> sorted, double p);

using TemporalStats = std::array<double, kStatCount>;

// Mean, P0, P25, P50, P75, P100 and population variance over the entries
// that are neither `nodata` nor NaN. Fewer than two such entries yields an
// all-nodata vector.
TemporalStats temporal_stats(std::span<const double> series, double nodata);

inline constexpr std::size_t kMinValidObservations = 2;

// Per-pixel temporal feature vectors. Values are pixel-major:
// values()[pixel * feature_count() + feature].
class FeatureCube {
 public:
  FeatureCube() = default;
  FeatureCube(GridGeometry geometry, double nodata, std::vector<std::string> feature_names,
              std::vector<double> values, std::vector<std::uint8_t> valid_mask);

  const GridGeometry& geometry() const { return geometry_; }
  int width() const { return geometry_.width; }
  int height() const { return geometry_.height; }
  double nodata() const { return nodata_; }
  std::size_t pixel_count() const { return geometry_.pixel_count(); }
  std::size_t feature_count() const { return feature_names_.size(); }
  const std::vector<std::string>& feature_names() const { return feature_names_; }

  std::span<const double> pixel(std::size_t index) const {
    return std::span<const double>(values_).subspan(index * feature_count(), feature_count());
  }
  bool valid(std::size_t index) const { return valid_mask_[index] != 0; }
  const std::vector<std::uint8_t>& valid_mask() const { return valid_mask_; }
  std::span<const double> values() const { return values_; }

  RasterGrid feature_grid(std::size_t feature) const;
  RasterGrid valid_mask_grid() const;

  friend bool operator==(const FeatureCube&, const FeatureCube&) = default;

 private:
  GridGeometry geometry_;
  double nodata_ = kDefaultNodata;
  std::vector<std::string> feature_names_;
  std::vector<double> values_;
  std::vector<std::uint8_t> valid_mask_;
};

// Series counts each sensor contributes to a cube.
inline constexpr std::size_t kOpticalSeriesCount = kOpticalBandCount + 4;  // 17
inline constexpr std::size_t kRadarSeriesCount = kRadarBandCount;          // 2

// Optical series (13 bands in stack order, then NDVI NDWI NDBI EVI) and then
// radar VV, VH; the 7 statistics per series in StatName order. With both
// stacks the cube has 133 features.
FeatureCube build_feature_cube(const TimeSeriesStack& optical, const TimeSeriesStack& radar);
// Single-sensor cube: 119 features for an index-augmented optical stack,
// 14 for a radar stack.
FeatureCube build_feature_cube(const TimeSeriesStack& stack);

// One ASCII grid per feature, valid_mask.asc and a features.json sidecar.
void write_feature_cube(const FeatureCube& cube, const std::filesystem::path& dir);
FeatureCube read_feature_cube(const std::filesystem::path& dir);

}  // namespace terraperm

#endif  // TERRAPERM_TEMPORAL_H_
