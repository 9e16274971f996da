#ifndef TERRAPERM_INDICES_H_
#define TERRAPERM_INDICES_H_

#include <array>
#include <string>
#include <string_view>

#include "terraperm/raster.h"
#include "terraperm/stack.h"

namespace terraperm {

enum class IndexName { kNdvi, kNdwi, kNdbi, kEvi };

inline constexpr std::array<IndexName, 4> kAllIndices = {IndexName::kNdvi, IndexName::kNdwi,
                                                         IndexName::kNdbi, IndexName::kEvi};

std::string_view to_string(IndexName index);

// Optical band feeding each role. Defaults are the Sentinel-2 10 m bands
// plus B11 for SWIR.
struct BandRoleMap {
  std::string blue = "B02";
  std::string green = "B03";
  std::string red = "B04";
  std::string nir = "B08";
  std::string swir = "B11";

  // Throws InvalidArgument unless all five roles name distinct bands of `stack`.
  void validate(const TimeSeriesStack& stack) const;
};

inline constexpr double kDenominatorEpsilon = 1e-12;

// (a - b) / (a + b); nodata when either input is nodata or |a + b| < 1e-12.
// The output takes a's nodata value.
RasterGrid normalized_difference(const RasterGrid& a, const RasterGrid& b);

// 2.5 (nir - red) / (nir + 6 red - 7.5 blue + 1).
RasterGrid compute_evi(const RasterGrid& nir, const RasterGrid& red, const RasterGrid& blue);

// Appends NDVI, NDWI, NDBI and EVI series (in that order) to an optical stack:
//   NDVI = nd(NIR, Red), NDWI = nd(Green, NIR), NDBI = nd(SWIR, NIR).
TimeSeriesStack derive_index_series(const TimeSeriesStack& stack, const BandRoleMap& roles);

}  // namespace terraperm

#endif  // TERRAPERM_INDICES_H_
