#ifndef TERRAPERM_SYNTHETIC_H_
#define TERRAPERM_SYNTHETIC_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "terraperm/labels.h"
#include "terraperm/stack.h"
#include "terraperm/vector.h"

namespace terraperm {

// A desk-scale "town + roads + lake" scene with class-dependent spectral
// and backscatter signatures. Remainder land is a patchwork of forest,
// crop, shrub and bare soil; bare soil is optically close to built-up land
// and only radar separates them well.
struct SyntheticSceneOptions {
  int size = 128;
  double pixel_size = 10.0;
  double origin_x = 500000.0;
  double origin_y = 4380000.0;
  int optical_dates = 18;
  int radar_dates = 12;
  std::uint64_t seed = 2016;
  double optical_noise = 0.012;  // reflectance, per acquisition
  double radar_noise_db = 1.5;   // per acquisition
  int max_clouds_per_date = 2;
  // Two optical dates and one radar date are written shifted by one pixel,
  // with compensating manifest offsets.
  bool misalign = true;
};

struct SyntheticScene {
  GridGeometry geometry;
  VectorLayer land_cover;            // reference polygons (withheld sites removed)
  VectorLayer land_cover_full;       // everything that is really on the ground
  VectorLayer roads;
  VectorLayer withheld;              // structures missing from the reference
  LabelRaster truth;                 // fused labels of land_cover_full + roads
  LabelRaster reference;             // fused labels of land_cover + roads
  TimeSeriesStack optical;           // 13 bands, aligned
  TimeSeriesStack radar;             // VV, VH, aligned
};

SyntheticScene make_synthetic_scene(const SyntheticSceneOptions& options = {});

// Writes the scene as pipeline inputs:
//   optical/ radar/      ASCII grids + manifest.json (misaligned files carry offsets)
//   vectors/             land_cover.geojson, land_cover_full.geojson,
//                        roads.geojson, withheld.geojson
//   truth/truth.asc
//   pipeline.json        ready-to-run config with output_dir "out"
// Returns the path of pipeline.json.
std::filesystem::path write_synthetic_scene(const SyntheticScene& scene,
                                            const std::filesystem::path& dir,
                                            const SyntheticSceneOptions& options = {});

// Dates used by the generator (ISO strings, strictly increasing).
std::vector<std::string> synthetic_dates(int count, int first_day_of_year, int spacing_days);

}  // namespace terraperm

#endif  // TERRAPERM_SYNTHETIC_H_
