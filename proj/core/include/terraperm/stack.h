#ifndef TERRAPERM_STACK_H_
#define TERRAPERM_STACK_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "terraperm/raster.h"

namespace terraperm {

enum class Sensor { kOptical, kRadar };

std::string_view to_string(Sensor sensor);
// Accepts "optical" / "radar" (case-insensitive).
Sensor parse_sensor(std::string_view text);

// Sentinel-2 L1C band names in instrument order, and the Sentinel-1 dual
// polarisation pair. Stacks order their bands by these lists.
inline constexpr std::size_t kOpticalBandCount = 13;
inline constexpr std::size_t kRadarBandCount = 2;
const std::vector<std::string>& sentinel2_band_names();
const std::vector<std::string>& sentinel1_band_names();

struct ManifestEntry {
  std::string date;  // YYYY-MM-DD
  std::string band;
  std::filesystem::path path;
  int offset_dx = 0;
  int offset_dy = 0;
};

struct StackManifest {
  Sensor sensor = Sensor::kOptical;
  GridGeometry grid;
  double nodata = kDefaultNodata;
  std::vector<ManifestEntry> entries;
};

// Relative entry paths are resolved against the manifest's directory.
StackManifest read_manifest(const std::filesystem::path& path);
// Entry paths are written as given.
void write_manifest(const StackManifest& manifest, const std::filesystem::path& path);

// Dated multi-band grids for one sensor. All grids share one geometry and
// one nodata value; dates are strictly increasing.
class TimeSeriesStack {
 public:
  // `grids` is date-major: grids[d * bands.size() + b].
  TimeSeriesStack(Sensor sensor, std::vector<std::string> dates,
                  std::vector<std::string> bands, std::vector<RasterGrid> grids);

  Sensor sensor() const { return sensor_; }
  const GridGeometry& geometry() const { return grids_.front().geometry(); }
  double nodata() const { return grids_.front().nodata(); }
  const std::vector<std::string>& dates() const { return dates_; }
  const std::vector<std::string>& bands() const { return bands_; }
  std::size_t date_count() const { return dates_.size(); }
  std::size_t band_count() const { return bands_.size(); }
  std::size_t grid_count() const { return grids_.size(); }

  const RasterGrid& grid(std::size_t date, std::size_t band) const {
    return grids_[date * bands_.size() + band];
  }
  const RasterGrid& grid(std::string_view date, std::string_view band) const;
  std::optional<std::size_t> band_index(std::string_view band) const;

  // Copy with one more band series appended; `series` holds one grid per date.
  TimeSeriesStack with_band(std::string name, std::vector<RasterGrid> series) const;
  // Copy with the dates permuted; `order[i]` is the source date of output slot i.
  // Dates keep their labels, so the result is only a valid stack when the
  // labels stay increasing; used to check order-free statistics.
  TimeSeriesStack with_date_order(const std::vector<std::size_t>& order) const;

 private:
  Sensor sensor_;
  std::vector<std::string> dates_;
  std::vector<std::string> bands_;
  std::vector<RasterGrid> grids_;
};

// Reads every entry (in parallel), applies its pixel offset, remaps each
// file's nodata to the manifest's, and verifies geometry and (date, band)
// coverage. The result does not depend on manifest entry order.
TimeSeriesStack load_stack(const StackManifest& manifest);

}  // namespace terraperm

#endif  // TERRAPERM_STACK_H_
