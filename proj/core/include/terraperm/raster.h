#ifndef TERRAPERM_RASTER_H_
#define TERRAPERM_RASTER_H_

#include <cstddef>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace terraperm {

inline constexpr double kDefaultNodata = -9999.0;

// Placement of a north-up grid with square pixels. origin_x/origin_y is the
// top-left corner in projected meters.
struct GridGeometry {
  int width = 0;
  int height = 0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  double pixel_size = 1.0;

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  std::size_t index(int col, int row) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(col);
  }
  double center_x(int col) const { return origin_x + (col + 0.5) * pixel_size; }
  double center_y(int row) const { return origin_y - (row + 0.5) * pixel_size; }

  // Throws InvalidArgument unless width, height and pixel_size are positive.
  void validate() const;

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

// Throws GeometryError naming `what` when the two geometries differ.
void require_same_geometry(const GridGeometry& a, const GridGeometry& b,
                           const char* what);

// Single-band grid of doubles, row-major, row 0 northernmost. Cells equal to
// `nodata` (exact comparison) are missing.
class RasterGrid {
 public:
  RasterGrid() = default;
  // Filled with `fill`.
  RasterGrid(GridGeometry geometry, double nodata, double fill);
  // Takes ownership of `values`; its size must be width*height.
  RasterGrid(GridGeometry geometry, double nodata, std::vector<double> values);

  const GridGeometry& geometry() const { return geometry_; }
  int width() const { return geometry_.width; }
  int height() const { return geometry_.height; }
  double nodata() const { return nodata_; }

  double at(int col, int row) const { return values_[geometry_.index(col, row)]; }
  double& at(int col, int row) { return values_[geometry_.index(col, row)]; }
  bool is_nodata(int col, int row) const { return at(col, row) == nodata_; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  friend bool operator==(const RasterGrid&, const RasterGrid&) = default;

 private:
  GridGeometry geometry_;
  double nodata_ = kDefaultNodata;
  std::vector<double> values_;
};

// ESRI ASCII grid. Header keys are case-insensitive; xllcenter/yllcenter are
// accepted as well as the corner form. NODATA_value defaults to -9999.
RasterGrid read_ascii_grid(const std::filesystem::path& path);

// Values are printed in shortest round-trip form, so a read of the written
// file reproduces the grid bit for bit. The write goes through a temporary
// file and a rename.
void write_ascii_grid(const RasterGrid& grid, const std::filesystem::path& path);

// out(col,row) = in(col-dx, row-dy); cells shifted in from outside are nodata.
RasterGrid apply_offset(const RasterGrid& grid, int dx, int dy);

}  // namespace terraperm

#endif  // TERRAPERM_RASTER_H_
