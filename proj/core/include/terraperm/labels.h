#ifndef TERRAPERM_LABELS_H_
#define TERRAPERM_LABELS_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "terraperm/classes.h"
#include "terraperm/raster.h"
#include "terraperm/vector.h"

namespace terraperm {

// Per-pixel class codes on a grid.
class LabelRaster {
 public:
  LabelRaster() = default;
  LabelRaster(GridGeometry geometry, ClassCode fill);

  const GridGeometry& geometry() const { return geometry_; }
  std::size_t pixel_count() const { return codes_.size(); }
  ClassCode at(std::size_t index) const { return static_cast<ClassCode>(codes_[index]); }
  ClassCode at(int col, int row) const { return at(geometry_.index(col, row)); }
  void set(std::size_t index, ClassCode c) { codes_[index] = static_cast<std::uint8_t>(c); }
  void set(int col, int row, ClassCode c) { set(geometry_.index(col, row), c); }

  std::array<std::size_t, kClassCount> class_counts() const;

  RasterGrid to_grid() const;
  // Throws ParseError on cells that are not one of the four codes.
  static LabelRaster from_grid(const RasterGrid& grid);

  friend bool operator==(const LabelRaster&, const LabelRaster&) = default;

 private:
  GridGeometry geometry_;
  std::vector<std::uint8_t> codes_;
};

// Boolean grid (road masks, fuel-management masks).
class BinaryMask {
 public:
  BinaryMask() = default;
  explicit BinaryMask(GridGeometry geometry, bool fill = false);

  const GridGeometry& geometry() const { return geometry_; }
  std::size_t pixel_count() const { return bits_.size(); }
  bool at(std::size_t index) const { return bits_[index] != 0; }
  bool at(int col, int row) const { return at(geometry_.index(col, row)); }
  void set(std::size_t index, bool v) { bits_[index] = v ? 1 : 0; }
  void set(int col, int row, bool v) { set(geometry_.index(col, row), v); }
  std::size_t count() const;

  RasterGrid to_grid() const;
  // Nonzero, non-nodata cells are true.
  static BinaryMask from_grid(const RasterGrid& grid);

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  GridGeometry geometry_;
  std::vector<std::uint8_t> bits_;
};

// Highest-priority class first. Where polygons of different classes overlap
// the pixel takes the class listed earliest.
using ClassPrecedence = std::array<ClassCode, kClassCount>;
inline constexpr ClassPrecedence kDefaultPrecedence = {ClassCode::kRoad, ClassCode::kWater,
                                                       ClassCode::kStructure,
                                                       ClassCode::kRemainder};
// Throws InvalidArgument unless every class appears exactly once.
void validate_precedence(const ClassPrecedence& precedence);

// Road full widths in meters by OSM road type.
struct RoadWidthTable {
  std::map<std::string, double> widths = {{"primary", 10.0}, {"secondary", 8.0},
                                          {"tertiary", 5.0}};
  std::optional<double> default_width = 5.0;
  bool allow_out_of_range = false;  // lifts the [5, 10] m bound

  // Throws InvalidArgument on non-positive widths, or widths outside [5, 10]
  // unless allow_out_of_range.
  void validate() const;
  // Throws InvalidArgument for an unknown type without a default.
  double width_for(const std::string& road_type) const;
};

// Pixel takes a polygon's class iff its center is inside the polygon by the
// even-odd rule; a center exactly on an edge belongs to the half-open
// interior [left, right) x [bottom, top). Uncovered pixels are Remainder.
LabelRaster rasterize_polygons(const VectorLayer& layer, const GridGeometry& grid,
                               const ClassPrecedence& precedence = kDefaultPrecedence);

// Pixel is road iff its center lies within width/2 of some segment of a road.
BinaryMask rasterize_roads(const VectorLayer& layer, const RoadWidthTable& widths,
                           const GridGeometry& grid);

// Roads override every land-cover class.
LabelRaster fuse_labels(const LabelRaster& cos, const BinaryMask& roads);

double point_segment_distance(Point p, Point a, Point b);

}  // namespace terraperm

#endif  // TERRAPERM_LABELS_H_
