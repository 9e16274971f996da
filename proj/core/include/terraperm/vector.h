#ifndef TERRAPERM_VECTOR_H_
#define TERRAPERM_VECTOR_H_

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "terraperm/classes.h"

namespace terraperm {

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

// Closed ring: the last vertex repeats the first.
using Ring = std::vector<Point>;

// Outer ring plus holes; containment is by the even-odd rule over all rings.
struct Polygon {
  std::vector<Ring> rings;
};

struct Polyline {
  std::vector<Point> vertices;
};

struct VectorFeature {
  std::variant<Polygon, Polyline> geometry;
  std::optional<ClassCode> class_code;  // land-cover polygons
  std::string road_type;                // road polylines
};

struct VectorLayer {
  std::vector<VectorFeature> features;

  // Throws InvalidArgument on non-finite coordinates, open or degenerate rings,
  // or polylines with fewer than two vertices.
  void validate() const;
};

// Axis-aligned rectangle as a closed ring.
Ring rectangle_ring(double x0, double y0, double x1, double y1);

// GeoJSON FeatureCollection. Polygon and MultiPolygon (one feature per part)
// carry a `class` property (code or name); LineString and MultiLineString
// carry `road_type`.
VectorLayer read_geojson(const std::filesystem::path& path);
void write_geojson(const VectorLayer& layer, const std::filesystem::path& path);

}  // namespace terraperm

#endif  // TERRAPERM_VECTOR_H_
