#include "terraperm/labels.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "terraperm/error.h"
#include "terraperm/io_util.h"

namespace terraperm {

LabelRaster::LabelRaster(GridGeometry geometry, ClassCode fill) : geometry_(geometry) {
  geometry_.validate();
  codes_.assign(geometry_.pixel_count(), static_cast<std::uint8_t>(fill));
}

std::array<std::size_t, kClassCount> LabelRaster::class_counts() const {
  std::array<std::size_t, kClassCount> counts{};
  for (auto c : codes_) ++counts[c];
  return counts;
}

RasterGrid LabelRaster::to_grid() const {
  std::vector<double> v(codes_.begin(), codes_.end());
  return RasterGrid(geometry_, kDefaultNodata, std::move(v));
}

LabelRaster LabelRaster::from_grid(const RasterGrid& grid) {
  LabelRaster out(grid.geometry(), ClassCode::kRemainder);
  const auto v = grid.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = v[i];
    if (x != std::floor(x) || x < 0 || x >= static_cast<double>(kClassCount)) {
      throw ParseError("label raster cell " + std::to_string(i) + " holds " + format_double(x) +
                       ", not a class code");
    }
    out.codes_[i] = static_cast<std::uint8_t>(x);
  }
  return out;
}

BinaryMask::BinaryMask(GridGeometry geometry, bool fill) : geometry_(geometry) {
  geometry_.validate();
  bits_.assign(geometry_.pixel_count(), fill ? 1 : 0);
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

RasterGrid BinaryMask::to_grid() const {
  std::vector<double> v(bits_.begin(), bits_.end());
  return RasterGrid(geometry_, kDefaultNodata, std::move(v));
}

BinaryMask BinaryMask::from_grid(const RasterGrid& grid) {
  BinaryMask out(grid.geometry());
  const auto v = grid.values();
  for (std::size_t i = 0; i < v.size(); ++i) out.bits_[i] = (v[i] != 0.0 && v[i] != grid.nodata());
  return out;
}

void validate_precedence(const ClassPrecedence& precedence) {
  std::array<int, kClassCount> seen{};
  for (ClassCode c : precedence) ++seen[code_of(c)];
  for (int s : seen) {
    if (s != 1) throw InvalidArgument("class precedence must list each class exactly once");
  }
}

void RoadWidthTable::validate() const {
  auto check = [&](const std::string& name, double w) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw InvalidArgument("road width for " + name + " must be positive");
    }
    if (!allow_out_of_range && (w < 5.0 || w > 10.0)) {
      throw InvalidArgument("road width for " + name + " is " + format_double(w) +
                            " m, outside [5, 10] (set allow_out_of_range to override)");
    }
  };
  for (const auto& [name, w] : widths) check(name, w);
  if (default_width) check("default", *default_width);
}

double RoadWidthTable::width_for(const std::string& road_type) const {
  const auto it = widths.find(road_type);
  if (it != widths.end()) return it->second;
  if (default_width) return *default_width;
  throw InvalidArgument("road type '" + road_type + "' has no width and no default is set");
}

double point_segment_distance(Point p, Point a, Point b) {
  const double vx = b.x - a.x;
  const double vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((p.x - a.x) * vx + (p.y - a.y) * vy) / len2, 0.0, 1.0);
  const double dx = p.x - (a.x + t * vx);
  const double dy = p.y - (a.y + t * vy);
  return std::hypot(dx, dy);
}

namespace {

// First column whose center is >= x (may be `width`).
int first_center_at_or_after(const GridGeometry& g, double x) {
  int c = static_cast<int>(std::ceil((x - g.origin_x) / g.pixel_size - 0.5));
  c = std::clamp(c, 0, g.width);
  while (c > 0 && g.center_x(c - 1) >= x) --c;
  while (c < g.width && g.center_x(c) < x) ++c;
  return c;
}

}  // namespace

LabelRaster rasterize_polygons(const VectorLayer& layer, const GridGeometry& grid,
                               const ClassPrecedence& precedence) {
  grid.validate();
  validate_precedence(precedence);
  std::array<int, kClassCount> rank{};  // larger wins
  for (std::size_t i = 0; i < kClassCount; ++i) {
    rank[code_of(precedence[i])] = static_cast<int>(kClassCount - i);
  }
  struct Item {
    const Polygon* polygon;
    ClassCode code;
    double min_y, max_y;
  };
  std::vector<Item> items;
  for (std::size_t i = 0; i < layer.features.size(); ++i) {
    const auto& f = layer.features[i];
    const auto* poly = std::get_if<Polygon>(&f.geometry);
    if (!poly) {
      throw InvalidArgument("rasterize_polygons: feature " + std::to_string(i) +
                            " is not a polygon");
    }
    if (!f.class_code) {
      throw InvalidArgument("rasterize_polygons: feature " + std::to_string(i) + " has no class");
    }
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& ring : poly->rings) {
      for (const auto& p : ring) {
        lo = std::min(lo, p.y);
        hi = std::max(hi, p.y);
      }
    }
    items.push_back({poly, *f.class_code, lo, hi});
  }

  std::vector<std::uint8_t> codes(grid.pixel_count(), code_of(ClassCode::kRemainder));
#pragma omp parallel
  {
    std::vector<double> xs;
#pragma omp for schedule(static)
    for (long row = 0; row < grid.height; ++row) {
      const double py = grid.center_y(static_cast<int>(row));
      for (const auto& item : items) {
        if (py < item.min_y || py > item.max_y) continue;
        xs.clear();
        for (const auto& ring : item.polygon->rings) {
          for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
            const Point& a = ring[i];
            const Point& b = ring[i + 1];
            if ((a.y > py) != (b.y > py)) {
              xs.push_back((b.x - a.x) * (py - a.y) / (b.y - a.y) + a.x);
            }
          }
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
          const int c0 = first_center_at_or_after(grid, xs[k]);
          const int c1 = first_center_at_or_after(grid, xs[k + 1]);
          for (int col = c0; col < c1; ++col) {
            auto& cell = codes[grid.index(col, static_cast<int>(row))];
            if (rank[code_of(item.code)] > rank[cell]) cell = static_cast<std::uint8_t>(item.code);
          }
        }
      }
    }
  }
  LabelRaster out(grid, ClassCode::kRemainder);
  for (std::size_t i = 0; i < codes.size(); ++i) out.set(i, static_cast<ClassCode>(codes[i]));
  return out;
}

BinaryMask rasterize_roads(const VectorLayer& layer, const RoadWidthTable& widths,
                           const GridGeometry& grid) {
  grid.validate();
  struct Segment {
    Point a, b;
    double half;
  };
  std::vector<Segment> segments;
  for (std::size_t i = 0; i < layer.features.size(); ++i) {
    const auto& f = layer.features[i];
    const auto* line = std::get_if<Polyline>(&f.geometry);
    if (!line) {
      throw InvalidArgument("rasterize_roads: feature " + std::to_string(i) +
                            " is not a polyline");
    }
    const double half = widths.width_for(f.road_type) / 2.0;
    for (std::size_t k = 0; k + 1 < line->vertices.size(); ++k) {
      segments.push_back({line->vertices[k], line->vertices[k + 1], half});
    }
  }

  std::vector<std::uint8_t> bits(grid.pixel_count(), 0);
#pragma omp parallel for schedule(static)
  for (long row = 0; row < grid.height; ++row) {
    const double py = grid.center_y(static_cast<int>(row));
    for (const auto& s : segments) {
      if (py < std::min(s.a.y, s.b.y) - s.half || py > std::max(s.a.y, s.b.y) + s.half) continue;
      const double x_lo = std::min(s.a.x, s.b.x) - s.half;
      const double x_hi = std::max(s.a.x, s.b.x) + s.half;
      const int c0 = std::max(0, static_cast<int>(std::floor((x_lo - grid.origin_x) / grid.pixel_size)) - 1);
      const int c1 = std::min(grid.width, static_cast<int>(std::ceil((x_hi - grid.origin_x) / grid.pixel_size)) + 1);
      for (int col = c0; col < c1; ++col) {
        auto& cell = bits[grid.index(col, static_cast<int>(row))];
        if (cell) continue;
        if (point_segment_distance({grid.center_x(col), py}, s.a, s.b) <= s.half) cell = 1;
      }
    }
  }
  BinaryMask out(grid);
  for (std::size_t i = 0; i < bits.size(); ++i) out.set(i, bits[i] != 0);
  return out;
}

LabelRaster fuse_labels(const LabelRaster& cos, const BinaryMask& roads) {
  require_same_geometry(cos.geometry(), roads.geometry(), "fuse_labels");
  LabelRaster out = cos;
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    if (roads.at(i)) out.set(i, ClassCode::kRoad);
  }
  return out;
}

}  // namespace terraperm
