#include "terraperm/vector.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "terraperm/error.h"
#include "terraperm/io_util.h"

namespace terraperm {

using nlohmann::json;

std::string_view to_string(ClassCode c) {
  switch (c) {
    case ClassCode::kRemainder: return "remainder";
    case ClassCode::kStructure: return "structure";
    case ClassCode::kRoad: return "road";
    case ClassCode::kWater: return "water";
  }
  return "?";
}

ClassCode class_from_code(int code) {
  if (code < 0 || code >= static_cast<int>(kClassCount)) {
    throw InvalidArgument("class code " + std::to_string(code) + " outside [0, 4)");
  }
  return static_cast<ClassCode>(code);
}

ClassCode parse_class(std::string_view text) {
  std::string t(text);
  std::transform(t.begin(), t.end(), t.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (ClassCode c : kAllClasses) {
    if (t == to_string(c)) return c;
  }
  int code = -1;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), code);
  if (ec == std::errc() && ptr == t.data() + t.size()) return class_from_code(code);
  throw InvalidArgument("unknown class '" + std::string(text) + "'");
}

Ring rectangle_ring(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}};
}

namespace {

bool finite(const Point& p) { return std::isfinite(p.x) && std::isfinite(p.y); }

Point parse_point(const json& j) {
  if (!j.is_array() || j.size() < 2) throw ParseError("coordinate must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

std::vector<Point> parse_points(const json& j) {
  std::vector<Point> out;
  for (const auto& p : j) out.push_back(parse_point(p));
  return out;
}

Polygon parse_polygon(const json& rings) {
  Polygon poly;
  for (const auto& r : rings) poly.rings.push_back(parse_points(r));
  return poly;
}

json points_json(const std::vector<Point>& pts) {
  json arr = json::array();
  for (const auto& p : pts) arr.push_back({p.x, p.y});
  return arr;
}

}  // namespace

void VectorLayer::validate() const {
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto where = "feature " + std::to_string(i) + ": ";
    if (const auto* poly = std::get_if<Polygon>(&features[i].geometry)) {
      if (poly->rings.empty()) throw InvalidArgument(where + "polygon has no rings");
      for (const auto& ring : poly->rings) {
        if (ring.size() < 4) throw InvalidArgument(where + "ring needs at least 4 vertices");
        if (!(ring.front() == ring.back())) throw InvalidArgument(where + "ring is not closed");
        if (!std::all_of(ring.begin(), ring.end(), finite)) {
          throw InvalidArgument(where + "non-finite coordinate");
        }
      }
    } else {
      const auto& line = std::get<Polyline>(features[i].geometry);
      if (line.vertices.size() < 2) throw InvalidArgument(where + "polyline needs 2 vertices");
      if (!std::all_of(line.vertices.begin(), line.vertices.end(), finite)) {
        throw InvalidArgument(where + "non-finite coordinate");
      }
    }
  }
}

VectorLayer read_geojson(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": invalid GeoJSON: " + e.what());
  }
  VectorLayer layer;
  try {
    if (doc.value("type", "") != "FeatureCollection") {
      throw ParseError("top-level object must be a FeatureCollection");
    }
    for (const auto& f : doc.at("features")) {
      const auto& geom = f.at("geometry");
      const std::string type = geom.at("type").get<std::string>();
      const json props = f.contains("properties") && f["properties"].is_object()
                             ? f["properties"]
                             : json::object();
      const auto& coords = geom.at("coordinates");
      if (type == "Polygon" || type == "MultiPolygon") {
        if (!props.contains("class")) throw ParseError("polygon feature lacks a 'class' property");
        const auto& c = props["class"];
        const ClassCode code = c.is_number_integer() ? class_from_code(c.get<int>())
                                                     : parse_class(c.get<std::string>());
        if (type == "Polygon") {
          layer.features.push_back({parse_polygon(coords), code, {}});
        } else {
          for (const auto& part : coords) layer.features.push_back({parse_polygon(part), code, {}});
        }
      } else if (type == "LineString" || type == "MultiLineString") {
        const std::string road_type = props.value("road_type", std::string{});
        if (type == "LineString") {
          layer.features.push_back({Polyline{parse_points(coords)}, std::nullopt, road_type});
        } else {
          for (const auto& part : coords) {
            layer.features.push_back({Polyline{parse_points(part)}, std::nullopt, road_type});
          }
        }
      } else {
        throw ParseError("unsupported geometry type " + type);
      }
    }
    layer.validate();
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return layer;
}

void write_geojson(const VectorLayer& layer, const std::filesystem::path& path) {
  json features = json::array();
  for (const auto& f : layer.features) {
    json feature = {{"type", "Feature"}};
    if (const auto* poly = std::get_if<Polygon>(&f.geometry)) {
      json rings = json::array();
      for (const auto& r : poly->rings) rings.push_back(points_json(r));
      feature["geometry"] = {{"type", "Polygon"}, {"coordinates", rings}};
      feature["properties"] = {
          {"class", f.class_code ? std::string(to_string(*f.class_code)) : "remainder"}};
    } else {
      const auto& line = std::get<Polyline>(f.geometry);
      feature["geometry"] = {{"type", "LineString"}, {"coordinates", points_json(line.vertices)}};
      feature["properties"] = {{"road_type", f.road_type}};
    }
    features.push_back(std::move(feature));
  }
  const json doc = {{"type", "FeatureCollection"}, {"features", features}};
  write_file_atomic(path, doc.dump() + "\n");
}

}  // namespace terraperm
