#include "terraperm/synthetic.h"

#include <array>
#include <cmath>
#include <cstdio>
#include <random>
#include <utility>

#include <nlohmann/json.hpp>

#include "terraperm/error.h"
#include "terraperm/indices.h"
#include "terraperm/io_util.h"

namespace terraperm {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Land types that drive the signatures. Remainder splits into four.
enum class Surface { kForest, kCrop, kShrub, kBare, kUrban, kWater };

using Spectrum = std::array<double, kOpticalBandCount>;

// Reflectance in Sentinel-2 band order B01..B12 (incl. B8A).
constexpr Spectrum kForest = {.030, .028, .050, .030, .080, .240, .290,
                              .320, .340, .300, .004, .150, .070};
constexpr Spectrum kCropPeak = {.035, .035, .070, .040, .100, .300, .360,
                                .400, .420, .360, .004, .200, .100};
constexpr Spectrum kCropBare = {.070, .080, .105, .130, .150, .170, .185,
                                .200, .210, .180, .009, .280, .240};
constexpr Spectrum kShrub = {.040, .045, .070, .070, .110, .190, .220,
                             .240, .250, .220, .006, .220, .140};
constexpr Spectrum kBare = {.080, .095, .125, .150, .170, .190, .205,
                            .220, .230, .200, .010, .290, .250};
constexpr Spectrum kUrban = {.085, .095, .115, .130, .150, .170, .185,
                             .200, .210, .180, .010, .270, .230};
constexpr Spectrum kAsphalt = {.060, .065, .070, .075, .080, .085, .090,
                               .095, .100, .085, .008, .120, .110};
constexpr Spectrum kWater = {.060, .055, .045, .030, .020, .012, .010,
                             .008, .008, .006, .002, .005, .004};

struct Backscatter {
  double vv;
  double vh;
};

int days_in_month_2016(int m) {
  static constexpr int kDays[] = {31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return kDays[m];
}

std::string date_of_day(int day_of_year) {
  int m = 0;
  int d = day_of_year;
  while (m < 11 && d > days_in_month_2016(m)) {
    d -= days_in_month_2016(m);
    ++m;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "2016-%02d-%02d", m + 1, d);
  return buf;
}

int day_of_date(const std::string& date) {
  const int m = std::stoi(date.substr(5, 2));
  int day = std::stoi(date.substr(8, 2));
  for (int i = 0; i < m - 1; ++i) day += days_in_month_2016(i);
  return day;
}

// 0 in mid-January, 1 in mid-July.
double summer(int day) { return 0.5 * (1.0 - std::cos(2.0 * kPi * (day - 15) / 366.0)); }
double crop_growth(int day) { return std::exp(-std::pow((day - 140) / 45.0, 2.0)); }

Spectrum surface_spectrum(Surface s, int day) {
  Spectrum out{};
  switch (s) {
    case Surface::kForest:
      for (std::size_t b = 0; b < out.size(); ++b) out[b] = kForest[b] * (0.92 + 0.08 * summer(day));
      break;
    case Surface::kCrop: {
      const double g = crop_growth(day);
      for (std::size_t b = 0; b < out.size(); ++b) out[b] = g * kCropPeak[b] + (1 - g) * kCropBare[b];
      break;
    }
    case Surface::kShrub:
      for (std::size_t b = 0; b < out.size(); ++b) out[b] = kShrub[b] * (0.95 + 0.1 * summer(day));
      break;
    case Surface::kBare:
      // Wet winter soil is darker.
      for (std::size_t b = 0; b < out.size(); ++b) out[b] = kBare[b] * (0.88 + 0.12 * summer(day));
      break;
    case Surface::kUrban: out = kUrban; break;
    case Surface::kWater: out = kWater; break;
  }
  return out;
}

Backscatter surface_backscatter(Surface s, int day) {
  switch (s) {
    case Surface::kForest: return {-8.0, -13.0};
    case Surface::kCrop: {
      const double g = crop_growth(day);
      return {-11.0 + 4.0 * g, -18.0 + 4.0 * g};
    }
    case Surface::kShrub: return {-10.0, -16.0};
    case Surface::kBare: {
      const double wet = 1.0 - summer(day);
      return {-14.0 + 2.0 * wet, -22.0 + 2.0 * wet};
    }
    case Surface::kUrban: return {-5.0, -11.0};
    case Surface::kWater: return {-22.0, -29.0};
  }
  return {0, 0};
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double p) { return 10.0 * std::log10(p); }

// Scene layout in "local meters": u eastward from the left edge, v
// southward from the top edge, on a 1280 m reference square scaled to the
// requested size.
struct Layout {
  GridGeometry g;
  double scale;
  Point at(double u, double v) const {
    return {g.origin_x + u * scale, g.origin_y - v * scale};
  }
  Ring rect(double u0, double v0, double u1, double v1) const {
    const Point a = at(u0, v1);
    const Point b = at(u1, v0);
    return rectangle_ring(a.x, a.y, b.x, b.y);
  }
};

VectorFeature polygon_feature(Ring ring, ClassCode c) {
  return {Polygon{{std::move(ring)}}, c, {}};
}

VectorFeature road_feature(const Layout& l, std::vector<std::pair<double, double>> pts,
                           std::string type) {
  Polyline line;
  for (auto [u, v] : pts) line.vertices.push_back(l.at(u, v));
  return {std::move(line), std::nullopt, std::move(type)};
}

void add_house(const Layout& l, VectorLayer& layer, double u, double v) {
  layer.features.push_back(polygon_feature(l.rect(u, v, u + 20, v + 20), ClassCode::kStructure));
}

}  // namespace

std::vector<std::string> synthetic_dates(int count, int first_day_of_year, int spacing_days) {
  std::vector<std::string> out;
  for (int i = 0; i < count; ++i) out.push_back(date_of_day(first_day_of_year + i * spacing_days));
  return out;
}

SyntheticScene make_synthetic_scene(const SyntheticSceneOptions& o) {
  GridGeometry geom{o.size, o.size, o.origin_x, o.origin_y, o.pixel_size};
  geom.validate();
  const Layout l{geom, o.size * o.pixel_size / 1280.0};

  VectorLayer reference;
  // Town: 3x3 blocks separated by one-pixel streets.
  const double town_u[][2] = {{200, 270}, {280, 370}, {380, 460}};
  const double town_v[][2] = {{180, 270}, {280, 370}, {380, 450}};
  for (const auto& bu : town_u) {
    for (const auto& bv : town_v) {
      reference.features.push_back(
          polygon_feature(l.rect(bu[0], bv[0], bu[1], bv[1]), ClassCode::kStructure));
    }
  }
  // Village.
  reference.features.push_back(polygon_feature(l.rect(800, 860, 870, 930), ClassCode::kStructure));
  reference.features.push_back(polygon_feature(l.rect(880, 860, 960, 930), ClassCode::kStructure));
  reference.features.push_back(polygon_feature(l.rect(800, 940, 900, 1000), ClassCode::kStructure));
  // Scattered houses known to the reference.
  const double houses[][2] = {{120, 700}, {560, 560}, {700, 200}, {1100, 160},
                              {1150, 700}, {640, 1100}, {300, 1150}, {1000, 600}};
  for (const auto& h : houses) add_house(l, reference, h[0], h[1]);
  // Lake.
  {
    Ring ring;
    const int n = 28;
    for (int i = 0; i <= n; ++i) {
      const double t = 2.0 * kPi * (i % n) / n;
      const double r = 1.0 + 0.08 * std::sin(3.0 * t);
      ring.push_back(l.at(900.0 + 170.0 * r * std::cos(t), 400.0 + 110.0 * r * std::sin(t)));
    }
    reference.features.push_back(polygon_feature(std::move(ring), ClassCode::kWater));
  }

  // Small hamlets that exist on the ground but not in the reference map.
  VectorLayer withheld;
  add_house(l, withheld, 1180, 1180);
  add_house(l, withheld, 1210, 1180);
  add_house(l, withheld, 560, 1000);
  add_house(l, withheld, 560, 1030);
  add_house(l, withheld, 1180, 420);

  VectorLayer full = reference;
  for (const auto& f : withheld.features) full.features.push_back(f);

  VectorLayer roads;
  roads.features.push_back(road_feature(l, {{0, 645}, {420, 650}, {800, 640}, {1280, 625}}, "primary"));
  roads.features.push_back(road_feature(l, {{375, 0}, {375, 175}}, "secondary"));
  roads.features.push_back(road_feature(l, {{375, 455}, {385, 645}}, "secondary"));
  roads.features.push_back(road_feature(l, {{800, 640}, {875, 855}}, "secondary"));
  for (double u : {275.0, 375.0}) roads.features.push_back(road_feature(l, {{u, 175}, {u, 455}}, "tertiary"));
  for (double v : {275.0, 375.0}) roads.features.push_back(road_feature(l, {{195, v}, {465, v}}, "tertiary"));
  roads.features.push_back(road_feature(l, {{795, 935}, {965, 935}}, "tertiary"));
  roads.features.push_back(road_feature(l, {{875, 855}, {875, 1005}}, "tertiary"));
  roads.features.push_back(road_feature(l, {{1005, 620}, {1005, 640}}, "track"));
  roads.features.push_back(road_feature(l, {{645, 1095}, {655, 860}, {800, 865}}, "track"));

  const RoadWidthTable widths;
  const BinaryMask road_mask = rasterize_roads(roads, widths, geom);
  LabelRaster truth = fuse_labels(rasterize_polygons(full, geom), road_mask);
  LabelRaster ref_labels = fuse_labels(rasterize_polygons(reference, geom), road_mask);

  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  // Remainder patchwork, 16x16-pixel patches.
  const int patch = 16;
  const int patches = (o.size + patch - 1) / patch;
  std::vector<Surface> patch_type(static_cast<std::size_t>(patches) * patches);
  for (auto& t : patch_type) {
    const double r = uniform(rng);
    t = r < 0.35 ? Surface::kForest : r < 0.65 ? Surface::kCrop : r < 0.85 ? Surface::kShrub : Surface::kBare;
  }
  const std::size_t pixels = geom.pixel_count();
  std::vector<Surface> ground(pixels);   // surface under each pixel
  std::vector<Surface> backdrop(pixels); // surface a road pixel is mixed with
  std::vector<double> gain(pixels);      // persistent per-pixel brightness
  std::vector<double> veg_mix(pixels);   // vegetation fraction in built/bare pixels
  std::vector<double> vv_bias(pixels), vh_bias(pixels);
  for (int row = 0; row < o.size; ++row) {
    for (int col = 0; col < o.size; ++col) {
      const std::size_t i = geom.index(col, row);
      const Surface patch_surface = patch_type[(row / patch) * patches + col / patch];
      switch (truth.at(i)) {
        case ClassCode::kStructure: ground[i] = Surface::kUrban; break;
        case ClassCode::kWater: ground[i] = Surface::kWater; break;
        default: ground[i] = patch_surface; break;
      }
      backdrop[i] = patch_surface;
      // Material brightness varies within bounds; unbounded tails leave
      // lone pixels that no sensor combination can separate.
      double z = normal(rng);
      while (std::abs(z) > 2.0) z = normal(rng);
      gain[i] = 1.0 + 0.06 * z;
      veg_mix[i] = 0.25 * uniform(rng);
      vv_bias[i] = 0.8 * normal(rng);
      vh_bias[i] = 0.8 * normal(rng);
    }
  }
  // Roads through built-up blocks sit on an urban backdrop.
  const LabelRaster cos_full = rasterize_polygons(full, geom);
  for (std::size_t i = 0; i < pixels; ++i) {
    if (cos_full.at(i) == ClassCode::kStructure) backdrop[i] = Surface::kUrban;
  }

  auto pixel_spectrum = [&](std::size_t i, int day) {
    const ClassCode c = truth.at(i);
    Spectrum s = surface_spectrum(ground[i], day);
    if (c == ClassCode::kStructure) {
      const Spectrum v = surface_spectrum(Surface::kForest, day);
      for (std::size_t b = 0; b < s.size(); ++b) s[b] = (1 - veg_mix[i]) * s[b] + veg_mix[i] * v[b];
    } else if (c == ClassCode::kRoad) {
      const Spectrum bg = surface_spectrum(backdrop[i], day);
      for (std::size_t b = 0; b < s.size(); ++b) s[b] = 0.7 * kAsphalt[b] + 0.3 * bg[b];
    } else if (ground[i] == Surface::kBare) {
      // Scattered trees and shrubs, as around buildings: optically this is
      // close to a built-up pixel.
      const Spectrum v = surface_spectrum(Surface::kForest, day);
      for (std::size_t b = 0; b < s.size(); ++b) s[b] = (1 - veg_mix[i]) * s[b] + veg_mix[i] * v[b];
    }
    return s;
  };
  auto pixel_backscatter = [&](std::size_t i, int day) {
    const ClassCode c = truth.at(i);
    Backscatter b = surface_backscatter(ground[i], day);
    if (c == ClassCode::kRoad) {
      const Backscatter bg = surface_backscatter(backdrop[i], day);
      b.vv = linear_to_db(0.7 * db_to_linear(-16.0) + 0.3 * db_to_linear(bg.vv));
      b.vh = linear_to_db(0.7 * db_to_linear(-24.0) + 0.3 * db_to_linear(bg.vh));
    }
    return b;
  };

  const double nodata = kDefaultNodata;
  const auto optical_dates = synthetic_dates(o.optical_dates, 10, 340 / std::max(1, o.optical_dates - 1));
  std::vector<RasterGrid> optical_grids;
  for (const auto& date : optical_dates) {
    const int day = day_of_date(date);
    const double illumination = 1.0 + 0.02 * normal(rng);
    std::vector<std::uint8_t> cloud(pixels, 0);
    const int clouds = static_cast<int>(uniform(rng) * (o.max_clouds_per_date + 1));
    for (int k = 0; k < clouds; ++k) {
      const double cu = uniform(rng) * o.size;
      const double cv = uniform(rng) * o.size;
      const double radius = 4.0 + 8.0 * uniform(rng);  // pixels
      for (int row = 0; row < o.size; ++row) {
        for (int col = 0; col < o.size; ++col) {
          if (std::hypot(col + 0.5 - cu, row + 0.5 - cv) <= radius) cloud[geom.index(col, row)] = 1;
        }
      }
    }
    std::vector<std::vector<double>> bands(kOpticalBandCount, std::vector<double>(pixels));
    for (std::size_t i = 0; i < pixels; ++i) {
      const Spectrum s = pixel_spectrum(i, day);
      for (std::size_t b = 0; b < kOpticalBandCount; ++b) {
        const double v = s[b] * gain[i] * illumination + o.optical_noise * normal(rng);
        bands[b][i] = cloud[i] ? nodata : std::max(v, 0.001);
      }
    }
    for (auto& b : bands) optical_grids.emplace_back(geom, nodata, std::move(b));
  }

  const auto radar_dates = synthetic_dates(o.radar_dates, 15, 340 / std::max(1, o.radar_dates - 1));
  std::vector<RasterGrid> radar_grids;
  for (const auto& date : radar_dates) {
    const int day = day_of_date(date);
    std::vector<double> vv(pixels), vh(pixels);
    for (std::size_t i = 0; i < pixels; ++i) {
      const Backscatter b = pixel_backscatter(i, day);
      vv[i] = b.vv + vv_bias[i] + o.radar_noise_db * normal(rng);
      vh[i] = b.vh + vh_bias[i] + o.radar_noise_db * normal(rng);
    }
    radar_grids.emplace_back(geom, nodata, std::move(vv));
    radar_grids.emplace_back(geom, nodata, std::move(vh));
  }

  return SyntheticScene{geom,
                        std::move(reference),
                        std::move(full),
                        std::move(roads),
                        std::move(withheld),
                        std::move(truth),
                        std::move(ref_labels),
                        TimeSeriesStack(Sensor::kOptical, optical_dates, sentinel2_band_names(),
                                        std::move(optical_grids)),
                        TimeSeriesStack(Sensor::kRadar, radar_dates, sentinel1_band_names(),
                                        std::move(radar_grids))};
}

namespace {

struct Shift {
  std::size_t date;
  int dx;
  int dy;
};

std::vector<Shift> optical_shifts(const SyntheticSceneOptions& o, std::size_t dates) {
  if (!o.misalign || dates < 12) return {};
  return {{4, 1, 0}, {11, 0, 1}};
}

std::vector<Shift> radar_shifts(const SyntheticSceneOptions& o, std::size_t dates) {
  if (!o.misalign || dates < 4) return {};
  return {{3, 0, -1}};
}

StackManifest write_stack(const TimeSeriesStack& stack, const std::filesystem::path& dir,
                          const std::vector<Shift>& shifts) {
  StackManifest m;
  m.sensor = stack.sensor();
  m.grid = stack.geometry();
  m.nodata = stack.nodata();
  for (std::size_t d = 0; d < stack.date_count(); ++d) {
    int dx = 0, dy = 0;
    for (const auto& s : shifts) {
      if (s.date == d) {
        dx = s.dx;
        dy = s.dy;
      }
    }
    for (std::size_t b = 0; b < stack.band_count(); ++b) {
      const std::string file = stack.dates()[d] + "_" + stack.bands()[b] + ".asc";
      // Stored misregistered; the manifest offset undoes it on load.
      write_ascii_grid(apply_offset(stack.grid(d, b), -dx, -dy), dir / file);
      m.entries.push_back({stack.dates()[d], stack.bands()[b], file, dx, dy});
    }
  }
  write_manifest(m, dir / "manifest.json");
  return m;
}

}  // namespace

std::filesystem::path write_synthetic_scene(const SyntheticScene& scene,
                                            const std::filesystem::path& dir,
                                            const SyntheticSceneOptions& options) {
  std::filesystem::create_directories(dir);
  write_stack(scene.optical, dir / "optical", optical_shifts(options, scene.optical.date_count()));
  write_stack(scene.radar, dir / "radar", radar_shifts(options, scene.radar.date_count()));
  write_geojson(scene.land_cover, dir / "vectors" / "land_cover.geojson");
  write_geojson(scene.land_cover_full, dir / "vectors" / "land_cover_full.geojson");
  write_geojson(scene.roads, dir / "vectors" / "roads.geojson");
  write_geojson(scene.withheld, dir / "vectors" / "withheld.geojson");
  write_ascii_grid(scene.truth.to_grid(), dir / "truth" / "truth.asc");

  const nlohmann::json config = {
      {"optical_manifest", "optical/manifest.json"},
      {"radar_manifest", "radar/manifest.json"},
      {"sensors", {"optical", "radar"}},
      {"band_roles", {{"blue", "B02"}, {"green", "B03"}, {"red", "B04"}, {"nir", "B08"}, {"swir", "B11"}}},
      {"land_cover", "vectors/land_cover.geojson"},
      {"roads", "vectors/roads.geojson"},
      {"road_widths",
       {{"types", {{"primary", 10.0}, {"secondary", 8.0}, {"tertiary", 5.0}}}, {"default", 5.0}}},
      {"class_precedence", {"road", "water", "structure", "remainder"}},
      {"sampling",
       {{"train_size", 4000}, {"train_seed", 1}, {"validation_size", 3000}, {"validation_seed", 2}}},
      {"boost",
       {{"rounds", 60},
        {"learning_rate", 0.2},
        {"max_depth", 5},
        {"lambda", 1.0},
        {"gamma", 0.0},
        {"min_child_hessian", 1.0},
        {"bins", 64},
        {"seed", 0}}},
      {"fgc", {{"radius_m", 100.0}, {"include", {"structure", "road"}}}},
      {"output_dir", "out"},
      {"threads", 1}};
  const auto path = dir / "pipeline.json";
  write_file_atomic(path, config.dump(2) + "\n");
  return path;
}

}  // namespace terraperm
