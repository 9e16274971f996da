#include "terraperm/temporal.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <utility>

#include <nlohmann/json.hpp>

#include "terraperm/error.h"
#include "terraperm/indices.h"
#include "terraperm/io_util.h"

namespace terraperm {

using nlohmann::json;

std::string_view to_string(StatName stat) {
  switch (stat) {
    case StatName::kMean: return "mean";
    case StatName::kP0: return "p0";
    case StatName::kP25: return "p25";
    case StatName::kP50: return "p50";
    case StatName::kP75: return "p75";
    case StatName::kP100: return "p100";
    case StatName::kVariance: return "variance";
  }
  return "?";
}

double percentile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw InvalidArgument("percentile of an empty list");
  if (!(p >= 0.0 && p <= 100.0)) throw InvalidArgument("percentile rank must lie in [0, 100]");
  const double rank = static_cast<double>(sorted.size() - 1) * p / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = static_cast<std::size_t>(std::ceil(rank));
  if (lo == hi) return sorted[lo];
  return sorted[lo] + (rank - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double percentile(std::span<const double> values, double p) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return percentile_sorted(sorted, p);
}

namespace {

// `scratch` is reused across calls to avoid per-pixel allocation.
TemporalStats stats_into(std::span<const double> series, double nodata,
                         std::vector<double>& scratch) {
  scratch.clear();
  for (double v : series) {
    if (v != nodata && !std::isnan(v)) scratch.push_back(v);
  }
  TemporalStats out;
  if (scratch.size() < kMinValidObservations) {
    out.fill(nodata);
    return out;
  }
  // Moments over the sorted values so the result is independent of date
  // order; shifted two-pass gives exact zero variance for constant series.
  std::sort(scratch.begin(), scratch.end());
  const double n = static_cast<double>(scratch.size());
  const double shift = scratch.front();
  double offset_sum = 0.0;
  for (double v : scratch) offset_sum += v - shift;
  const double mean = shift + offset_sum / n;
  double ss = 0.0;
  for (double v : scratch) ss += (v - mean) * (v - mean);

  out[0] = mean;
  out[1] = scratch.front();
  out[2] = percentile_sorted(scratch, 25.0);
  out[3] = percentile_sorted(scratch, 50.0);
  out[4] = percentile_sorted(scratch, 75.0);
  out[5] = scratch.back();
  out[6] = ss / n;
  return out;
}

struct SeriesRef {
  const TimeSeriesStack* stack;
  std::size_t band;
};

void append_series(const TimeSeriesStack& stack, std::vector<SeriesRef>& series,
                   std::vector<std::string>& names) {
  if (stack.sensor() == Sensor::kOptical) {
    if (stack.band_count() != kOpticalSeriesCount) {
      throw InvalidArgument("optical stack must carry " + std::to_string(kOpticalSeriesCount) +
                            " series (13 bands + 4 indices), got " +
                            std::to_string(stack.band_count()));
    }
    for (std::size_t i = 0; i < kAllIndices.size(); ++i) {
      const auto& name = stack.bands()[kOpticalBandCount + i];
      if (name != to_string(kAllIndices[i])) {
        throw InvalidArgument("optical series " + std::to_string(kOpticalBandCount + i) +
                              " must be " + std::string(to_string(kAllIndices[i])) + ", got " +
                              name);
      }
    }
  } else if (stack.band_count() != kRadarSeriesCount) {
    throw InvalidArgument("radar stack must carry " + std::to_string(kRadarSeriesCount) +
                          " series, got " + std::to_string(stack.band_count()));
  }
  for (std::size_t b = 0; b < stack.band_count(); ++b) {
    series.push_back({&stack, b});
    for (StatName s : kAllStats) names.push_back(stack.bands()[b] + "_" + std::string(to_string(s)));
  }
}

FeatureCube build_cube(const std::vector<const TimeSeriesStack*>& stacks) {
  std::vector<SeriesRef> series;
  std::vector<std::string> names;
  for (const auto* s : stacks) append_series(*s, series, names);

  const GridGeometry& geom = stacks.front()->geometry();
  const double nodata = stacks.front()->nodata();
  for (const auto* s : stacks) require_same_geometry(geom, s->geometry(), "build_feature_cube");

  const std::size_t features = names.size();
  const std::size_t pixels = geom.pixel_count();
  std::vector<double> values(pixels * features, nodata);
  std::vector<std::uint8_t> valid(pixels, 1);

#pragma omp parallel
  {
    std::vector<double> buffer;
    std::vector<double> scratch;
#pragma omp for schedule(static)
    for (long row = 0; row < geom.height; ++row) {
      for (int col = 0; col < geom.width; ++col) {
        const std::size_t px = geom.index(col, static_cast<int>(row));
        double* out = values.data() + px * features;
        for (std::size_t s = 0; s < series.size(); ++s) {
          const auto& ref = series[s];
          const double series_nodata = ref.stack->nodata();
          buffer.resize(ref.stack->date_count());
          for (std::size_t d = 0; d < buffer.size(); ++d) {
            buffer[d] = ref.stack->grid(d, ref.band).values()[px];
          }
          const TemporalStats st = stats_into(buffer, series_nodata, scratch);
          if (st[0] == series_nodata) {
            valid[px] = 0;
            continue;
          }
          std::copy(st.begin(), st.end(), out + s * kStatCount);
        }
      }
    }
  }
  return FeatureCube(geom, nodata, std::move(names), std::move(values), std::move(valid));
}

}  // namespace

TemporalStats temporal_stats(std::span<const double> series, double nodata) {
  std::vector<double> scratch;
  return stats_into(series, nodata, scratch);
}

FeatureCube::FeatureCube(GridGeometry geometry, double nodata,
                         std::vector<std::string> feature_names, std::vector<double> values,
                         std::vector<std::uint8_t> valid_mask)
    : geometry_(geometry), nodata_(nodata), feature_names_(std::move(feature_names)),
      values_(std::move(values)), valid_mask_(std::move(valid_mask)) {
  geometry_.validate();
  if (values_.size() != geometry_.pixel_count() * feature_names_.size() ||
      valid_mask_.size() != geometry_.pixel_count()) {
    throw InvalidArgument("feature cube buffers do not match its geometry");
  }
}

RasterGrid FeatureCube::feature_grid(std::size_t feature) const {
  std::vector<double> v(pixel_count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = values_[i * feature_count() + feature];
  return RasterGrid(geometry_, nodata_, std::move(v));
}

RasterGrid FeatureCube::valid_mask_grid() const {
  std::vector<double> v(valid_mask_.begin(), valid_mask_.end());
  return RasterGrid(geometry_, kDefaultNodata, std::move(v));
}

FeatureCube build_feature_cube(const TimeSeriesStack& optical, const TimeSeriesStack& radar) {
  if (optical.sensor() != Sensor::kOptical || radar.sensor() != Sensor::kRadar) {
    throw InvalidArgument("build_feature_cube expects (optical, radar) stacks");
  }
  if (optical.nodata() != radar.nodata()) {
    throw InvalidArgument("optical and radar stacks disagree on nodata value");
  }
  return build_cube({&optical, &radar});
}

FeatureCube build_feature_cube(const TimeSeriesStack& stack) { return build_cube({&stack}); }

namespace {

std::string feature_file_name(std::size_t index, const std::string& name) {
  char prefix[16];
  std::snprintf(prefix, sizeof prefix, "f%03zu_", index);
  return prefix + name + ".asc";
}

}  // namespace

void write_feature_cube(const FeatureCube& cube, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json files = json::array();
  for (std::size_t f = 0; f < cube.feature_count(); ++f) {
    const std::string file = feature_file_name(f, cube.feature_names()[f]);
    write_ascii_grid(cube.feature_grid(f), dir / file);
    files.push_back(file);
  }
  write_ascii_grid(cube.valid_mask_grid(), dir / "valid_mask.asc");
  json sidecar = {{"feature_names", cube.feature_names()},
                  {"files", files},
                  {"valid_mask", "valid_mask.asc"},
                  {"nodata", cube.nodata()}};
  write_file_atomic(dir / "features.json", sidecar.dump(2) + "\n");
}

FeatureCube read_feature_cube(const std::filesystem::path& dir) {
  json sidecar;
  try {
    sidecar = json::parse(read_file(dir / "features.json"));
  } catch (const json::exception& e) {
    throw ParseError((dir / "features.json").string() + ": " + e.what());
  }
  const auto names = sidecar.at("feature_names").get<std::vector<std::string>>();
  const auto files = sidecar.at("files").get<std::vector<std::string>>();
  if (names.size() != files.size()) throw ParseError("features.json: names/files length mismatch");
  const double nodata = sidecar.value("nodata", kDefaultNodata);
  const RasterGrid mask = read_ascii_grid(dir / sidecar.at("valid_mask").get<std::string>());
  const GridGeometry geom = mask.geometry();
  std::vector<double> values(geom.pixel_count() * names.size());
  for (std::size_t f = 0; f < files.size(); ++f) {
    const RasterGrid g = read_ascii_grid(dir / files[f]);
    require_same_geometry(geom, g.geometry(), files[f].c_str());
    const auto v = g.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
      values[i * names.size() + f] = v[i] == g.nodata() ? nodata : v[i];
    }
  }
  std::vector<std::uint8_t> valid(geom.pixel_count());
  for (std::size_t i = 0; i < valid.size(); ++i) valid[i] = mask.values()[i] != 0.0 ? 1 : 0;
  return FeatureCube(geom, nodata, names, std::move(values), std::move(valid));
}

}  // namespace terraperm
