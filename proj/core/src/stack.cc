#include "terraperm/stack.h"

#include <algorithm>
#include <exception>
#include <map>
#include <numeric>
#include <regex>
#include <set>
#include <utility>

#include <nlohmann/json.hpp>

#include "terraperm/error.h"
#include "terraperm/io_util.h"

namespace terraperm {

using nlohmann::json;

std::string_view to_string(Sensor sensor) {
  return sensor == Sensor::kOptical ? "optical" : "radar";
}

Sensor parse_sensor(std::string_view text) {
  std::string t(text);
  std::transform(t.begin(), t.end(), t.begin(), ::tolower);
  if (t == "optical") return Sensor::kOptical;
  if (t == "radar") return Sensor::kRadar;
  throw InvalidArgument("unknown sensor '" + std::string(text) + "' (expected optical|radar)");
}

const std::vector<std::string>& sentinel2_band_names() {
  static const std::vector<std::string> names = {"B01", "B02", "B03", "B04", "B05",
                                                 "B06", "B07", "B08", "B8A", "B09",
                                                 "B10", "B11", "B12"};
  return names;
}

const std::vector<std::string>& sentinel1_band_names() {
  static const std::vector<std::string> names = {"VV", "VH"};
  return names;
}

namespace {

bool is_iso_date(const std::string& s) {
  static const std::regex re(R"(\d{4}-\d{2}-\d{2})");
  return std::regex_match(s, re);
}

// Canonical names first in instrument order, unknown names after, sorted.
std::vector<std::string> order_bands(const std::set<std::string>& names,
                                     const std::vector<std::string>& canonical) {
  std::vector<std::string> out;
  for (const auto& c : canonical) {
    if (names.count(c)) out.push_back(c);
  }
  for (const auto& n : names) {
    if (std::find(canonical.begin(), canonical.end(), n) == canonical.end()) out.push_back(n);
  }
  return out;
}

}  // namespace

StackManifest read_manifest(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": invalid manifest JSON: " + e.what());
  }
  const auto base = path.parent_path();
  StackManifest m;
  try {
    m.sensor = parse_sensor(doc.at("sensor").get<std::string>());
    const auto& g = doc.at("grid");
    m.grid.width = g.at("width").get<int>();
    m.grid.height = g.at("height").get<int>();
    m.grid.origin_x = g.at("origin_x").get<double>();
    m.grid.origin_y = g.at("origin_y").get<double>();
    m.grid.pixel_size = g.at("pixel_size").get<double>();
    m.nodata = g.value("nodata", kDefaultNodata);
    for (const auto& e : doc.at("entries")) {
      ManifestEntry entry;
      entry.date = e.at("date").get<std::string>();
      entry.band = e.at("band").get<std::string>();
      std::filesystem::path p = e.at("path").get<std::string>();
      entry.path = p.is_absolute() ? p : base / p;
      entry.offset_dx = e.value("offset_dx", 0);
      entry.offset_dy = e.value("offset_dy", 0);
      m.entries.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": bad manifest field: " + e.what());
  }
  return m;
}

void write_manifest(const StackManifest& manifest, const std::filesystem::path& path) {
  json doc;
  doc["sensor"] = std::string(to_string(manifest.sensor));
  doc["grid"] = {{"width", manifest.grid.width},
                 {"height", manifest.grid.height},
                 {"origin_x", manifest.grid.origin_x},
                 {"origin_y", manifest.grid.origin_y},
                 {"pixel_size", manifest.grid.pixel_size},
                 {"nodata", manifest.nodata}};
  json entries = json::array();
  for (const auto& e : manifest.entries) {
    entries.push_back({{"date", e.date},
                       {"band", e.band},
                       {"path", e.path.generic_string()},
                       {"offset_dx", e.offset_dx},
                       {"offset_dy", e.offset_dy}});
  }
  doc["entries"] = std::move(entries);
  write_file_atomic(path, doc.dump(2) + "\n");
}

TimeSeriesStack::TimeSeriesStack(Sensor sensor, std::vector<std::string> dates,
                                 std::vector<std::string> bands,
                                 std::vector<RasterGrid> grids)
    : sensor_(sensor), dates_(std::move(dates)), bands_(std::move(bands)),
      grids_(std::move(grids)) {
  if (dates_.empty() || bands_.empty()) throw InvalidArgument("stack needs at least one date and one band");
  if (grids_.size() != dates_.size() * bands_.size()) {
    throw InvalidArgument("stack has " + std::to_string(grids_.size()) + " grids, expected " +
                          std::to_string(dates_.size()) + " dates x " +
                          std::to_string(bands_.size()) + " bands");
  }
  for (std::size_t i = 1; i < dates_.size(); ++i) {
    if (!(dates_[i - 1] < dates_[i])) {
      throw InvalidArgument("stack dates must be strictly increasing: " + dates_[i - 1] +
                            " then " + dates_[i]);
    }
  }
  for (std::size_t i = 1; i < grids_.size(); ++i) {
    require_same_geometry(grids_[0].geometry(), grids_[i].geometry(), "stack grid");
    if (grids_[i].nodata() != grids_[0].nodata()) {
      throw InvalidArgument("stack grids disagree on nodata value");
    }
  }
}

const RasterGrid& TimeSeriesStack::grid(std::string_view date, std::string_view band) const {
  const auto d = std::find(dates_.begin(), dates_.end(), date);
  const auto b = band_index(band);
  if (d == dates_.end() || !b) {
    throw InvalidArgument("stack has no grid for (" + std::string(date) + ", " +
                          std::string(band) + ")");
  }
  return grid(static_cast<std::size_t>(d - dates_.begin()), *b);
}

std::optional<std::size_t> TimeSeriesStack::band_index(std::string_view band) const {
  const auto it = std::find(bands_.begin(), bands_.end(), band);
  if (it == bands_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - bands_.begin());
}

TimeSeriesStack TimeSeriesStack::with_band(std::string name,
                                           std::vector<RasterGrid> series) const {
  if (band_index(name)) throw InvalidArgument("stack already has band " + name);
  if (series.size() != dates_.size()) {
    throw InvalidArgument("band series " + name + " has " + std::to_string(series.size()) +
                          " grids for " + std::to_string(dates_.size()) + " dates");
  }
  std::vector<std::string> bands = bands_;
  bands.push_back(std::move(name));
  std::vector<RasterGrid> grids;
  grids.reserve(dates_.size() * bands.size());
  for (std::size_t d = 0; d < dates_.size(); ++d) {
    for (std::size_t b = 0; b < bands_.size(); ++b) grids.push_back(grid(d, b));
    grids.push_back(std::move(series[d]));
  }
  return TimeSeriesStack(sensor_, dates_, std::move(bands), std::move(grids));
}

TimeSeriesStack TimeSeriesStack::with_date_order(const std::vector<std::size_t>& order) const {
  if (order.size() != dates_.size()) throw InvalidArgument("date permutation has wrong length");
  std::vector<RasterGrid> grids;
  grids.reserve(grids_.size());
  for (std::size_t d = 0; d < order.size(); ++d) {
    for (std::size_t b = 0; b < bands_.size(); ++b) grids.push_back(grid(order.at(d), b));
  }
  return TimeSeriesStack(sensor_, dates_, bands_, std::move(grids));
}

TimeSeriesStack load_stack(const StackManifest& manifest) {
  if (manifest.entries.empty()) throw InvalidArgument("manifest has no entries");
  manifest.grid.validate();

  std::set<std::string> date_set;
  std::set<std::string> band_set;
  std::map<std::pair<std::string, std::string>, std::size_t> slot;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& e = manifest.entries[i];
    if (!is_iso_date(e.date)) throw InvalidArgument("manifest date '" + e.date + "' is not YYYY-MM-DD");
    if (!slot.emplace(std::make_pair(e.date, e.band), i).second) {
      throw InvalidArgument("manifest lists (" + e.date + ", " + e.band + ") twice");
    }
    date_set.insert(e.date);
    band_set.insert(e.band);
  }

  std::vector<std::string> bands;
  if (manifest.sensor == Sensor::kOptical) {
    bands = order_bands(band_set, sentinel2_band_names());
    if (bands.size() != kOpticalBandCount) {
      throw InvalidArgument("optical stack needs " + std::to_string(kOpticalBandCount) +
                            " bands, manifest has " + std::to_string(bands.size()));
    }
  } else {
    bands = order_bands(band_set, sentinel1_band_names());
    if (bands != sentinel1_band_names()) {
      throw InvalidArgument("radar stack needs exactly bands VV and VH");
    }
  }
  const std::vector<std::string> dates(date_set.begin(), date_set.end());

  std::vector<std::size_t> entry_of(dates.size() * bands.size());
  for (std::size_t d = 0; d < dates.size(); ++d) {
    for (std::size_t b = 0; b < bands.size(); ++b) {
      const auto it = slot.find({dates[d], bands[b]});
      if (it == slot.end()) {
        throw InvalidArgument("manifest is missing (" + dates[d] + ", " + bands[b] + ")");
      }
      entry_of[d * bands.size() + b] = it->second;
    }
  }

  const auto n = static_cast<long>(entry_of.size());
  std::vector<RasterGrid> grids(entry_of.size());
  std::vector<std::exception_ptr> errors(entry_of.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    const auto& e = manifest.entries[entry_of[i]];
    try {
      RasterGrid g = read_ascii_grid(e.path);
      require_same_geometry(manifest.grid, g.geometry(), e.path.string().c_str());
      std::vector<double> values(g.values().begin(), g.values().end());
      if (g.nodata() != manifest.nodata) {
        std::replace(values.begin(), values.end(), g.nodata(), manifest.nodata);
      }
      RasterGrid remapped(manifest.grid, manifest.nodata, std::move(values));
      grids[i] = apply_offset(remapped, e.offset_dx, e.offset_dy);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  // Report the first failure in canonical order, keeping its type.
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
  return TimeSeriesStack(manifest.sensor, dates, std::move(bands), std::move(grids));
}

}  // namespace terraperm
