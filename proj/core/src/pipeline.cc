#include "terraperm/pipeline.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <utility>

#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "terraperm/error.h"
#include "terraperm/io_util.h"
#include "terraperm/metrics.h"
#include "terraperm/parallel.h"
#include "terraperm/sampling.h"
#include "terraperm/temporal.h"

namespace terraperm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

spdlog::logger& logger() {
  static std::shared_ptr<spdlog::logger> l = [] {
    auto lg = spdlog::stderr_color_mt("terraperm");
    lg->set_pattern("[%l] %v");
    return lg;
  }();
  return *l;
}

[[noreturn]] void bad_field(const std::string& field, const std::string& what) {
  throw ConfigError("config field '" + field + "': " + what);
}

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

void reject_unknown(const json& obj, const std::string& prefix,
                    std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&](const char* k) { return it.key() == k; })) {
      bad_field(join(prefix, it.key()), "unknown key");
    }
  }
}

const json& require_object(const json& j, const std::string& field) {
  if (!j.is_object()) bad_field(field, "expected an object");
  return j;
}

double get_number(const json& j, const std::string& field) {
  if (!j.is_number()) bad_field(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) bad_field(field, "must be finite");
  return v;
}

std::int64_t get_integer(const json& j, const std::string& field) {
  if (!j.is_number_integer()) bad_field(field, "expected an integer");
  return j.get<std::int64_t>();
}

std::uint64_t get_seed(const json& j, const std::string& field) {
  const std::int64_t v = get_integer(j, field);
  if (v < 0) bad_field(field, "must be a non-negative integer");
  return static_cast<std::uint64_t>(v);
}

std::size_t get_count(const json& j, const std::string& field) {
  const std::int64_t v = get_integer(j, field);
  if (v <= 0) bad_field(field, "must be positive");
  return static_cast<std::size_t>(v);
}

std::string get_string(const json& j, const std::string& field) {
  if (!j.is_string()) bad_field(field, "expected a string");
  return j.get<std::string>();
}

fs::path get_path(const json& j, const std::string& field, const fs::path& base) {
  const std::string s = get_string(j, field);
  if (s.empty()) bad_field(field, "empty path");
  return (base / fs::path(s)).lexically_normal();
}

ClassCode get_class(const json& j, const std::string& field) {
  try {
    if (j.is_number_integer()) return class_from_code(j.get<int>());
    return parse_class(get_string(j, field));
  } catch (const InvalidArgument& e) {
    bad_field(field, e.what());
  }
}

void parse_boost(const json& j, BoostConfig& b) {
  require_object(j, "boost");
  reject_unknown(j, "boost", {"rounds", "learning_rate", "max_depth", "lambda", "gamma",
                              "min_child_hessian", "bins", "seed"});
  if (j.contains("rounds")) b.rounds = static_cast<int>(get_integer(j["rounds"], "boost.rounds"));
  if (j.contains("learning_rate")) b.learning_rate = get_number(j["learning_rate"], "boost.learning_rate");
  if (j.contains("max_depth")) b.max_depth = static_cast<int>(get_integer(j["max_depth"], "boost.max_depth"));
  if (j.contains("lambda")) b.lambda = get_number(j["lambda"], "boost.lambda");
  if (j.contains("gamma")) b.gamma = get_number(j["gamma"], "boost.gamma");
  if (j.contains("min_child_hessian")) {
    b.min_child_hessian = get_number(j["min_child_hessian"], "boost.min_child_hessian");
  }
  if (j.contains("bins")) b.bins = static_cast<int>(get_integer(j["bins"], "boost.bins"));
  if (j.contains("seed")) b.seed = get_seed(j["seed"], "boost.seed");
}

json class_list(const std::set<ClassCode>& classes) {
  json out = json::array();
  for (ClassCode c : classes) out.push_back(std::string(to_string(c)));
  return out;
}

json config_section(const PipelineConfig& c, Stage stage) {
  auto path_or_null = [](const std::optional<fs::path>& p) {
    return p ? json(p->generic_string()) : json(nullptr);
  };
  switch (stage) {
    case Stage::kFeatures: {
      json sensors = json::array();
      for (Sensor s : c.sensors) sensors.push_back(std::string(to_string(s)));
      return {{"optical_manifest", path_or_null(c.optical_manifest)},
              {"radar_manifest", path_or_null(c.radar_manifest)},
              {"sensors", sensors},
              {"band_roles",
               {{"blue", c.band_roles.blue},
                {"green", c.band_roles.green},
                {"red", c.band_roles.red},
                {"nir", c.band_roles.nir},
                {"swir", c.band_roles.swir}}}};
    }
    case Stage::kLabels: {
      json widths = json::object();
      for (const auto& [k, v] : c.road_widths.widths) widths[k] = v;
      json precedence = json::array();
      for (ClassCode p : c.class_precedence) precedence.push_back(std::string(to_string(p)));
      return {{"land_cover", c.land_cover.generic_string()},
              {"roads", c.roads.generic_string()},
              {"road_widths",
               {{"types", widths},
                {"default", c.road_widths.default_width ? json(*c.road_widths.default_width)
                                                        : json(nullptr)},
                {"allow_out_of_range", c.road_widths.allow_out_of_range}}},
              {"class_precedence", precedence}};
    }
    case Stage::kSample:
      return {{"train_size", c.sampling.train_size},
              {"train_seed", c.sampling.train_seed},
              {"validation_size", c.sampling.validation_size},
              {"validation_seed", c.sampling.validation_seed}};
    case Stage::kTrain:
      return {{"rounds", c.boost.rounds},
              {"learning_rate", c.boost.learning_rate},
              {"max_depth", c.boost.max_depth},
              {"lambda", c.boost.lambda},
              {"gamma", c.boost.gamma},
              {"min_child_hessian", c.boost.min_child_hessian},
              {"bins", c.boost.bins},
              {"seed", c.boost.seed}};
    case Stage::kPredict:
    case Stage::kEvaluate:
      return json::object();
    case Stage::kFgc:
      return {{"radius_m", c.fgc.radius_m},
              {"include", class_list(c.fgc.include)},
              {"reference", path_or_null(c.fgc.reference)}};
  }
  return json::object();
}

const char* section_key(Stage stage) {
  switch (stage) {
    case Stage::kSample: return "sampling";
    case Stage::kTrain: return "boost";
    case Stage::kFgc: return "fgc";
    default: return nullptr;
  }
}

}  // namespace

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::kFeatures: return "features";
    case Stage::kLabels: return "labels";
    case Stage::kSample: return "sample";
    case Stage::kTrain: return "train";
    case Stage::kPredict: return "predict";
    case Stage::kEvaluate: return "evaluate";
    case Stage::kFgc: return "fgc";
  }
  return "?";
}

Stage parse_stage(std::string_view text) {
  for (Stage s : kAllStages) {
    if (to_string(s) == text) return s;
  }
  throw InvalidArgument("unknown stage '" + std::string(text) + "'");
}

bool PipelineConfig::uses(Sensor s) const {
  return std::find(sensors.begin(), sensors.end(), s) != sensors.end();
}

void PipelineConfig::validate() const {
  auto require_file = [](const fs::path& p, const char* field) {
    if (!fs::is_regular_file(p)) bad_field(field, "file not found: " + p.string());
  };
  if (output_dir.empty()) bad_field("output_dir", "must be set");
  if (sensors.empty()) bad_field("sensors", "at least one sensor is required");
  if (uses(Sensor::kOptical)) {
    if (!optical_manifest) bad_field("optical_manifest", "required when 'optical' is a sensor");
    require_file(*optical_manifest, "optical_manifest");
  }
  if (uses(Sensor::kRadar)) {
    if (!radar_manifest) bad_field("radar_manifest", "required when 'radar' is a sensor");
    require_file(*radar_manifest, "radar_manifest");
  }
  if (land_cover.empty()) bad_field("land_cover", "must be set");
  require_file(land_cover, "land_cover");
  if (roads.empty()) bad_field("roads", "must be set");
  require_file(roads, "roads");
  try {
    road_widths.validate();
  } catch (const InvalidArgument& e) {
    bad_field("road_widths", e.what());
  }
  try {
    validate_precedence(class_precedence);
  } catch (const InvalidArgument& e) {
    bad_field("class_precedence", e.what());
  }
  if (sampling.train_size == 0) bad_field("sampling.train_size", "must be positive");
  if (sampling.validation_size == 0) bad_field("sampling.validation_size", "must be positive");
  try {
    boost.validate();
  } catch (const InvalidArgument& e) {
    // Messages read "boost.<field> <reason>".
    const std::string msg = e.what();
    const auto space = msg.find(' ');
    bad_field(msg.substr(0, space), msg.substr(space + 1));
  }
  if (!std::isfinite(fgc.radius_m) || fgc.radius_m < 0) {
    bad_field("fgc.radius_m", "must be a finite non-negative distance");
  }
  if (fgc.include.empty()) bad_field("fgc.include", "at least one class is required");
  if (fgc.reference) require_file(*fgc.reference, "fgc.reference");
  if (threads < 1) bad_field("threads", "must be at least 1");
}

std::string PipelineConfig::to_json() const {
  json j = {{"output_dir", output_dir.generic_string()}, {"threads", threads}};
  for (Stage s : kAllStages) {
    json section = config_section(*this, s);
    if (const char* key = section_key(s)) {
      j[key] = std::move(section);
    } else {
      for (auto it = section.begin(); it != section.end(); ++it) j[it.key()] = it.value();
    }
  }
  return j.dump(2);
}

PipelineConfig parse_config(const std::string& text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j, "", {"output_dir", "optical_manifest", "radar_manifest", "sensors",
                         "band_roles", "land_cover", "roads", "road_widths",
                         "class_precedence", "sampling", "boost", "fgc", "threads"});

  PipelineConfig c;
  c.output_dir = j.contains("output_dir") ? get_path(j["output_dir"], "output_dir", base_dir)
                                          : (base_dir / "out").lexically_normal();
  if (j.contains("optical_manifest")) {
    c.optical_manifest = get_path(j["optical_manifest"], "optical_manifest", base_dir);
  }
  if (j.contains("radar_manifest")) {
    c.radar_manifest = get_path(j["radar_manifest"], "radar_manifest", base_dir);
  }
  if (j.contains("sensors")) {
    const json& s = j["sensors"];
    if (!s.is_array()) bad_field("sensors", "expected an array");
    c.sensors.clear();
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string field = "sensors[" + std::to_string(i) + "]";
      Sensor sensor;
      try {
        sensor = parse_sensor(get_string(s[i], field));
      } catch (const InvalidArgument& e) {
        bad_field(field, e.what());
      }
      if (c.uses(sensor)) bad_field(field, "duplicate sensor");
      c.sensors.push_back(sensor);
    }
    // Features always stack optical before radar.
    std::sort(c.sensors.begin(), c.sensors.end());
  }
  if (j.contains("band_roles")) {
    const json& r = require_object(j["band_roles"], "band_roles");
    reject_unknown(r, "band_roles", {"blue", "green", "red", "nir", "swir"});
    auto role = [&](const char* key, std::string& out) {
      if (r.contains(key)) out = get_string(r[key], join("band_roles", key));
    };
    role("blue", c.band_roles.blue);
    role("green", c.band_roles.green);
    role("red", c.band_roles.red);
    role("nir", c.band_roles.nir);
    role("swir", c.band_roles.swir);
  }
  if (!j.contains("land_cover")) bad_field("land_cover", "missing");
  c.land_cover = get_path(j["land_cover"], "land_cover", base_dir);
  if (!j.contains("roads")) bad_field("roads", "missing");
  c.roads = get_path(j["roads"], "roads", base_dir);

  if (j.contains("road_widths")) {
    const json& w = require_object(j["road_widths"], "road_widths");
    reject_unknown(w, "road_widths", {"types", "default", "allow_out_of_range"});
    if (w.contains("types")) {
      const json& t = require_object(w["types"], "road_widths.types");
      c.road_widths.widths.clear();
      for (auto it = t.begin(); it != t.end(); ++it) {
        c.road_widths.widths[it.key()] = get_number(it.value(), "road_widths.types." + it.key());
      }
    }
    if (w.contains("default")) {
      if (w["default"].is_null()) {
        c.road_widths.default_width.reset();
      } else {
        c.road_widths.default_width = get_number(w["default"], "road_widths.default");
      }
    }
    if (w.contains("allow_out_of_range")) {
      if (!w["allow_out_of_range"].is_boolean()) {
        bad_field("road_widths.allow_out_of_range", "expected a boolean");
      }
      c.road_widths.allow_out_of_range = w["allow_out_of_range"].get<bool>();
    }
  }
  if (j.contains("class_precedence")) {
    const json& p = j["class_precedence"];
    if (!p.is_array() || p.size() != kClassCount) {
      bad_field("class_precedence", "expected an array of the four classes");
    }
    for (std::size_t i = 0; i < kClassCount; ++i) {
      c.class_precedence[i] = get_class(p[i], "class_precedence[" + std::to_string(i) + "]");
    }
  }
  if (j.contains("sampling")) {
    const json& s = require_object(j["sampling"], "sampling");
    reject_unknown(s, "sampling", {"train_size", "train_seed", "validation_size", "validation_seed"});
    if (s.contains("train_size")) c.sampling.train_size = get_count(s["train_size"], "sampling.train_size");
    if (s.contains("train_seed")) c.sampling.train_seed = get_seed(s["train_seed"], "sampling.train_seed");
    if (s.contains("validation_size")) {
      c.sampling.validation_size = get_count(s["validation_size"], "sampling.validation_size");
    }
    if (s.contains("validation_seed")) {
      c.sampling.validation_seed = get_seed(s["validation_seed"], "sampling.validation_seed");
    }
  }
  if (j.contains("boost")) parse_boost(j["boost"], c.boost);
  if (j.contains("fgc")) {
    const json& f = require_object(j["fgc"], "fgc");
    reject_unknown(f, "fgc", {"radius_m", "include", "reference"});
    if (f.contains("radius_m")) c.fgc.radius_m = get_number(f["radius_m"], "fgc.radius_m");
    if (f.contains("include")) {
      if (!f["include"].is_array()) bad_field("fgc.include", "expected an array of classes");
      c.fgc.include.clear();
      for (std::size_t i = 0; i < f["include"].size(); ++i) {
        c.fgc.include.insert(get_class(f["include"][i], "fgc.include[" + std::to_string(i) + "]"));
      }
    }
    if (f.contains("reference") && !f["reference"].is_null()) {
      c.fgc.reference = get_path(f["reference"], "fgc.reference", base_dir);
    }
  }
  if (j.contains("threads")) c.threads = static_cast<int>(get_integer(j["threads"], "threads"));
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw ConfigError("config file not found: " + path.string());
  return parse_config(read_file(path), fs::absolute(path).parent_path());
}

void apply_seed(PipelineConfig& config, std::uint64_t seed) {
  config.sampling.train_seed = seed;
  config.sampling.validation_seed = seed + 1;
  config.boost.seed = seed;
}

namespace artifacts {
fs::path features_dir(const fs::path& out) { return out / "features"; }
fs::path labels(const fs::path& out) { return out / "labels" / "labels.asc"; }
fs::path train_samples(const fs::path& out) { return out / "samples" / "train.csv"; }
fs::path validation_samples(const fs::path& out) { return out / "samples" / "validation.csv"; }
fs::path model(const fs::path& out) { return out / "model" / "model.json"; }
fs::path classification(const fs::path& out) { return out / "predict" / "classification.asc"; }
fs::path metrics(const fs::path& out) { return out / "evaluate" / "metrics.json"; }
fs::path fgc_report(const fs::path& out) { return out / "fgc" / "report.json"; }
fs::path run_manifest(const fs::path& out) { return out / "run_manifest.json"; }
}  // namespace artifacts

void set_log_level(std::string_view level) {
  logger().set_level(spdlog::level::from_str(std::string(level)));
}

namespace {

using Checksums = std::map<std::string, std::string>;

// Keys are relative to the output directory when the file lives inside it.
std::string artifact_key(const fs::path& file, const fs::path& out) {
  const fs::path rel = file.lexically_normal().lexically_relative(out.lexically_normal());
  if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return file.lexically_normal().generic_string();
}

void require_inputs(const std::vector<fs::path>& files, Stage stage) {
  for (const auto& f : files) {
    if (!fs::is_regular_file(f)) {
      throw MissingArtifactError(std::string(to_string(stage)) + ": missing input artifact " +
                                 f.string());
    }
  }
}

Checksums checksum(const std::vector<fs::path>& files, const fs::path& out) {
  Checksums c;
  for (const auto& f : files) c[artifact_key(f, out)] = sha256_file(f);
  return c;
}

std::vector<fs::path> feature_files(const fs::path& dir, Stage stage) {
  const fs::path sidecar = dir / "features.json";
  require_inputs({sidecar}, stage);
  std::vector<fs::path> out = {sidecar};
  try {
    const json j = json::parse(read_file(sidecar));
    for (const auto& f : j.at("files")) out.push_back(dir / f.get<std::string>());
    out.push_back(dir / j.at("valid_mask").get<std::string>());
  } catch (const json::exception& e) {
    throw ParseError(sidecar.string() + ": " + e.what());
  }
  return out;
}

std::vector<std::string> feature_names(const fs::path& dir) {
  const fs::path sidecar = dir / "features.json";
  try {
    return json::parse(read_file(sidecar)).at("feature_names").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ParseError(sidecar.string() + ": " + e.what());
  }
}

std::vector<fs::path> stage_inputs(Stage stage, const PipelineConfig& c) {
  const fs::path& out = c.output_dir;
  switch (stage) {
    case Stage::kFeatures: {
      std::vector<fs::path> in;
      for (Sensor s : c.sensors) {
        const fs::path m = s == Sensor::kOptical ? *c.optical_manifest : *c.radar_manifest;
        require_inputs({m}, stage);
        in.push_back(m);
        for (const auto& e : read_manifest(m).entries) in.push_back(e.path);
      }
      return in;
    }
    case Stage::kLabels: {
      const fs::path m = c.uses(Sensor::kOptical) ? *c.optical_manifest : *c.radar_manifest;
      return {m, c.land_cover, c.roads};
    }
    case Stage::kSample: {
      auto in = feature_files(artifacts::features_dir(out), stage);
      in.push_back(artifacts::labels(out));
      return in;
    }
    case Stage::kTrain:
      return {artifacts::train_samples(out), artifacts::features_dir(out) / "features.json"};
    case Stage::kPredict: {
      auto in = feature_files(artifacts::features_dir(out), stage);
      in.insert(in.begin(), artifacts::model(out));
      return in;
    }
    case Stage::kEvaluate:
      return {artifacts::validation_samples(out), artifacts::classification(out),
              artifacts::features_dir(out) / "features.json"};
    case Stage::kFgc:
      return {artifacts::classification(out), c.fgc.reference.value_or(artifacts::labels(out))};
  }
  return {};
}

std::vector<fs::path> run_features(const PipelineConfig& c) {
  std::optional<TimeSeriesStack> optical;
  std::optional<TimeSeriesStack> radar;
  if (c.uses(Sensor::kOptical)) {
    TimeSeriesStack raw = load_stack(read_manifest(*c.optical_manifest));
    try {
      c.band_roles.validate(raw);
    } catch (const InvalidArgument& e) {
      bad_field("band_roles", e.what());
    }
    optical = derive_index_series(raw, c.band_roles);
    logger().info("features: optical stack {} dates x {} bands", raw.date_count(), raw.band_count());
  }
  if (c.uses(Sensor::kRadar)) {
    radar = load_stack(read_manifest(*c.radar_manifest));
    logger().info("features: radar stack {} dates x {} bands", radar->date_count(),
                  radar->band_count());
  }
  const FeatureCube cube = optical && radar ? build_feature_cube(*optical, *radar)
                           : optical        ? build_feature_cube(*optical)
                                            : build_feature_cube(*radar);
  const fs::path dir = artifacts::features_dir(c.output_dir);
  fs::remove_all(dir);
  write_feature_cube(cube, dir);
  std::size_t valid = 0;
  for (auto v : cube.valid_mask()) valid += v;
  logger().info("features: {} features, {} of {} pixels valid", cube.feature_count(), valid,
                cube.pixel_count());
  return feature_files(dir, Stage::kFeatures);
}

std::vector<fs::path> run_labels(const PipelineConfig& c) {
  const fs::path manifest = c.uses(Sensor::kOptical) ? *c.optical_manifest : *c.radar_manifest;
  const GridGeometry grid = read_manifest(manifest).grid;
  const VectorLayer cover = read_geojson(c.land_cover);
  const VectorLayer roads = read_geojson(c.roads);
  const LabelRaster cos = rasterize_polygons(cover, grid, c.class_precedence);
  BinaryMask road_mask;
  try {
    road_mask = rasterize_roads(roads, c.road_widths, grid);
  } catch (const InvalidArgument& e) {
    bad_field("road_widths", e.what());
  }
  const LabelRaster fused = fuse_labels(cos, road_mask);
  const fs::path dir = c.output_dir / "labels";
  write_ascii_grid(cos.to_grid(), dir / "cos.asc");
  write_ascii_grid(road_mask.to_grid(), dir / "roads_mask.asc");
  write_ascii_grid(fused.to_grid(), artifacts::labels(c.output_dir));
  const auto counts = fused.class_counts();
  logger().info("labels: remainder {} structure {} road {} water {}", counts[0], counts[1],
                counts[2], counts[3]);
  return {dir / "cos.asc", dir / "roads_mask.asc", artifacts::labels(c.output_dir)};
}

std::vector<fs::path> run_sample(const PipelineConfig& c) {
  const FeatureCube cube = read_feature_cube(artifacts::features_dir(c.output_dir));
  const LabelRaster labels = LabelRaster::from_grid(read_ascii_grid(artifacts::labels(c.output_dir)));
  require_same_geometry(cube.geometry(), labels.geometry(), "labels vs feature cube");
  const SampleSet train = draw_samples(cube, labels, c.sampling.train_size, c.sampling.train_seed);
  std::vector<std::size_t> taken(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) taken[i] = train.pixel_index(i, cube.width());
  const SampleSet validation = draw_samples(cube, labels, c.sampling.validation_size,
                                            c.sampling.validation_seed, taken);
  write_samples_csv(train, artifacts::train_samples(c.output_dir));
  write_samples_csv(validation, artifacts::validation_samples(c.output_dir));
  logger().info("sample: {} training and {} validation pixels", train.size(), validation.size());
  return {artifacts::train_samples(c.output_dir), artifacts::validation_samples(c.output_dir)};
}

std::vector<fs::path> run_train(const PipelineConfig& c) {
  const auto names = feature_names(artifacts::features_dir(c.output_dir));
  const SampleSet samples = read_samples_csv(artifacts::train_samples(c.output_dir), names);
  std::vector<double> history;
  const BoostModel model = train(samples, c.boost, &history);
  model.save(artifacts::model(c.output_dir));
  json log = json::array();
  for (std::size_t r = 0; r < history.size(); ++r) {
    log.push_back({{"round", r}, {"log_loss", history[r]}});
  }
  const fs::path log_path = c.output_dir / "model" / "training_log.json";
  write_file_atomic(log_path, json{{"training_log", log}}.dump(2) + "\n");
  logger().info("train: {} rounds, log-loss {} -> {}", c.boost.rounds, history.front(),
                history.back());
  return {artifacts::model(c.output_dir), log_path};
}

std::vector<fs::path> run_predict(const PipelineConfig& c) {
  const BoostModel model = BoostModel::load(artifacts::model(c.output_dir));
  const FeatureCube cube = read_feature_cube(artifacts::features_dir(c.output_dir));
  const CubePrediction p = predict(model, cube);
  const fs::path dir = c.output_dir / "predict";
  write_ascii_grid(p.labels.to_grid(), artifacts::classification(c.output_dir));
  write_ascii_grid(p.confidence, dir / "confidence.asc");
  std::vector<double> flagged(p.flagged.begin(), p.flagged.end());
  write_ascii_grid(RasterGrid(cube.geometry(), cube.nodata(), std::move(flagged)),
                   dir / "flagged.asc");
  const auto counts = p.labels.class_counts();
  logger().info("predict: remainder {} structure {} road {} water {}", counts[0], counts[1],
                counts[2], counts[3]);
  return {artifacts::classification(c.output_dir), dir / "confidence.asc", dir / "flagged.asc"};
}

std::vector<fs::path> run_evaluate(const PipelineConfig& c) {
  const auto names = feature_names(artifacts::features_dir(c.output_dir));
  const SampleSet validation = read_samples_csv(artifacts::validation_samples(c.output_dir), names);
  const LabelRaster predicted =
      LabelRaster::from_grid(read_ascii_grid(artifacts::classification(c.output_dir)));
  std::vector<ClassCode> pred(validation.size());
  for (std::size_t i = 0; i < validation.size(); ++i) {
    if (validation.cols[i] >= predicted.geometry().width ||
        validation.rows[i] >= predicted.geometry().height) {
      throw GeometryError("validation sample outside the classification grid");
    }
    pred[i] = predicted.at(validation.cols[i], validation.rows[i]);
  }
  const ConfusionMatrix m = confusion(pred, validation.labels);
  const MetricsReport report = evaluate(m);
  const fs::path dir = c.output_dir / "evaluate";
  write_file_atomic(artifacts::metrics(c.output_dir), metrics_json(report, m));
  write_file_atomic(dir / "metrics.txt", metrics_table(report));
  logger().info("evaluate: kappa {:.4f} accuracy {:.4f} on {} pixels", report.kappa.value_or(0.0),
                report.accuracy.value_or(0.0), report.sample_count);
  return {artifacts::metrics(c.output_dir), dir / "metrics.txt"};
}

std::vector<fs::path> run_fgc(const PipelineConfig& c) {
  const LabelRaster detected_labels =
      LabelRaster::from_grid(read_ascii_grid(artifacts::classification(c.output_dir)));
  const fs::path ref_path = c.fgc.reference.value_or(artifacts::labels(c.output_dir));
  const FgcMask detected = dilate(structure_mask(detected_labels, c.fgc.include), c.fgc.radius_m);
  FgcMask reference;
  if (ref_path.extension() == ".geojson") {
    VectorLayer strips = read_geojson(ref_path);
    for (auto& f : strips.features) f.class_code = ClassCode::kStructure;
    reference = structure_mask(rasterize_polygons(strips, detected.geometry()),
                               {ClassCode::kStructure});
  } else {
    const LabelRaster reference_labels = LabelRaster::from_grid(read_ascii_grid(ref_path));
    require_same_geometry(detected_labels.geometry(), reference_labels.geometry(),
                          "fgc reference vs classification");
    reference = dilate(structure_mask(reference_labels, c.fgc.include), c.fgc.radius_m);
  }
  const MaskComparison cmp = compare_masks(reference, detected);
  const fs::path dir = c.output_dir / "fgc";
  write_ascii_grid(detected.to_grid(), dir / "fgc_detected.asc");
  write_ascii_grid(reference.to_grid(), dir / "fgc_reference.asc");
  json report = json::parse(comparison_json(cmp));
  report["radius_m"] = c.fgc.radius_m;
  report["include"] = class_list(c.fgc.include);
  // a = reference strips, b = strips from the classification.
  report["omission_means"] = "detected strip pixels absent from the reference";
  report["commission_means"] = "reference strip pixels absent from the detection";
  write_file_atomic(artifacts::fgc_report(c.output_dir), report.dump(2) + "\n");
  logger().info("fgc: IoU {:.4f}, omission {} px, commission {} px", cmp.iou, cmp.omission,
                cmp.commission);
  return {dir / "fgc_detected.asc", dir / "fgc_reference.asc", artifacts::fgc_report(c.output_dir)};
}

json read_run_manifest(const fs::path& path) {
  if (!fs::is_regular_file(path)) return json::object();
  try {
    json j = json::parse(read_file(path));
    if (j.is_object()) return j;
  } catch (const json::exception&) {
  }
  logger().warn("ignoring unreadable run manifest {}", path.string());
  return json::object();
}

bool up_to_date(const json& record, const std::string& config_hash, const Checksums& inputs,
                const fs::path& out) {
  if (!record.is_object() || record.value("config_hash", "") != config_hash) return false;
  if (record.value("inputs", json::object()) != json(inputs)) return false;
  const json outputs = record.value("outputs", json::object());
  if (!outputs.is_object() || outputs.empty()) return false;
  for (auto it = outputs.begin(); it != outputs.end(); ++it) {
    fs::path p(it.key());
    if (p.is_relative()) p = out / p;
    if (!fs::is_regular_file(p) || sha256_file(p) != it.value().get<std::string>()) return false;
  }
  return true;
}

}  // namespace

StageResult run_stage(Stage stage, const PipelineConfig& config) {
  set_thread_count(config.threads);
  const fs::path& out = config.output_dir;
  const std::string name(to_string(stage));
  const std::vector<fs::path> inputs = stage_inputs(stage, config);
  require_inputs(inputs, stage);
  const Checksums input_sums = checksum(inputs, out);
  const std::string config_hash = sha256_hex(config_section(config, stage).dump());

  const fs::path manifest_path = artifacts::run_manifest(out);
  json manifest = read_run_manifest(manifest_path);
  if (manifest.contains("stages") && manifest["stages"].contains(name) &&
      up_to_date(manifest["stages"][name], config_hash, input_sums, out)) {
    logger().info("{}: up to date, skipping", name);
    StageResult r{stage, true, {}};
    for (auto it = manifest["stages"][name]["outputs"].begin();
         it != manifest["stages"][name]["outputs"].end(); ++it) {
      r.outputs.push_back(out / it.key());
    }
    return r;
  }

  logger().info("{}: running", name);
  std::vector<fs::path> outputs;
  switch (stage) {
    case Stage::kFeatures: outputs = run_features(config); break;
    case Stage::kLabels: outputs = run_labels(config); break;
    case Stage::kSample: outputs = run_sample(config); break;
    case Stage::kTrain: outputs = run_train(config); break;
    case Stage::kPredict: outputs = run_predict(config); break;
    case Stage::kEvaluate: outputs = run_evaluate(config); break;
    case Stage::kFgc: outputs = run_fgc(config); break;
  }

  manifest["config"] = json::parse(config.to_json());
  manifest["stages"][name] = {{"config_hash", config_hash},
                              {"inputs", input_sums},
                              {"outputs", checksum(outputs, out)}};
  write_file_atomic(manifest_path, manifest.dump(2) + "\n");
  return {stage, false, outputs};
}

std::vector<StageResult> run_all(const PipelineConfig& config) {
  std::vector<StageResult> results;
  for (Stage s : kAllStages) results.push_back(run_stage(s, config));
  return results;
}

}  // namespace terraperm
