#ifndef TERRAPERM_PIPELINE_H_
#define TERRAPERM_PIPELINE_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "terraperm/boost.h"
#include "terraperm/classes.h"
#include "terraperm/fgc.h"
#include "terraperm/indices.h"
#include "terraperm/labels.h"
#include "terraperm/stack.h"

namespace terraperm {

enum class Stage { kFeatures, kLabels, kSample, kTrain, kPredict, kEvaluate, kFgc };

inline constexpr std::array<Stage, 7> kAllStages = {Stage::kFeatures, Stage::kLabels,
                                                    Stage::kSample,   Stage::kTrain,
                                                    Stage::kPredict,  Stage::kEvaluate,
                                                    Stage::kFgc};

std::string_view to_string(Stage stage);
Stage parse_stage(std::string_view text);

struct SamplingConfig {
  std::size_t train_size = 4000;
  std::uint64_t train_seed = 1;
  std::size_t validation_size = 1000;
  std::uint64_t validation_seed = 2;
};

struct FgcConfig {
  double radius_m = kDefaultFgcRadius;
  std::set<ClassCode> include = {ClassCode::kStructure, ClassCode::kRoad};
  // What the detected strips are compared against. An ASCII label raster is
  // dilated like the classification; a .geojson file holds ready-made strip
  // polygons (any class) and is rasterized as is. Defaults to the labels
  // stage output.
  std::optional<std::filesystem::path> reference;
};

struct PipelineConfig {
  std::filesystem::path output_dir;
  std::optional<std::filesystem::path> optical_manifest;
  std::optional<std::filesystem::path> radar_manifest;
  std::vector<Sensor> sensors = {Sensor::kOptical, Sensor::kRadar};
  BandRoleMap band_roles;
  std::filesystem::path land_cover;
  std::filesystem::path roads;
  RoadWidthTable road_widths;
  ClassPrecedence class_precedence = kDefaultPrecedence;
  SamplingConfig sampling;
  BoostConfig boost;
  FgcConfig fgc;
  int threads = 1;

  bool uses(Sensor s) const;
  // Throws ConfigError naming the field. Checks referenced inputs exist.
  void validate() const;
  // Effective configuration as JSON text (paths as absolute strings).
  std::string to_json() const;
};

// Relative paths in the file are resolved against its directory.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);

// Sets train_seed = seed, validation_seed = seed + 1 and the booster seed.
void apply_seed(PipelineConfig& config, std::uint64_t seed);

struct StageResult {
  Stage stage;
  bool skipped = false;  // outputs were already up to date
  std::vector<std::filesystem::path> outputs;
};

// Runs one stage. Missing inputs raise MissingArtifactError naming the file.
// The stage is skipped when run_manifest.json shows the same config section,
// unchanged input checksums and intact outputs.
StageResult run_stage(Stage stage, const PipelineConfig& config);
std::vector<StageResult> run_all(const PipelineConfig& config);

// Paths of stage artifacts under an output directory.
namespace artifacts {
std::filesystem::path features_dir(const std::filesystem::path& out);
std::filesystem::path labels(const std::filesystem::path& out);
std::filesystem::path train_samples(const std::filesystem::path& out);
std::filesystem::path validation_samples(const std::filesystem::path& out);
std::filesystem::path model(const std::filesystem::path& out);
std::filesystem::path classification(const std::filesystem::path& out);
std::filesystem::path metrics(const std::filesystem::path& out);
std::filesystem::path fgc_report(const std::filesystem::path& out);
std::filesystem::path run_manifest(const std::filesystem::path& out);
}  // namespace artifacts

// "trace", "debug", "info", "warn", "error" or "off". Logs go to stderr.
void set_log_level(std::string_view level);

}  // namespace terraperm

#endif  // TERRAPERM_PIPELINE_H_
