// terraperm: permanent-structure mapping pipeline.
//
//   terraperm <stage> --config pipeline.json [--threads N] [--seed N] [overrides]
//   terraperm all --config pipeline.json
//   terraperm synth --out DIR
//
// Exit status: 0 success, 1 invalid configuration or missing input,
// 2 any other failure.

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "terraperm/error.h"
#include "terraperm/pipeline.h"
#include "terraperm/synthetic.h"

namespace {

struct Overrides {
  std::string config;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<std::vector<std::string>> sensors;
  std::optional<int> rounds;
  std::optional<double> learning_rate;
  std::optional<int> max_depth;
  std::optional<double> lambda;
  std::optional<double> gamma;
  std::optional<double> min_child_hessian;
  std::optional<int> bins;
  std::optional<double> fgc_radius;
  std::string log_level = "info";
};

void add_pipeline_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "Pipeline JSON config")->required();
  cmd->add_option("--threads", o.threads, "Worker threads (outputs do not depend on it)");
  cmd->add_option("--seed", o.seed, "Sets the sampling seeds (N, N+1) and the booster seed");
  cmd->add_option("--output-dir", o.output_dir, "Overrides output_dir");
  cmd->add_option("--sensors", o.sensors, "Sensors to use: optical, radar");
  cmd->add_option("--rounds", o.rounds, "boost.rounds");
  cmd->add_option("--learning-rate", o.learning_rate, "boost.learning_rate");
  cmd->add_option("--max-depth", o.max_depth, "boost.max_depth");
  cmd->add_option("--lambda", o.lambda, "boost.lambda");
  cmd->add_option("--gamma", o.gamma, "boost.gamma");
  cmd->add_option("--min-child-hessian", o.min_child_hessian, "boost.min_child_hessian");
  cmd->add_option("--bins", o.bins, "boost.bins");
  cmd->add_option("--fgc-radius", o.fgc_radius, "fgc.radius_m");
  cmd->add_option("--log-level", o.log_level, "trace, debug, info, warn, error or off");
}

terraperm::PipelineConfig effective_config(const Overrides& o) {
  using namespace terraperm;
  PipelineConfig c = load_config(o.config);
  if (o.threads) c.threads = *o.threads;
  if (o.seed) apply_seed(c, *o.seed);
  if (o.output_dir) c.output_dir = std::filesystem::absolute(*o.output_dir).lexically_normal();
  if (o.sensors) {
    c.sensors.clear();
    for (const auto& s : *o.sensors) {
      try {
        c.sensors.push_back(parse_sensor(s));
      } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("--sensors: ") + e.what());
      }
    }
    std::sort(c.sensors.begin(), c.sensors.end());
    if (std::adjacent_find(c.sensors.begin(), c.sensors.end()) != c.sensors.end()) {
      throw ConfigError("--sensors: duplicate sensor");
    }
  }
  if (o.rounds) c.boost.rounds = *o.rounds;
  if (o.learning_rate) c.boost.learning_rate = *o.learning_rate;
  if (o.max_depth) c.boost.max_depth = *o.max_depth;
  if (o.lambda) c.boost.lambda = *o.lambda;
  if (o.gamma) c.boost.gamma = *o.gamma;
  if (o.min_child_hessian) c.boost.min_child_hessian = *o.min_child_hessian;
  if (o.bins) c.boost.bins = *o.bins;
  if (o.fgc_radius) c.fgc.radius_m = *o.fgc_radius;
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"terraperm: map permanent structures from Sentinel time series"};
  app.require_subcommand(1);

  Overrides overrides;
  std::vector<std::pair<CLI::App*, std::optional<terraperm::Stage>>> commands;
  for (terraperm::Stage s : terraperm::kAllStages) {
    CLI::App* cmd = app.add_subcommand(std::string(terraperm::to_string(s)),
                                       "Run the " + std::string(terraperm::to_string(s)) + " stage");
    add_pipeline_options(cmd, overrides);
    commands.emplace_back(cmd, s);
  }
  CLI::App* all = app.add_subcommand("all", "Run every stage in order");
  add_pipeline_options(all, overrides);
  commands.emplace_back(all, std::nullopt);

  terraperm::SyntheticSceneOptions scene;
  std::string synth_dir;
  CLI::App* synth = app.add_subcommand("synth", "Write a synthetic town/roads/lake scene");
  synth->add_option("-o,--out", synth_dir, "Output directory")->required();
  synth->add_option("--size", scene.size, "Scene width and height in pixels");
  synth->add_option("--seed", scene.seed, "Scene seed");
  synth->add_flag("!--no-misalign", scene.misalign, "Write every date aligned");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) {
      const auto config = terraperm::write_synthetic_scene(terraperm::make_synthetic_scene(scene),
                                                           synth_dir, scene);
      std::cerr << "wrote " << config.string() << "\n";
      return 0;
    }
    terraperm::set_log_level(overrides.log_level);
    for (const auto& [cmd, stage] : commands) {
      if (!cmd->parsed()) continue;
      const terraperm::PipelineConfig config = effective_config(overrides);
      if (stage) {
        terraperm::run_stage(*stage, config);
      } else {
        terraperm::run_all(config);
      }
    }
    return 0;
  } catch (const terraperm::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const terraperm::MissingArtifactError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
