// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>
#include <string>

#include "oracles.h"
#include "terraperm/boost.h"
#include "terraperm/fgc.h"
#include "terraperm/indices.h"
#include "terraperm/labels.h"
#include "terraperm/metrics.h"
#include "terraperm/pipeline.h"
#include "terraperm/synthetic.h"
#include "terraperm/temporal.h"
#include "test_util.h"

namespace tp = terraperm;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += "failed: " + what;
    }
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome feature_decomposition() {
  Outcome o;
  const auto optical = tp::oracle::random_stack(tp::Sensor::kOptical, 18, 64, 64, 0.05, 1);
  const auto radar = tp::oracle::random_stack(tp::Sensor::kRadar, 12, 64, 64, 0.05, 2);
  const auto t0 = std::chrono::steady_clock::now();
  const tp::FeatureCube cube = tp::build_feature_cube(tp::derive_index_series(optical, {}), radar);
  const double elapsed = seconds_since(t0);
  const auto& names = cube.feature_names();
  const auto from_radar = std::count_if(names.begin(), names.end(), [](const std::string& n) {
    return n.rfind("VV_", 0) == 0 || n.rfind("VH_", 0) == 0;
  });
  o.check(cube.feature_count() == 133, "feature count " + std::to_string(cube.feature_count()));
  o.check(from_radar == 14, "radar features " + std::to_string(from_radar));
  o.check(cube.feature_count() - from_radar == 119, "optical features");
  o.check(tp::build_feature_cube(tp::derive_index_series(optical, {})).feature_count() == 119,
          "optical-only cube");
  o.check(tp::build_feature_cube(radar).feature_count() == 14, "radar-only cube");
  o.check(elapsed < 1.0, "64x64 cube took " + fmt(elapsed, 3) + " s");
  o.note("133 = " + std::to_string(cube.feature_count() - from_radar) + " optical + " +
         std::to_string(from_radar) + " radar, built in " + fmt(elapsed, 3) + " s");
  return o;
}

Outcome kappa_oracle() {
  Outcome o;
  std::mt19937_64 rng(2);
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<std::vector<std::int64_t>> rows(4, std::vector<std::int64_t>(4));
    const std::uint64_t scale = 1 + rng() % 1000;
    for (auto& r : rows)
      for (auto& v : r) v = static_cast<std::int64_t>(rng() % scale);
    rows[rng() % 4][rng() % 4] += 1;
    const double got = tp::cohen_kappa(tp::ConfusionMatrix::from_rows(rows));
    worst = std::max(worst, std::abs(got - tp::oracle::kappa(rows)));
  }
  o.check(worst <= 1e-12, "max deviation " + sci(worst));
  const double worked = tp::cohen_kappa(tp::ConfusionMatrix::from_rows({{50, 10}, {5, 35}}));
  o.check(std::abs(worked - 0.693877551020408) <= 1e-9, "worked example " + fmt(worked, 12));
  o.note("1000 matrices, max |diff| " + sci(worst) + ", worked example " + fmt(worked, 9));
  return o;
}

Outcome percentile_oracle() {
  Outcome o;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  // Reflectance, normalized index and backscatter (dB) series.
  const std::pair<double, double> domains[] = {{0.0, 1.0}, {-1.0, 1.0}, {-35.0, 5.0}};
  double worst = 0;
  bool extremes_exact = true;
  for (int t = 0; t < 10000; ++t) {
    std::vector<double> s(2 + rng() % 17);
    const auto [lo, hi] = domains[t % 3];
    std::uniform_real_distribution<double> value(lo, hi);
    const double missing = u(rng) * 0.5;
    for (auto& x : s) x = u(rng) < missing ? tp::kDefaultNodata : value(rng);
    const tp::TemporalStats got = tp::temporal_stats(s, tp::kDefaultNodata);
    const auto want = tp::oracle::temporal_stats(s, tp::kDefaultNodata);
    for (std::size_t i = 0; i < 7; ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
    std::vector<double> present;
    for (double x : s)
      if (x != tp::kDefaultNodata) present.push_back(x);
    if (present.size() >= 2) {
      extremes_exact &= got[1] == *std::min_element(present.begin(), present.end());
      extremes_exact &= got[5] == *std::max_element(present.begin(), present.end());
    }
  }
  o.check(worst <= 1e-10, "max deviation " + sci(worst));
  o.check(extremes_exact, "P0/P100 differ from min/max");
  o.note("10000 series, max |diff| " + sci(worst) + ", P0/P100 exact");
  return o;
}

Outcome dilation_oracle() {
  Outcome o;
  const tp::GridGeometry g{64, 64, 0, 640, 10};
  std::mt19937_64 rng(4);
  int mismatches = 0;
  for (int t = 0; t < 100; ++t) {
    tp::BinaryMask m(g);
    const double share = (1 + rng() % 50) / 1000.0;
    std::bernoulli_distribution on(share);
    for (std::size_t i = 0; i < m.pixel_count(); ++i) m.set(i, on(rng));
    for (double r : {0.0, 10.0, 35.0, 100.0}) mismatches += !(tp::dilate(m, r) == tp::oracle::dilate(m, r));
  }
  tp::BinaryMask point(g);
  point.set(32, 32, true);
  const std::size_t disk = tp::dilate(point, 100).count();
  o.check(mismatches == 0, std::to_string(mismatches) + " mismatching dilations");
  o.check(disk == 317, "single pixel disk has " + std::to_string(disk));
  o.note("400 dilations equal brute force; r=100 m disk = " + std::to_string(disk) + " px");
  return o;
}

Outcome rasterization_oracle() {
  Outcome o;
  std::mt19937_64 rng(5);
  int polygon_bad = 0, road_bad = 0, monotone_bad = 0;
  for (int scene = 0; scene < 50; ++scene) {
    const tp::GridGeometry g{1 + static_cast<int>(rng() % 32), 1 + static_cast<int>(rng() % 32),
                             1000.0 + scene, 5000.0 - scene, 10.0};
    const tp::VectorLayer polygons = tp::oracle::random_polygon_layer(rng, g, 1 + static_cast<int>(rng() % 5));
    polygon_bad += !(tp::rasterize_polygons(polygons, g) == tp::oracle::rasterize_polygons(polygons, g));
    const tp::VectorLayer roads = tp::oracle::random_road_layer(rng, g);
    const tp::RoadWidthTable widths;
    road_bad += !(tp::rasterize_roads(roads, widths, g) == tp::oracle::rasterize_roads(roads, widths, g));
    tp::BinaryMask previous(g);
    for (double w : {2.0, 5.0, 8.0, 10.0, 15.0, 30.0}) {
      tp::RoadWidthTable uniform;
      uniform.widths.clear();
      uniform.default_width = w;
      const tp::BinaryMask m = tp::rasterize_roads(roads, uniform, g);
      for (std::size_t i = 0; i < m.pixel_count(); ++i) monotone_bad += previous.at(i) && !m.at(i);
      previous = m;
    }
  }
  o.check(polygon_bad == 0, std::to_string(polygon_bad) + " polygon scenes differ");
  o.check(road_bad == 0, std::to_string(road_bad) + " road scenes differ");
  o.check(monotone_bad == 0, std::to_string(monotone_bad) + " pixels lost when widening");
  o.note("50 scenes match point-in-polygon and distance brute force; widths monotone");
  return o;
}

double holdout_accuracy(const tp::BoostModel& m, const tp::SampleSet& s, std::vector<int>& pred) {
  pred.clear();
  std::size_t hit = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto p = tp::predict(m, s.row_features(i));
    pred.push_back(tp::code_of(p.label));
    hit += p.label == s.labels[i];
  }
  return static_cast<double>(hit) / s.size();
}

Outcome boosting() {
  Outcome o;
  // (a) loss is non-increasing on every dataset used here.
  int loss_rises = 0, datasets = 0;
  auto watch = [&](const tp::SampleSet& s, const tp::BoostConfig& cfg) {
    std::vector<double> history;
    tp::BoostModel m = tp::train(s, cfg, &history);
    ++datasets;
    for (std::size_t r = 1; r < history.size(); ++r) loss_rises += history[r] > history[r - 1];
    return m;
  };

  // (b) few distinct values: histogram trees equal exact greedy.
  int tree_mismatch = 0, trees_checked = 0;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const tp::SampleSet s = tp::oracle::discrete_dataset(500, 4, 3 + static_cast<int>(seed) * 8, seed);
    tp::BoostConfig cfg;
    cfg.rounds = 6;
    cfg.max_depth = 2 + static_cast<int>(seed % 4);
    cfg.bins = 64;
    cfg.lambda = seed % 2 ? 1.0 : 0.5;
    cfg.learning_rate = 0.3;
    const tp::BoostModel m = watch(s, cfg);
    const auto want = tp::oracle::exact_greedy_boost(s, cfg, m.bin_boundaries);
    for (std::size_t t = 0; t < want.size(); ++t) {
      ++trees_checked;
      const auto& a = m.trees[t].nodes;
      const auto& b = want[t].nodes;
      bool same = a.size() == b.size();
      for (std::size_t n = 0; same && n < a.size(); ++n) {
        same = a[n].feature == b[n].feature && a[n].threshold == b[n].threshold && a[n].left == b[n].left &&
               a[n].right == b[n].right && std::abs(a[n].weight - b[n].weight) <= 1e-9;
      }
      tree_mismatch += !same;
    }
  }

  // (c) separable blobs.
  const tp::SampleSet train_set = tp::oracle::gaussian_blobs(2000, 4, 6.0, 61);
  const tp::SampleSet test_set = tp::oracle::gaussian_blobs(1000, 4, 6.0, 62);
  tp::BoostConfig cfg;
  cfg.rounds = 50;
  const auto t0 = std::chrono::steady_clock::now();
  const tp::BoostModel blobs = watch(train_set, cfg);
  const double elapsed = seconds_since(t0);
  std::vector<int> pred;
  const double acc = holdout_accuracy(blobs, test_set, pred);
  std::vector<int> truth;
  for (auto c : test_set.labels) truth.push_back(tp::code_of(c));
  const double kappa = tp::cohen_kappa(tp::confusion(pred, truth));
  for (double sep : {1.0, 3.0}) watch(tp::oracle::gaussian_blobs(600, 3, sep, 70), cfg);

  o.check(loss_rises == 0, std::to_string(loss_rises) + " rounds raised the loss");
  o.check(tree_mismatch == 0, std::to_string(tree_mismatch) + " of " + std::to_string(trees_checked) +
                                  " trees differ from exact greedy");
  o.check(acc >= 0.97, "held-out accuracy " + fmt(acc));
  o.check(kappa >= 0.95, "held-out kappa " + fmt(kappa));
  o.check(elapsed < 30.0, "training took " + fmt(elapsed, 2) + " s");
  o.note("(a) loss monotone on " + std::to_string(datasets) + " datasets; (b) " + std::to_string(trees_checked) +
         " trees equal exact greedy; (c) acc " + fmt(acc) + ", kappa " + fmt(kappa) + ", " + fmt(elapsed, 2) +
         " s");
  return o;
}

// The 128x128 scene shared by the last two criteria.
struct SceneRun {
  explicit SceneRun(const tp::SyntheticSceneOptions& opt) : scene(tp::make_synthetic_scene(opt)) {}

  tp::SyntheticScene scene;
  tp::testing::TempDir dir;
  fs::path config_path;
  fs::path out;
  tp::PipelineConfig config;
};

SceneRun& scene_run() {
  static const std::unique_ptr<SceneRun> run = [] {
    tp::SyntheticSceneOptions opt;
    opt.size = 128;
    auto r = std::make_unique<SceneRun>(opt);
    r->config_path = tp::write_synthetic_scene(r->scene, r->dir.path(), opt);
    r->config = tp::load_config(r->config_path);
    r->out = r->config.output_dir;
    return r;
  }();
  return *run;
}

double metric_kappa(const fs::path& out) {
  return json::parse(slurp(tp::artifacts::metrics(out)))["kappa"].get<double>();
}

Outcome end_to_end() {
  Outcome o;
  SceneRun& run = scene_run();
  const auto t0 = std::chrono::steady_clock::now();
  const auto results = tp::run_all(run.config);
  const double elapsed = seconds_since(t0);
  int ran = 0;
  for (const auto& r : results) ran += !r.skipped;
  o.check(ran == 7, std::to_string(ran) + " stages ran");
  const json metrics = json::parse(slurp(tp::artifacts::metrics(run.out)));
  const double kappa = metrics["kappa"].get<double>();
  const json& structure = metrics["classes"][tp::code_of(tp::ClassCode::kStructure)]["f1"];
  const double f1 = structure.is_null() ? 0.0 : structure.get<double>();
  o.check(kappa >= 0.90, "validation kappa " + fmt(kappa));
  o.check(f1 >= 0.90, "structure F1 " + fmt(f1));

  // Same config into a fresh directory: every artifact must be identical.
  tp::PipelineConfig again = run.config;
  again.output_dir = run.dir / "rerun";
  tp::run_all(again);
  int differing = 0, compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(run.out)) {
    if (!e.is_regular_file() || e.path().filename() == "run_manifest.json") continue;
    const fs::path twin = again.output_dir / fs::relative(e.path(), run.out);
    ++compared;
    differing += slurp(e.path()) != slurp(twin);
  }
  o.check(compared > 0 && differing == 0, std::to_string(differing) + " of " + std::to_string(compared) +
                                              " artifacts differ on rerun");
  int skipped = 0;
  for (const auto& r : tp::run_all(run.config)) skipped += r.skipped;
  o.check(skipped == 7, "rerun in place re-executed " + std::to_string(7 - skipped) + " stages");

  // Direction of effect against each single sensor.
  double single[2] = {0, 0};
  const tp::Sensor sensors[2] = {tp::Sensor::kOptical, tp::Sensor::kRadar};
  for (int s = 0; s < 2; ++s) {
    tp::PipelineConfig one = run.config;
    one.sensors = {sensors[s]};
    one.output_dir = run.dir / (s == 0 ? "optical_only" : "radar_only");
    for (tp::Stage st : {tp::Stage::kFeatures, tp::Stage::kLabels, tp::Stage::kSample, tp::Stage::kTrain,
                         tp::Stage::kPredict, tp::Stage::kEvaluate}) {
      tp::run_stage(st, one);
    }
    single[s] = metric_kappa(one.output_dir);
  }
  o.check(kappa >= single[0], "optical-only kappa " + fmt(single[0]) + " beats multi-sensor");
  o.check(kappa >= single[1], "radar-only kappa " + fmt(single[1]) + " beats multi-sensor");
  o.note("kappa " + fmt(kappa) + ", structure F1 " + fmt(f1) + ", " + std::to_string(compared) +
         " artifacts byte-identical on rerun, optical-only kappa " + fmt(single[0]) + ", radar-only kappa " +
         fmt(single[1]) + ", pipeline " + fmt(elapsed, 1) + " s");
  return o;
}

Outcome fgc_workflow() {
  Outcome o;
  SceneRun& run = scene_run();
  if (!fs::exists(tp::artifacts::fgc_report(run.out))) tp::run_all(run.config);
  const json report = json::parse(slurp(tp::artifacts::fgc_report(run.out)));
  const double iou = report["iou"].get<double>();
  o.check(iou >= 0.85, "IoU " + fmt(iou));

  const fs::path dir = tp::artifacts::fgc_report(run.out).parent_path();
  const tp::FgcMask detected = tp::BinaryMask::from_grid(tp::read_ascii_grid(dir / "fgc_detected.asc"));
  const tp::FgcMask reference = tp::BinaryMask::from_grid(tp::read_ascii_grid(dir / "fgc_reference.asc"));
  const tp::MaskComparison cmp = tp::compare_masks(reference, detected);
  o.check(cmp.omission == report["omission"].get<std::size_t>(), "report omission disagrees with masks");

  // Where the reference is silent but the classification sees structures.
  const tp::GridGeometry& g = run.scene.geometry;
  const double radius = run.config.fgc.radius_m;
  tp::BinaryMask omitted(g);
  for (std::size_t i = 0; i < omitted.pixel_count(); ++i) omitted.set(i, detected.at(i) && !reference.at(i));

  // The strip zone of the withheld sites, with one pixel of slack for
  // footprints that bleed into a neighbouring pixel.
  const tp::FgcMask withheld_zone = tp::dilate(tp::structure_mask(tp::rasterize_polygons(run.scene.withheld, g)),
                                               radius + g.pixel_size);
  std::size_t outside = 0;
  for (std::size_t i = 0; i < omitted.pixel_count(); ++i) outside += omitted.at(i) && !withheld_zone.at(i);
  o.check(cmp.omission > 0, "no omissions reported");
  o.check(outside == 0, std::to_string(outside) + " of " + std::to_string(cmp.omission) +
                            " omission pixels lie away from withheld sites");

  int sites_found = 0;
  const int sites = static_cast<int>(run.scene.withheld.features.size());
  for (const auto& site : run.scene.withheld.features) {
    tp::VectorLayer one;
    one.features.push_back(site);
    const tp::FgcMask zone = tp::dilate(tp::structure_mask(tp::rasterize_polygons(one, g)), radius);
    bool hit = false;
    for (std::size_t i = 0; i < zone.pixel_count() && !hit; ++i) hit = zone.at(i) && omitted.at(i);
    sites_found += hit;
  }
  o.check(sites_found == sites, std::to_string(sites - sites_found) + " withheld sites produced no omission");
  o.note("IoU " + fmt(iou) + ", omission " + std::to_string(cmp.omission) + " px all within the strips of " +
         std::to_string(sites) + " withheld sites (" + std::to_string(sites_found) + " flagged), commission " +
         std::to_string(cmp.commission) + " px");
  return o;
}

}  // namespace

int main() {
  tp::set_log_level("warn");
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"feature decomposition", feature_decomposition},
      {"kappa oracle", kappa_oracle},
      {"percentile/variance oracle", percentile_oracle},
      {"dilation oracle", dilation_oracle},
      {"rasterization oracle", rasterization_oracle},
      {"boosting correctness", boosting},
      {"end-to-end synthetic scene", end_to_end},
      {"FGC workflow", fgc_workflow},
  };
  int failed = 0;
  int n = 0;
  for (const auto& [name, run] : criteria) {
    ++n;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
