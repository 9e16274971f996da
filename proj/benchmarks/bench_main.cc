#include <benchmark/benchmark.h>

#include <random>

#include "terraperm/boost.h"
#include "terraperm/fgc.h"
#include "terraperm/indices.h"
#include "terraperm/synthetic.h"
#include "terraperm/temporal.h"

namespace {

using namespace terraperm;

const SyntheticScene& scene(int size) {
  static SyntheticScene s64 = [] {
    SyntheticSceneOptions o;
    o.size = 64;
    return make_synthetic_scene(o);
  }();
  static SyntheticScene s128 = [] {
    SyntheticSceneOptions o;
    o.size = 128;
    return make_synthetic_scene(o);
  }();
  return size == 64 ? s64 : s128;
}

void BM_FeatureCube(benchmark::State& state) {
  const SyntheticScene& s = scene(static_cast<int>(state.range(0)));
  const TimeSeriesStack optical = derive_index_series(s.optical, {});
  for (auto _ : state) benchmark::DoNotOptimize(build_feature_cube(optical, s.radar));
  state.SetItemsProcessed(state.iterations() * s.geometry.pixel_count());
}
BENCHMARK(BM_FeatureCube)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Dilate(benchmark::State& state) {
  const GridGeometry g{static_cast<int>(state.range(0)), static_cast<int>(state.range(0)), 0,
                       state.range(0) * 10.0, 10};
  std::mt19937_64 rng(1);
  std::bernoulli_distribution on(0.01);
  BinaryMask m(g);
  for (std::size_t i = 0; i < m.pixel_count(); ++i) m.set(i, on(rng));
  for (auto _ : state) benchmark::DoNotOptimize(dilate(m, 100.0));
  state.SetItemsProcessed(state.iterations() * g.pixel_count());
}
BENCHMARK(BM_Dilate)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

SampleSet blobs(std::size_t n, std::size_t features) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  SampleSet s;
  for (std::size_t f = 0; f < features; ++f) s.feature_names.push_back("f" + std::to_string(f));
  std::vector<double> row(features);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(rng() % kClassCount);
    for (std::size_t f = 0; f < features; ++f) row[f] = normal(rng) + (f % 4 == std::size_t(label) ? 2.0 : 0.0);
    s.push_back(static_cast<int>(i), 0, class_from_code(label), row);
  }
  return s;
}

void BM_Train(benchmark::State& state) {
  const SampleSet s = blobs(static_cast<std::size_t>(state.range(0)), 133);
  BoostConfig cfg;
  cfg.rounds = 20;
  for (auto _ : state) benchmark::DoNotOptimize(train(s, cfg));
  state.SetItemsProcessed(state.iterations() * s.size() * cfg.rounds);
}
BENCHMARK(BM_Train)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);

void BM_PredictCube(benchmark::State& state) {
  const SyntheticScene& s = scene(128);
  const FeatureCube cube = build_feature_cube(derive_index_series(s.optical, {}), s.radar);
  SampleSet samples;
  samples.feature_names = cube.feature_names();
  for (std::size_t i = 0; i < cube.pixel_count(); i += 7) {
    if (cube.valid(i)) samples.push_back(static_cast<int>(i % 128), static_cast<int>(i / 128), s.truth.at(i), cube.pixel(i));
  }
  BoostConfig cfg;
  cfg.rounds = 30;
  const BoostModel model = train(samples, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(predict(model, cube));
  state.SetItemsProcessed(state.iterations() * cube.pixel_count());
}
BENCHMARK(BM_PredictCube)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
