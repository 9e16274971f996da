#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.h"
#include "terraperm/boost.h"
#include "terraperm/error.h"
#include "terraperm/metrics.h"
#include "terraperm/parallel.h"
#include "test_util.h"

namespace terraperm {
namespace {

double accuracy(const BoostModel& model, const SampleSet& s) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < s.size(); ++i) hit += predict(model, s.row_features(i)).label == s.labels[i];
  return static_cast<double>(hit) / s.size();
}

TEST(Softmax, Examples) {
  for (double p : softmax(std::vector<double>{0, 0, 0, 0})) EXPECT_DOUBLE_EQ(p, 0.25);
  for (double p : softmax(std::vector<double>{1000, 1000, 1000, 1000})) EXPECT_DOUBLE_EQ(p, 0.25);
  const auto p = softmax(std::vector<double>{std::log(2.0), 0, 0, 0});
  EXPECT_NEAR(p[0], 0.4, 1e-15);
  for (int k = 1; k < 4; ++k) EXPECT_NEAR(p[k], 0.2, 1e-15);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> s(4);
    for (auto& x : s) x = u(rng);
    const auto q = softmax(s);
    EXPECT_NEAR(std::accumulate(q.begin(), q.end(), 0.0), 1.0, 1e-12);
  }
}

TEST(GradHess, Examples) {
  const GradHess gh = grad_hess(std::vector<double>{0.25, 0.25, 0.25, 0.25}, 0);
  EXPECT_EQ(gh.grad, (std::vector<double>{-0.75, 0.25, 0.25, 0.25}));
  for (double h : gh.hess) EXPECT_DOUBLE_EQ(h, 0.1875);
  const GradHess fit = grad_hess(std::vector<double>{0, 1, 0, 0}, 1);
  EXPECT_EQ(fit.grad[1], 0.0);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> s(4);
    for (auto& x : s) x = std::uniform_real_distribution<double>(-3, 3)(rng);
    const GradHess r = grad_hess(softmax(s), static_cast<int>(rng() % 4));
    EXPECT_NEAR(std::accumulate(r.grad.begin(), r.grad.end(), 0.0), 0.0, 1e-12);
    for (double h : r.hess) EXPECT_GE(h, 0.0);
  }
}

TEST(SplitGain, Examples) {
  EXPECT_EQ(split_gain(0, 3, 0, 4, 1, 0.5), -0.5);
  EXPECT_DOUBLE_EQ(split_gain(-2, 3, 2, 3, 1, 0), 1.0);
  EXPECT_NEAR(split_gain(-2, 3, 2, 3, 1e15, 0.25), -0.25, 1e-12);
}

TEST(QuantileCuts, DistinctAndQuantile) {
  EXPECT_EQ(quantile_cuts(std::vector<double>{3, 1, 2, 1, 3}, 8), (std::vector<double>{1.5, 2.5}));
  EXPECT_TRUE(quantile_cuts(std::vector<double>{4, 4, 4}, 8).empty());
  std::vector<double> col(1000);
  std::iota(col.begin(), col.end(), 0.0);
  const auto cuts = quantile_cuts(col, 4);
  EXPECT_EQ(cuts, (std::vector<double>{249.5, 499.5, 749.5}));
  const auto many = quantile_cuts(col, 256);
  EXPECT_LE(many.size(), 255u);
  EXPECT_TRUE(std::is_sorted(many.begin(), many.end()));
}

TEST(Config, Validation) {
  BoostConfig c;
  EXPECT_NO_THROW(c.validate());
  auto expect_field = [](BoostConfig bad, const std::string& field) {
    try {
      bad.validate();
      FAIL() << field;
    } catch (const InvalidArgument& e) {
      EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
    }
  };
  BoostConfig b = c;
  b.rounds = 0;
  expect_field(b, "boost.rounds");
  b = c;
  b.learning_rate = 1.5;
  expect_field(b, "boost.learning_rate");
  b = c;
  b.bins = 1;
  expect_field(b, "boost.bins");
  b = c;
  b.bins = 257;
  expect_field(b, "boost.bins");
  b = c;
  b.lambda = -1;
  expect_field(b, "boost.lambda");
  b = c;
  b.max_depth = 0;
  expect_field(b, "boost.max_depth");
}

TEST(Train, BlobsReachHighAccuracy) {
  const SampleSet train_set = oracle::gaussian_blobs(2000, 4, 8.0, 11);
  BoostConfig cfg;
  cfg.rounds = 30;
  std::vector<double> loss;
  const BoostModel model = train(train_set, cfg, &loss);
  EXPECT_GE(accuracy(model, train_set), 0.99);
  ASSERT_EQ(loss.size(), 31u);
  for (std::size_t r = 1; r < loss.size(); ++r) EXPECT_LE(loss[r], loss[r - 1]);
  EXPECT_EQ(model.trees.size(), 30u * 4u);
  for (const auto& t : model.trees) EXPECT_LE(t.depth(), cfg.max_depth);
}

TEST(Train, RootSplitFindsThreshold) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 100);
  SampleSet s;
  s.feature_names = {"x"};
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng);
    s.push_back(i, 0, x < 37.0 ? ClassCode::kRemainder : ClassCode::kWater, std::vector<double>{x});
  }
  BoostConfig cfg;
  cfg.rounds = 1;
  cfg.bins = 64;
  const BoostModel model = train(s, cfg);
  const auto& cuts = model.bin_boundaries[0];
  const TreeNode& root = model.tree(0, 0).nodes[0];
  ASSERT_FALSE(root.is_leaf());
  // Within one bin of the true threshold.
  const auto pos = std::lower_bound(cuts.begin(), cuts.end(), 37.0) - cuts.begin();
  const double lo = cuts[std::max<long>(0, pos - 1)], hi = cuts[std::min<long>(cuts.size() - 1, pos)];
  EXPECT_GE(root.threshold, lo);
  EXPECT_LE(root.threshold, hi);
}

TEST(Train, SingleStumpClosedForm) {
  SampleSet s;
  s.feature_names = {"a", "b"};
  s.push_back(0, 0, ClassCode::kRemainder, std::vector<double>{1, 0});
  s.push_back(1, 0, ClassCode::kStructure, std::vector<double>{0, 1});
  BoostConfig cfg;
  cfg.rounds = 1;
  cfg.max_depth = 1;
  cfg.lambda = 0;
  cfg.learning_rate = 1.0;
  cfg.min_child_hessian = 0;
  cfg.num_classes = 2;
  const BoostModel model = train(s, cfg);
  // p = 0.5 everywhere: g = -0.5 for the true class, +0.5 otherwise, h = 0.25.
  // Each stump separates the two points; leaves are -g/h = +-2.
  for (int k = 0; k < 2; ++k) {
    const RegressionTree& t = model.tree(0, k);
    ASSERT_EQ(t.nodes.size(), 3u);
    EXPECT_EQ(t.nodes[0].feature, 0);
    EXPECT_EQ(t.nodes[0].threshold, 0.5);
    const double sign = k == 0 ? 1.0 : -1.0;
    EXPECT_DOUBLE_EQ(t.predict(s.row_features(0)), 2.0 * sign);
    EXPECT_DOUBLE_EQ(t.predict(s.row_features(1)), -2.0 * sign);
    EXPECT_DOUBLE_EQ(t.nodes[0].gain, 0.5 * (0.25 / 0.25 + 0.25 / 0.25 - 0.0));
  }
}

TEST(Train, SingleClassIsRejected) {
  SampleSet s;
  s.feature_names = {"x"};
  for (int i = 0; i < 5; ++i) s.push_back(i, 0, ClassCode::kWater, std::vector<double>{double(i)});
  try {
    train(s, {});
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("constant classifier"), std::string::npos);
  }
  EXPECT_THROW(train(SampleSet{}, {}), InvalidArgument);
}

TEST(Train, HistogramTreesEqualExactGreedy) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const SampleSet s = oracle::discrete_dataset(400, 3, 6 + seed * 7, seed + 100);
    BoostConfig cfg;
    cfg.rounds = 4;
    cfg.max_depth = 3 + seed % 3;
    cfg.bins = 64;
    cfg.lambda = seed % 2 ? 1.0 : 0.1;
    cfg.min_child_hessian = seed % 3 ? 1.0 : 0.0;
    const BoostModel model = train(s, cfg);
    const auto want = oracle::exact_greedy_boost(s, cfg, model.bin_boundaries);
    ASSERT_EQ(model.trees.size(), want.size());
    for (std::size_t t = 0; t < want.size(); ++t) {
      const RegressionTree& got = model.trees[t];
      ASSERT_EQ(got.nodes.size(), want[t].nodes.size()) << "seed " << seed << " tree " << t;
      for (std::size_t n = 0; n < got.nodes.size(); ++n) {
        EXPECT_EQ(got.nodes[n].feature, want[t].nodes[n].feature);
        EXPECT_EQ(got.nodes[n].threshold, want[t].nodes[n].threshold);
        EXPECT_EQ(got.nodes[n].left, want[t].nodes[n].left);
        EXPECT_NEAR(got.nodes[n].weight, want[t].nodes[n].weight, 1e-9);
        if (!got.nodes[n].is_leaf()) {
          EXPECT_GT(got.nodes[n].gain, 0.0);
          EXPECT_GE(got.nodes[got.nodes[n].left].sum_hess, cfg.min_child_hessian);
          EXPECT_GE(got.nodes[got.nodes[n].right].sum_hess, cfg.min_child_hessian);
        }
      }
    }
  }
}

TEST(Train, HistogramGainNeverExceedsExact) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SampleSet s = oracle::gaussian_blobs(300, 3, 2.0, seed);
    std::vector<double> g(s.size()), h(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto gh = grad_hess(std::vector<double>{0.25, 0.25, 0.25, 0.25}, code_of(s.labels[i]));
      g[i] = gh.grad[0];
      h[i] = gh.hess[0];
    }
    BoostConfig cfg;
    cfg.max_depth = 1;
    cfg.bins = 8;
    const BinnedMatrix data(s.features, s.size(), 3, cfg.bins);
    const RegressionTree t = grow_tree(data, g, h, cfg);
    const double exact = oracle::best_exact_root_gain(s.features, s.size(), 3, g, h, cfg);
    EXPECT_LE(t.nodes[0].gain, exact + 1e-12);
    EXPECT_GT(t.nodes[0].gain, 0.0);
  }
}

TEST(Train, DeterministicAcrossThreadCounts) {
  const SampleSet s = oracle::gaussian_blobs(800, 6, 3.0, 5);
  BoostConfig cfg;
  cfg.rounds = 8;
  set_thread_count(1);
  const std::string one = train(s, cfg).to_json();
  set_thread_count(3);
  const std::string three = train(s, cfg).to_json();
  set_thread_count(1);
  EXPECT_EQ(one, three);
  EXPECT_EQ(train(s, cfg).to_json(), one);
}

TEST(Model, SaveLoadPredictsIdentically) {
  testing::TempDir dir;
  const SampleSet s = oracle::gaussian_blobs(500, 3, 3.0, 9);
  BoostConfig cfg;
  cfg.rounds = 5;
  const BoostModel model = train(s, cfg);
  model.save(dir / "m.json");
  const BoostModel back = BoostModel::load(dir / "m.json");
  EXPECT_EQ(back.to_json(), model.to_json());
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(predict(back, s.row_features(i)).probabilities, predict(model, s.row_features(i)).probabilities);
  }
  EXPECT_THROW(BoostModel::from_json("{}"), ParseError);
  EXPECT_THROW(BoostModel::from_json("not json"), ParseError);
}

TEST(Predict, ZeroTreesTieGoesToLowestClass) {
  BoostModel m;
  m.config.rounds = 0;
  m.feature_names = {"a"};
  m.base_score = {0.3, 0.3, 0.3, 0.3};
  const Prediction p = predict(m, std::vector<double>{1.0});
  EXPECT_EQ(p.label, ClassCode::kRemainder);
  EXPECT_THROW(predict(m, std::vector<double>{1.0, 2.0}), InvalidArgument);
}

TEST(Predict, CubeFlagsInvalidPixels) {
  const SampleSet s = oracle::gaussian_blobs(400, 2, 8.0, 13);
  BoostConfig cfg;
  cfg.rounds = 10;
  const BoostModel model = train(s, cfg);
  const GridGeometry g{3, 1, 0, 10, 10};
  std::vector<double> values = {-4, -4, 4, 4, kDefaultNodata, kDefaultNodata};
  const FeatureCube cube(g, kDefaultNodata, s.feature_names, values, {1, 1, 0});
  const CubePrediction p = predict(model, cube);
  EXPECT_EQ(p.labels.at(0), ClassCode::kRemainder);
  EXPECT_EQ(p.labels.at(1), ClassCode::kWater);
  EXPECT_EQ(p.flagged, (std::vector<std::uint8_t>{0, 0, 1}));
  EXPECT_EQ(p.labels.at(2), ClassCode::kRemainder);
  EXPECT_EQ(p.confidence.values()[2], 0.0);
  EXPECT_GT(p.confidence.values()[0], 0.5);
  const FeatureCube renamed(g, kDefaultNodata, {"b", "a"}, values, {1, 1, 0});
  EXPECT_THROW(predict(model, renamed), InvalidArgument);
}

}  // namespace
}  // namespace terraperm
