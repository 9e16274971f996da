#include "terraperm/boost.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include <nlohmann/json.hpp>

#include "terraperm/error.h"
#include "terraperm/io_util.h"

namespace terraperm {

using nlohmann::json;

void BoostConfig::validate() const {
  auto bad = [](const std::string& field, const std::string& why) {
    throw InvalidArgument("boost." + field + " " + why);
  };
  if (rounds < 1) bad("rounds", "must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) bad("learning_rate", "must lie in (0, 1]");
  if (max_depth < 1) bad("max_depth", "must be >= 1");
  if (!(lambda >= 0.0)) bad("lambda", "must be >= 0");
  if (!(gamma >= 0.0)) bad("gamma", "must be >= 0");
  if (!(min_child_hessian >= 0.0)) bad("min_child_hessian", "must be >= 0");
  if (bins < 2 || bins > 256) bad("bins", "must lie in [2, 256]");
  if (num_classes < 2) bad("num_classes", "must be >= 2");
}

double RegressionTree::predict(std::span<const double> x) const {
  int i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& n = nodes[i];
    i = x[n.feature] < n.threshold ? n.left : n.right;
  }
  return nodes[i].weight;
}

int RegressionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].is_leaf()) continue;
    d[nodes[i].left] = d[i] + 1;
    d[nodes[i].right] = d[i] + 1;
    best = std::max(best, d[i] + 1);
  }
  return best;
}

std::vector<double> BoostModel::raw_scores(std::span<const double> x) const {
  std::vector<double> s = base_score;
  const int k_count = config.num_classes;
  for (int r = 0; r < config.rounds; ++r) {
    for (int k = 0; k < k_count; ++k) s[k] += tree(r, k).predict(x);
  }
  return s;
}

namespace {

void softmax_into(std::span<const double> scores, std::span<double> out) {
  const double top = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    out[k] = std::exp(scores[k] - top);
    sum += out[k];
  }
  for (auto& p : out) p /= sum;
}

double leaf_weight(double g, double h, double lambda) {
  const double den = h + lambda;
  return den > 0.0 ? -g / den : 0.0;
}

}  // namespace

std::vector<double> softmax(std::span<const double> scores) {
  std::vector<double> out(scores.size());
  if (!scores.empty()) softmax_into(scores, out);
  return out;
}

GradHess grad_hess(std::span<const double> probs, int label) {
  GradHess out;
  out.grad.resize(probs.size());
  out.hess.resize(probs.size());
  for (std::size_t k = 0; k < probs.size(); ++k) {
    const double p = probs[k];
    out.grad[k] = p - (static_cast<int>(k) == label ? 1.0 : 0.0);
    out.hess[k] = p * (1.0 - p);
  }
  return out;
}

double split_gain(double gl, double hl, double gr, double hr, double lambda, double gamma) {
  auto term = [lambda](double g, double h) {
    const double den = h + lambda;
    return den > 0.0 ? g * g / den : 0.0;
  };
  return 0.5 * (term(gl, hl) + term(gr, hr) - term(gl + gr, hl + hr)) - gamma;
}

std::vector<double> quantile_cuts(std::span<const double> column, int bins) {
  std::vector<double> sorted(column.begin(), column.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct = sorted;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  auto midpoint = [&](std::size_t j) {
    return distinct[j - 1] + (distinct[j] - distinct[j - 1]) / 2.0;
  };
  std::vector<double> cuts;
  if (distinct.size() <= static_cast<std::size_t>(bins)) {
    for (std::size_t j = 1; j < distinct.size(); ++j) cuts.push_back(midpoint(j));
    return cuts;
  }
  const std::size_t n = sorted.size();
  std::size_t last = 0;
  for (int k = 1; k < bins; ++k) {
    const double v = sorted[static_cast<std::size_t>(k) * n / static_cast<std::size_t>(bins)];
    const auto j = static_cast<std::size_t>(
        std::lower_bound(distinct.begin(), distinct.end(), v) - distinct.begin());
    if (j == 0 || j <= last) continue;
    cuts.push_back(midpoint(j));
    last = j;
  }
  return cuts;
}

BinnedMatrix::BinnedMatrix(std::span<const double> features, std::size_t rows, std::size_t cols,
                           int bins)
    : rows_(rows), cols_(cols), cuts_(cols), bins_(rows * cols) {
  if (features.size() != rows * cols) throw InvalidArgument("feature matrix size mismatch");
  const long c_count = static_cast<long>(cols);
#pragma omp parallel
  {
    std::vector<double> column(rows);
#pragma omp for schedule(dynamic)
    for (long c = 0; c < c_count; ++c) {
      for (std::size_t r = 0; r < rows; ++r) column[r] = features[r * cols + c];
      cuts_[c] = quantile_cuts(column, bins);
      const auto& cut = cuts_[c];
      for (std::size_t r = 0; r < rows; ++r) {
        bins_[c * rows + r] = static_cast<std::uint8_t>(
            std::upper_bound(cut.begin(), cut.end(), column[r]) - cut.begin());
      }
    }
  }
}

namespace {

struct SplitChoice {
  bool found = false;
  int feature = -1;
  int bin = 0;  // samples with bin < this go left
  double gain = 0.0;
};

SplitChoice best_split(const BinnedMatrix& data, std::span<const double> grad,
                       std::span<const double> hess, const std::vector<std::uint32_t>& idx,
                       double g_total, double h_total, const BoostConfig& cfg) {
  const long f_count = static_cast<long>(data.cols());
  std::vector<SplitChoice> per_feature(data.cols());
#pragma omp parallel
  {
    std::vector<double> hg(256), hh(256);
    std::vector<std::size_t> hc(256);
#pragma omp for schedule(dynamic)
    for (long f = 0; f < f_count; ++f) {
      const int nb = data.bin_count(static_cast<std::size_t>(f));
      if (nb < 2) continue;
      std::fill(hg.begin(), hg.begin() + nb, 0.0);
      std::fill(hh.begin(), hh.begin() + nb, 0.0);
      std::fill(hc.begin(), hc.begin() + nb, 0);
      for (std::uint32_t i : idx) {
        const std::uint8_t b = data.bin(i, static_cast<std::size_t>(f));
        hg[b] += grad[i];
        hh[b] += hess[i];
        ++hc[b];
      }
      SplitChoice best;
      double gl = 0.0, hl = 0.0;
      std::size_t cl = 0;
      for (int k = 1; k < nb; ++k) {
        gl += hg[k - 1];
        hl += hh[k - 1];
        cl += hc[k - 1];
        // An empty child is no split; its gain would be pure round-off.
        if (cl == 0 || cl == idx.size()) continue;
        const double gr = g_total - gl;
        const double hr = h_total - hl;
        if (hl < cfg.min_child_hessian || hr < cfg.min_child_hessian) continue;
        const double gain = split_gain(gl, hl, gr, hr, cfg.lambda, cfg.gamma);
        if (gain > best.gain) best = {true, static_cast<int>(f), k, gain};
      }
      per_feature[f] = best;
    }
  }
  // Fixed reduction order: the lowest feature wins ties.
  SplitChoice best;
  for (const auto& c : per_feature) {
    if (c.found && c.gain > best.gain) best = c;
  }
  return best;
}

}  // namespace

RegressionTree grow_tree(const BinnedMatrix& data, std::span<const double> grad,
                         std::span<const double> hess, const BoostConfig& cfg,
                         std::vector<int>* leaf_of) {
  const std::size_t n = data.rows();
  if (grad.size() != n || hess.size() != n) throw InvalidArgument("gradient length mismatch");
  if (leaf_of) leaf_of->assign(n, 0);

  RegressionTree tree;
  auto add_node = [&](const std::vector<std::uint32_t>& idx) {
    TreeNode node;
    for (std::uint32_t i : idx) {
      node.sum_grad += grad[i];
      node.sum_hess += hess[i];
    }
    node.weight = cfg.learning_rate * leaf_weight(node.sum_grad, node.sum_hess, cfg.lambda);
    tree.nodes.push_back(node);
    return static_cast<int>(tree.nodes.size() - 1);
  };

  struct Open {
    int node;
    std::vector<std::uint32_t> idx;
  };
  std::vector<std::uint32_t> all(n);
  std::iota(all.begin(), all.end(), 0u);
  std::vector<Open> level;
  level.push_back({add_node(all), std::move(all)});

  for (int depth = 0; !level.empty(); ++depth) {
    std::vector<Open> next;
    for (auto& open : level) {
      SplitChoice split;
      if (depth < cfg.max_depth) {
        const TreeNode& node = tree.nodes[open.node];
        split = best_split(data, grad, hess, open.idx, node.sum_grad, node.sum_hess, cfg);
      }
      if (!split.found) {
        if (leaf_of) {
          for (std::uint32_t i : open.idx) (*leaf_of)[i] = open.node;
        }
        continue;
      }
      std::vector<std::uint32_t> left, right;
      for (std::uint32_t i : open.idx) {
        (data.bin(i, static_cast<std::size_t>(split.feature)) < split.bin ? left : right)
            .push_back(i);
      }
      const int l = add_node(left);
      const int r = add_node(right);
      TreeNode& node = tree.nodes[open.node];
      node.feature = split.feature;
      node.threshold = data.cuts()[split.feature][split.bin - 1];
      node.left = l;
      node.right = r;
      node.gain = split.gain;
      node.weight = 0.0;
      next.push_back({l, std::move(left)});
      next.push_back({r, std::move(right)});
    }
    level = std::move(next);
  }
  return tree;
}

double multiclass_log_loss(std::span<const double> scores, std::span<const ClassCode> labels,
                           int num_classes) {
  const std::size_t n = labels.size();
  if (n == 0) return 0.0;
  double total = 0.0;
  std::vector<double> p(num_classes);
  for (std::size_t i = 0; i < n; ++i) {
    softmax_into(scores.subspan(i * num_classes, num_classes), p);
    total -= std::log(std::max(p[code_of(labels[i])], std::numeric_limits<double>::min()));
  }
  return total / static_cast<double>(n);
}

BoostModel train(const SampleSet& samples, const BoostConfig& config,
                 std::vector<double>* loss_history) {
  config.validate();
  const std::size_t n = samples.size();
  const std::size_t f_count = samples.feature_count();
  const int k_count = config.num_classes;
  if (n == 0) throw InvalidArgument("train: empty sample set");
  if (f_count == 0) throw InvalidArgument("train: samples have no features");
  std::vector<std::size_t> class_counts(k_count, 0);
  for (ClassCode c : samples.labels) {
    if (code_of(c) >= k_count) throw InvalidArgument("train: label outside num_classes");
    ++class_counts[code_of(c)];
  }
  if (std::count_if(class_counts.begin(), class_counts.end(), [](auto c) { return c > 0; }) < 2) {
    throw InvalidArgument(
        "train: samples contain a single class; a constant classifier fits them exactly");
  }

  const BinnedMatrix data(samples.features, n, f_count, config.bins);
  BoostModel model;
  model.config = config;
  model.feature_names = samples.feature_names;
  model.bin_boundaries = data.cuts();
  model.base_score.assign(k_count, 0.0);

  std::vector<double> scores(n * k_count, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(model.base_score.begin(), model.base_score.end(), scores.begin() + i * k_count);
  }
  if (loss_history) {
    loss_history->clear();
    loss_history->push_back(multiclass_log_loss(scores, samples.labels, k_count));
  }

  std::vector<std::vector<double>> grad(k_count, std::vector<double>(n));
  std::vector<std::vector<double>> hess(k_count, std::vector<double>(n));
  std::vector<int> leaf;
  model.trees.reserve(static_cast<std::size_t>(config.rounds) * k_count);
  const long n_long = static_cast<long>(n);
  for (int round = 0; round < config.rounds; ++round) {
#pragma omp parallel
    {
      std::vector<double> p(k_count);
#pragma omp for schedule(static)
      for (long i = 0; i < n_long; ++i) {
        softmax_into(std::span<const double>(scores).subspan(i * k_count, k_count), p);
        const int label = code_of(samples.labels[i]);
        for (int k = 0; k < k_count; ++k) {
          grad[k][i] = p[k] - (k == label ? 1.0 : 0.0);
          hess[k][i] = p[k] * (1.0 - p[k]);
        }
      }
    }
    for (int k = 0; k < k_count; ++k) {
      RegressionTree tree = grow_tree(data, grad[k], hess[k], config, &leaf);
      for (std::size_t i = 0; i < n; ++i) scores[i * k_count + k] += tree.nodes[leaf[i]].weight;
      model.trees.push_back(std::move(tree));
    }
    if (loss_history) loss_history->push_back(multiclass_log_loss(scores, samples.labels, k_count));
  }
  return model;
}

Prediction predict(const BoostModel& model, std::span<const double> features) {
  if (features.size() != model.feature_names.size()) {
    throw InvalidArgument("predict: feature vector has " + std::to_string(features.size()) +
                          " values, model expects " + std::to_string(model.feature_names.size()));
  }
  Prediction out;
  out.probabilities = softmax(model.raw_scores(features));
  std::size_t best = 0;
  for (std::size_t k = 1; k < out.probabilities.size(); ++k) {
    if (out.probabilities[k] > out.probabilities[best]) best = k;
  }
  out.label = class_from_code(static_cast<int>(best));
  return out;
}

CubePrediction predict(const BoostModel& model, const FeatureCube& cube) {
  if (cube.feature_names() != model.feature_names) {
    throw InvalidArgument("predict: cube features (" + std::to_string(cube.feature_count()) +
                          ") do not match the model's feature names (" +
                          std::to_string(model.feature_names.size()) + ")");
  }
  CubePrediction out{LabelRaster(cube.geometry(), ClassCode::kRemainder),
                     std::vector<std::uint8_t>(cube.pixel_count(), 0),
                     RasterGrid(cube.geometry(), kDefaultNodata, 0.0)};
  std::vector<std::uint8_t> codes(cube.pixel_count(), 0);
  auto conf = out.confidence.values();
  const long n = static_cast<long>(cube.pixel_count());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    if (!cube.valid(i)) {
      out.flagged[i] = 1;
      continue;
    }
    const Prediction p = predict(model, cube.pixel(i));
    codes[i] = static_cast<std::uint8_t>(p.label);
    conf[i] = p.probabilities[code_of(p.label)];
  }
  for (std::size_t i = 0; i < codes.size(); ++i) out.labels.set(i, static_cast<ClassCode>(codes[i]));
  return out;
}

// Serialization -------------------------------------------------------------

namespace {

json config_json(const BoostConfig& c) {
  return {{"rounds", c.rounds},
          {"learning_rate", c.learning_rate},
          {"max_depth", c.max_depth},
          {"lambda", c.lambda},
          {"gamma", c.gamma},
          {"min_child_hessian", c.min_child_hessian},
          {"bins", c.bins},
          {"seed", c.seed},
          {"num_classes", c.num_classes}};
}

BoostConfig config_from(const json& j) {
  BoostConfig c;
  c.rounds = j.at("rounds").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.max_depth = j.at("max_depth").get<int>();
  c.lambda = j.at("lambda").get<double>();
  c.gamma = j.at("gamma").get<double>();
  c.min_child_hessian = j.at("min_child_hessian").get<double>();
  c.bins = j.at("bins").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.num_classes = j.at("num_classes").get<int>();
  return c;
}

}  // namespace

std::string BoostModel::to_json() const {
  json trees_json = json::array();
  for (const auto& t : trees) {
    json feature = json::array(), threshold = json::array(), left = json::array(),
         right = json::array(), weight = json::array(), gain = json::array(),
         sum_grad = json::array(), sum_hess = json::array();
    for (const auto& n : t.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      weight.push_back(n.weight);
      gain.push_back(n.gain);
      sum_grad.push_back(n.sum_grad);
      sum_hess.push_back(n.sum_hess);
    }
    trees_json.push_back({{"feature", feature},
                          {"threshold", threshold},
                          {"left", left},
                          {"right", right},
                          {"weight", weight},
                          {"gain", gain},
                          {"sum_grad", sum_grad},
                          {"sum_hess", sum_hess}});
  }
  const json doc = {{"format", "terraperm-boost"},
                    {"version", 1},
                    {"config", config_json(config)},
                    {"feature_names", feature_names},
                    {"base_score", base_score},
                    {"bin_boundaries", bin_boundaries},
                    {"trees", trees_json}};
  return doc.dump() + "\n";
}

BoostModel BoostModel::from_json(const std::string& text) {
  BoostModel m;
  try {
    const json doc = json::parse(text);
    if (doc.value("format", "") != "terraperm-boost") throw ParseError("not a terraperm model");
    m.config = config_from(doc.at("config"));
    m.config.validate();
    m.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    m.base_score = doc.at("base_score").get<std::vector<double>>();
    m.bin_boundaries = doc.at("bin_boundaries").get<std::vector<std::vector<double>>>();
    for (const auto& t : doc.at("trees")) {
      const auto feature = t.at("feature").get<std::vector<int>>();
      const auto threshold = t.at("threshold").get<std::vector<double>>();
      const auto left = t.at("left").get<std::vector<int>>();
      const auto right = t.at("right").get<std::vector<int>>();
      const auto weight = t.at("weight").get<std::vector<double>>();
      const auto gain = t.at("gain").get<std::vector<double>>();
      const auto sum_grad = t.at("sum_grad").get<std::vector<double>>();
      const auto sum_hess = t.at("sum_hess").get<std::vector<double>>();
      const std::size_t count = feature.size();
      if (count == 0 || threshold.size() != count || left.size() != count ||
          right.size() != count || weight.size() != count || gain.size() != count ||
          sum_grad.size() != count || sum_hess.size() != count) {
        throw ParseError("tree node arrays have inconsistent lengths");
      }
      RegressionTree tree;
      for (std::size_t i = 0; i < count; ++i) {
        const bool leaf = left[i] < 0;
        if (leaf != (right[i] < 0)) throw ParseError("tree node with a single child");
        if (!leaf && (left[i] >= static_cast<int>(count) || right[i] >= static_cast<int>(count) ||
                      left[i] <= static_cast<int>(i) || right[i] <= static_cast<int>(i))) {
          throw ParseError("tree child index out of range");
        }
        if (!leaf && (feature[i] < 0 || feature[i] >= static_cast<int>(m.feature_names.size()))) {
          throw ParseError("tree feature index out of range");
        }
        if (!std::isfinite(weight[i])) throw ParseError("non-finite leaf weight");
        tree.nodes.push_back({feature[i], threshold[i], left[i], right[i], weight[i], gain[i],
                              sum_grad[i], sum_hess[i]});
      }
      m.trees.push_back(std::move(tree));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("model JSON: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("model JSON: ") + e.what());
  }
  if (m.trees.size() != static_cast<std::size_t>(m.config.rounds) * m.config.num_classes) {
    throw ParseError("model JSON: tree count does not equal rounds x num_classes");
  }
  if (m.base_score.size() != static_cast<std::size_t>(m.config.num_classes)) {
    throw ParseError("model JSON: base_score length does not equal num_classes");
  }
  return m;
}

void BoostModel::save(const std::filesystem::path& path) const {
  write_file_atomic(path, to_json());
}

BoostModel BoostModel::load(const std::filesystem::path& path) {
  return from_json(read_file(path));
}

}  // namespace terraperm
