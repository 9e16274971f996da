#ifndef TERRAPERM_BOOST_H_
#define TERRAPERM_BOOST_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "terraperm/classes.h"
#include "terraperm/labels.h"
#include "terraperm/sampling.h"
#include "terraperm/temporal.h"

namespace terraperm {

struct BoostConfig {
  int rounds = 200;
  double learning_rate = 0.1;
  int max_depth = 6;
  double lambda = 1.0;             // L2 penalty on leaf weights
  double gamma = 0.0;              // minimum gain charged per split
  double min_child_hessian = 1.0;  // per child
  int bins = 256;
  std::uint64_t seed = 0;
  int num_classes = static_cast<int>(kClassCount);

  // Throws InvalidArgument naming the offending field.
  void validate() const;
  friend bool operator==(const BoostConfig&, const BoostConfig&) = default;
};

struct TreeNode {
  int feature = -1;        // split feature; -1 on leaves
  double threshold = 0.0;  // x[feature] < threshold goes left
  int left = -1;
  int right = -1;
  double weight = 0.0;  // leaf output, already scaled by the learning rate
  double gain = 0.0;    // split gain (internal nodes)
  double sum_grad = 0.0;
  double sum_hess = 0.0;

  bool is_leaf() const { return left < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const;
  int depth() const;
  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

struct BoostModel {
  BoostConfig config;
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> bin_boundaries;  // per feature, ascending cut values
  std::vector<double> base_score;                   // per class
  std::vector<RegressionTree> trees;                // round-major: trees[r * K + k]

  const RegressionTree& tree(int round, int cls) const {
    return trees[static_cast<std::size_t>(round) * config.num_classes + cls];
  }
  std::vector<double> raw_scores(std::span<const double> x) const;

  std::string to_json() const;
  static BoostModel from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static BoostModel load(const std::filesystem::path& path);
};

// Max-shifted softmax.
std::vector<double> softmax(std::span<const double> scores);

struct GradHess {
  std::vector<double> grad;
  std::vector<double> hess;
};

// Softmax cross-entropy derivatives: g_k = p_k - [k == label],
// h_k = p_k (1 - p_k).
GradHess grad_hess(std::span<const double> probs, int label);

// 1/2 [GL^2/(HL+l) + GR^2/(HR+l) - (GL+GR)^2/(HL+HR+l)] - gamma.
double split_gain(double gl, double hl, double gr, double hr, double lambda, double gamma);

// Equal-frequency cut points for one feature column. If the column has at
// most `bins` distinct values every gap between neighbours becomes a cut
// (at its midpoint); otherwise at most bins-1 quantile gaps are used.
std::vector<double> quantile_cuts(std::span<const double> column, int bins);

// Training features quantised once against per-feature cuts. Column-major.
class BinnedMatrix {
 public:
  BinnedMatrix(std::span<const double> features, std::size_t rows, std::size_t cols, int bins);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::uint8_t bin(std::size_t row, std::size_t col) const { return bins_[col * rows_ + row]; }
  // Bin count of a feature: cuts + 1.
  int bin_count(std::size_t col) const { return static_cast<int>(cuts_[col].size()) + 1; }
  const std::vector<std::vector<double>>& cuts() const { return cuts_; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<std::vector<double>> cuts_;
  std::vector<std::uint8_t> bins_;
};

// Grows one depth-wise tree on per-sample gradients/hessians using
// histogram split search. When `leaf_of` is given it receives each sample's
// leaf node index.
RegressionTree grow_tree(const BinnedMatrix& data, std::span<const double> grad,
                         std::span<const double> hess, const BoostConfig& config,
                         std::vector<int>* leaf_of = nullptr);

// Mean multiclass log-loss of `scores` (n x K, row-major) against labels.
double multiclass_log_loss(std::span<const double> scores, std::span<const ClassCode> labels,
                           int num_classes);

// Softmax gradient boosting. `loss_history`, if given, receives the training
// log-loss before the first round and after every round.
BoostModel train(const SampleSet& samples, const BoostConfig& config,
                 std::vector<double>* loss_history = nullptr);

struct Prediction {
  ClassCode label = ClassCode::kRemainder;
  std::vector<double> probabilities;
};

// Argmax of the softmax of raw scores; ties go to the lowest class code.
Prediction predict(const BoostModel& model, std::span<const double> features);

struct CubePrediction {
  LabelRaster labels;
  std::vector<std::uint8_t> flagged;  // 1 where the pixel was invalid
  RasterGrid confidence;              // winning probability, 0 when flagged
};

// Invalid pixels become Remainder with flagged = 1 and zero confidence.
CubePrediction predict(const BoostModel& model, const FeatureCube& cube);

}  // namespace terraperm

#endif  // TERRAPERM_BOOST_H_
