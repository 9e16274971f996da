#ifndef TERRAPERM_METRICS_H_
#define TERRAPERM_METRICS_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "terraperm/classes.h"

namespace terraperm {

// Rows are truth, columns are predictions.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int classes = static_cast<int>(kClassCount));
  // `rows` is a square matrix of non-negative counts.
  static ConfusionMatrix from_rows(const std::vector<std::vector<std::int64_t>>& rows);

  int classes() const { return classes_; }
  std::int64_t at(int truth, int pred) const { return counts_[truth * classes_ + pred]; }
  void add(int truth, int pred, std::int64_t n = 1);
  std::int64_t total() const;
  std::int64_t trace() const;
  std::int64_t row_sum(int c) const;
  std::int64_t col_sum(int c) const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  int classes_;
  std::vector<std::int64_t> counts_;
};

// Throws InvalidArgument on length mismatch or labels outside [0, classes).
ConfusionMatrix confusion(std::span<const int> pred, std::span<const int> truth,
                          int classes = static_cast<int>(kClassCount));
ConfusionMatrix confusion(std::span<const ClassCode> pred, std::span<const ClassCode> truth);

struct ClassMetrics {
  std::optional<double> precision;  // empty when undefined
  std::optional<double> recall;
  std::optional<double> f1;
  std::int64_t support = 0;
};

struct MetricsReport {
  std::vector<ClassMetrics> per_class;
  std::optional<double> accuracy;
  std::optional<double> kappa;
  std::int64_t sample_count = 0;
};

// Per-class precision/recall/F1 only; accuracy and kappa are left unset.
MetricsReport per_class_metrics(const ConfusionMatrix& m);

// (N trace - S) / (N^2 - S) with S = sum_c row_c col_c, evaluated on integer
// counts. 1.0 in the degenerate p_e = 1 case. Throws InvalidArgument on an
// empty matrix.
double cohen_kappa(const ConfusionMatrix& m);

// Full report: per-class metrics, accuracy and kappa.
MetricsReport evaluate(const ConfusionMatrix& m);

// JSON with null for undefined metrics. Class names are used for the four
// pipeline classes, indices otherwise.
std::string metrics_json(const MetricsReport& report, const ConfusionMatrix& m);
// Plain-text table: one row per class, kappa footer.
std::string metrics_table(const MetricsReport& report);

}  // namespace terraperm

#endif  // TERRAPERM_METRICS_H_
