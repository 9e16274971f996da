#include "terraperm/metrics.h"

#include <cstdio>

#include <nlohmann/json.hpp>

#include "terraperm/error.h"

namespace terraperm {

using nlohmann::json;

ConfusionMatrix::ConfusionMatrix(int classes)
    : classes_(classes), counts_(static_cast<std::size_t>(classes) * classes, 0) {
  if (classes < 1) throw InvalidArgument("confusion matrix needs at least one class");
}

ConfusionMatrix ConfusionMatrix::from_rows(const std::vector<std::vector<std::int64_t>>& rows) {
  ConfusionMatrix m(static_cast<int>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    if (rows[t].size() != rows.size()) throw InvalidArgument("confusion matrix must be square");
    for (std::size_t p = 0; p < rows.size(); ++p) {
      m.add(static_cast<int>(t), static_cast<int>(p), rows[t][p]);
    }
  }
  return m;
}

void ConfusionMatrix::add(int truth, int pred, std::int64_t n) {
  if (truth < 0 || truth >= classes_ || pred < 0 || pred >= classes_) {
    throw InvalidArgument("label outside [0, " + std::to_string(classes_) + ")");
  }
  if (n < 0) throw InvalidArgument("confusion counts must be non-negative");
  counts_[truth * classes_ + pred] += n;
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t s = 0;
  for (auto c : counts_) s += c;
  return s;
}

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t s = 0;
  for (int c = 0; c < classes_; ++c) s += at(c, c);
  return s;
}

std::int64_t ConfusionMatrix::row_sum(int c) const {
  std::int64_t s = 0;
  for (int p = 0; p < classes_; ++p) s += at(c, p);
  return s;
}

std::int64_t ConfusionMatrix::col_sum(int c) const {
  std::int64_t s = 0;
  for (int t = 0; t < classes_; ++t) s += at(t, c);
  return s;
}

ConfusionMatrix confusion(std::span<const int> pred, std::span<const int> truth, int classes) {
  if (pred.size() != truth.size()) {
    throw InvalidArgument("confusion: " + std::to_string(pred.size()) + " predictions vs " +
                          std::to_string(truth.size()) + " truth labels");
  }
  ConfusionMatrix m(classes);
  for (std::size_t i = 0; i < pred.size(); ++i) m.add(truth[i], pred[i]);
  return m;
}

ConfusionMatrix confusion(std::span<const ClassCode> pred, std::span<const ClassCode> truth) {
  std::vector<int> p, t;
  for (auto c : pred) p.push_back(code_of(c));
  for (auto c : truth) t.push_back(code_of(c));
  return confusion(p, t);
}

MetricsReport per_class_metrics(const ConfusionMatrix& m) {
  MetricsReport r;
  r.sample_count = m.total();
  for (int c = 0; c < m.classes(); ++c) {
    ClassMetrics cm;
    const std::int64_t tp = m.at(c, c);
    const std::int64_t col = m.col_sum(c);
    const std::int64_t row = m.row_sum(c);
    cm.support = row;
    if (col > 0) cm.precision = static_cast<double>(tp) / static_cast<double>(col);
    if (row > 0) cm.recall = static_cast<double>(tp) / static_cast<double>(row);
    if (cm.precision && cm.recall) {
      const double s = *cm.precision + *cm.recall;
      cm.f1 = s > 0.0 ? 2.0 * *cm.precision * *cm.recall / s : 0.0;
    }
    r.per_class.push_back(cm);
  }
  return r;
}

double cohen_kappa(const ConfusionMatrix& m) {
  const std::int64_t n = m.total();
  if (n <= 0) throw InvalidArgument("cohen_kappa: empty confusion matrix");
  // 128-bit so that N^2 cannot overflow.
  using i128 = __int128;
  i128 chance = 0;
  for (int c = 0; c < m.classes(); ++c) chance += static_cast<i128>(m.row_sum(c)) * m.col_sum(c);
  const i128 nn = static_cast<i128>(n) * n;
  const i128 num = static_cast<i128>(n) * m.trace() - chance;
  const i128 den = nn - chance;
  if (den == 0) return 1.0;
  return static_cast<double>(static_cast<long double>(num) / static_cast<long double>(den));
}

MetricsReport evaluate(const ConfusionMatrix& m) {
  MetricsReport r = per_class_metrics(m);
  if (r.sample_count > 0) {
    r.accuracy = static_cast<double>(m.trace()) / static_cast<double>(r.sample_count);
    r.kappa = cohen_kappa(m);
  }
  return r;
}

namespace {

std::string class_label(int c, int classes) {
  if (classes == static_cast<int>(kClassCount)) return std::string(to_string(class_from_code(c)));
  return std::to_string(c);
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string cell(const std::optional<double>& v) {
  if (!v) return "   n/a";
  char buf[16];
  std::snprintf(buf, sizeof buf, "%6.3f", *v);
  return buf;
}

}  // namespace

std::string metrics_json(const MetricsReport& report, const ConfusionMatrix& m) {
  json classes = json::array();
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const auto& pc = report.per_class[c];
    classes.push_back({{"class", class_label(static_cast<int>(c), m.classes())},
                       {"code", c},
                       {"precision", opt(pc.precision)},
                       {"recall", opt(pc.recall)},
                       {"f1", opt(pc.f1)},
                       {"support", pc.support}});
  }
  json matrix = json::array();
  for (int t = 0; t < m.classes(); ++t) {
    json row = json::array();
    for (int p = 0; p < m.classes(); ++p) row.push_back(m.at(t, p));
    matrix.push_back(row);
  }
  const json doc = {{"classes", classes},
                    {"accuracy", opt(report.accuracy)},
                    {"kappa", opt(report.kappa)},
                    {"sample_count", report.sample_count},
                    {"confusion", matrix}};
  return doc.dump(2) + "\n";
}

std::string metrics_table(const MetricsReport& report) {
  std::string out = "class       precision  recall      F1   samples\n";
  const int k = static_cast<int>(report.per_class.size());
  for (int c = 0; c < k; ++c) {
    const auto& pc = report.per_class[c];
    char line[128];
    std::snprintf(line, sizeof line, "%-10s  %s     %s  %s  %8lld\n",
                  class_label(c, k).c_str(), cell(pc.precision).c_str(), cell(pc.recall).c_str(),
                  cell(pc.f1).c_str(), static_cast<long long>(pc.support));
    out += line;
  }
  out += "kappa       " + cell(report.kappa) + "\n";
  out += "accuracy    " + cell(report.accuracy) + "\n";
  return out;
}

}  // namespace terraperm
