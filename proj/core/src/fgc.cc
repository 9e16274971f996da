#include "terraperm/fgc.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "terraperm/error.h"

namespace terraperm {

FgcMask structure_mask(const LabelRaster& labels, const std::set<ClassCode>& include) {
  if (include.empty()) throw InvalidArgument("structure_mask: include set is empty");
  FgcMask out(labels.geometry());
  for (std::size_t i = 0; i < labels.pixel_count(); ++i) out.set(i, include.count(labels.at(i)) > 0);
  return out;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1-D squared distance transform of a sampled function (Felzenszwalb &
// Huttenlocher). f and d have length n; v and z are scratch.
void dt_1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
  v.resize(n);
  z.resize(n + 1);
  // Lower envelope of the parabolas rooted at finite samples.
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    auto intersect = [&](int p) {
      return ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) /
             (2.0 * (q - p));
    };
    double s = intersect(v[k]);
    while (s <= z[k]) {
      --k;
      s = intersect(v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (k < 0) {
    std::fill(d, d + n, kInf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double dq = q - v[j];
    d[q] = dq * dq + f[v[j]];
  }
}

}  // namespace

std::vector<double> squared_distance_transform(const BinaryMask& mask) {
  const GridGeometry& g = mask.geometry();
  const int w = g.width;
  const int h = g.height;
  std::vector<double> grid(g.pixel_count());
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = mask.at(i) ? 0.0 : kInf;

  // Columns, then rows; each line is independent.
#pragma omp parallel
  {
    std::vector<double> f(h), d(h);
    std::vector<int> v;
    std::vector<double> z;
#pragma omp for schedule(static)
    for (long col = 0; col < w; ++col) {
      for (int row = 0; row < h; ++row) f[row] = grid[g.index(static_cast<int>(col), row)];
      dt_1d(f.data(), d.data(), h, v, z);
      for (int row = 0; row < h; ++row) grid[g.index(static_cast<int>(col), row)] = d[row];
    }
  }
#pragma omp parallel
  {
    std::vector<double> d(w);
    std::vector<int> v;
    std::vector<double> z;
#pragma omp for schedule(static)
    for (long row = 0; row < h; ++row) {
      double* line = grid.data() + g.index(0, static_cast<int>(row));
      dt_1d(line, d.data(), w, v, z);
      std::copy(d.begin(), d.end(), line);
    }
  }
  return grid;
}

FgcMask dilate(const FgcMask& mask, double radius) {
  if (!(radius >= 0.0)) throw InvalidArgument("dilate: radius must be >= 0");
  const double ps = mask.geometry().pixel_size;
  const std::vector<double> d2 = squared_distance_transform(mask);
  const double r2 = radius * radius;
  FgcMask out(mask.geometry());
  for (std::size_t i = 0; i < d2.size(); ++i) out.set(i, d2[i] * ps * ps <= r2);
  return out;
}

MaskComparison compare_masks(const FgcMask& a, const FgcMask& b) {
  require_same_geometry(a.geometry(), b.geometry(), "compare_masks");
  MaskComparison c;
  for (std::size_t i = 0; i < a.pixel_count(); ++i) {
    const bool x = a.at(i);
    const bool y = b.at(i);
    c.intersection += x && y;
    c.union_count += x || y;
    c.omission += y && !x;
    c.commission += x && !y;
  }
  c.iou = c.union_count == 0 ? 1.0
                             : static_cast<double>(c.intersection) /
                                   static_cast<double>(c.union_count);
  return c;
}

std::string comparison_json(const MaskComparison& c) {
  const nlohmann::json doc = {{"iou", c.iou},
                              {"omission", c.omission},
                              {"commission", c.commission},
                              {"intersection", c.intersection},
                              {"union", c.union_count}};
  return doc.dump(2) + "\n";
}

}  // namespace terraperm
