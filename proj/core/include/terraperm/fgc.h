#ifndef TERRAPERM_FGC_H_
#define TERRAPERM_FGC_H_

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "terraperm/labels.h"

namespace terraperm {

// Fuel-management strip masks share the classification grid.
using FgcMask = BinaryMask;

inline constexpr double kDefaultFgcRadius = 100.0;

// True where the label is in `include`. Throws InvalidArgument when empty.
FgcMask structure_mask(const LabelRaster& labels,
                       const std::set<ClassCode>& include = {ClassCode::kStructure,
                                                             ClassCode::kRoad});

// Exact squared Euclidean distance, in pixels^2, from every pixel center to
// the nearest true pixel center (separable lower-envelope transform).
// Infinity everywhere for an empty mask.
std::vector<double> squared_distance_transform(const BinaryMask& mask);

// True at q iff some true p has center distance |p - q| <= radius (meters).
FgcMask dilate(const FgcMask& mask, double radius);

struct MaskComparison {
  double iou = 1.0;             // |a & b| / |a | b|, 1 when both are empty
  std::size_t omission = 0;     // |b & ~a|
  std::size_t commission = 0;   // |a & ~b|
  std::size_t intersection = 0;
  std::size_t union_count = 0;
};

MaskComparison compare_masks(const FgcMask& a, const FgcMask& b);

std::string comparison_json(const MaskComparison& c);

}  // namespace terraperm

#endif  // TERRAPERM_FGC_H_
