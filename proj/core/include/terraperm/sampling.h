#ifndef TERRAPERM_SAMPLING_H_
#define TERRAPERM_SAMPLING_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "terraperm/classes.h"
#include "terraperm/labels.h"
#include "terraperm/temporal.h"

namespace terraperm {

// Labelled feature vectors drawn from a cube, struct-of-arrays. Rows are in
// ascending pixel order.
struct SampleSet {
  std::vector<std::string> feature_names;
  std::vector<int> cols;
  std::vector<int> rows;
  std::vector<ClassCode> labels;
  std::vector<double> features;  // size() x feature_count(), row-major
  std::uint64_t seed = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t feature_count() const { return feature_names.size(); }
  std::span<const double> row_features(std::size_t i) const {
    return std::span<const double>(features).subspan(i * feature_count(), feature_count());
  }
  std::size_t pixel_index(std::size_t i, int width) const {
    return static_cast<std::size_t>(rows[i]) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(cols[i]);
  }
  void push_back(int col, int row, ClassCode label, std::span<const double> values);
};

// Uniform draw without replacement over the cube's valid pixels, minus
// `exclude` (pixel indices). Deterministic for a given seed: the generator
// is mt19937_64 with an unbiased bounded-integer reduction, so draws do not
// depend on the standard library's distribution implementations.
SampleSet draw_samples(const FeatureCube& cube, const LabelRaster& labels, std::size_t n,
                       std::uint64_t seed, std::span<const std::size_t> exclude = {});

// Uniform integer in [0, bound), bound > 0 (Lemire's multiply-and-reject).
std::uint64_t bounded_random(std::mt19937_64& gen, std::uint64_t bound);

// CSV with header `col,row,label,f0,...,f{F-1}`.
void write_samples_csv(const SampleSet& samples, const std::filesystem::path& path);
// Feature names are taken from `feature_names`, whose length must match the
// CSV's feature columns.
SampleSet read_samples_csv(const std::filesystem::path& path,
                           const std::vector<std::string>& feature_names);

}  // namespace terraperm

#endif  // TERRAPERM_SAMPLING_H_
