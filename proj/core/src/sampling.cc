#include "terraperm/sampling.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "terraperm/error.h"
#include "terraperm/io_util.h"

namespace terraperm {

void SampleSet::push_back(int col, int row, ClassCode label, std::span<const double> values) {
  if (values.size() != feature_count()) {
    throw InvalidArgument("sample has " + std::to_string(values.size()) + " features, expected " +
                          std::to_string(feature_count()));
  }
  cols.push_back(col);
  rows.push_back(row);
  labels.push_back(label);
  features.insert(features.end(), values.begin(), values.end());
}

std::uint64_t bounded_random(std::mt19937_64& gen, std::uint64_t bound) {
  using u128 = unsigned __int128;
  std::uint64_t x = gen();
  u128 m = static_cast<u128>(x) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      x = gen();
      m = static_cast<u128>(x) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

SampleSet draw_samples(const FeatureCube& cube, const LabelRaster& labels, std::size_t n,
                       std::uint64_t seed, std::span<const std::size_t> exclude) {
  require_same_geometry(cube.geometry(), labels.geometry(), "draw_samples");
  std::vector<std::uint8_t> excluded(cube.pixel_count(), 0);
  for (std::size_t p : exclude) {
    if (p < excluded.size()) excluded[p] = 1;
  }
  std::vector<std::size_t> pool;
  for (std::size_t p = 0; p < cube.pixel_count(); ++p) {
    if (cube.valid(p) && !excluded[p]) pool.push_back(p);
  }
  if (n > pool.size()) {
    throw InvalidArgument("requested " + std::to_string(n) + " samples but only " +
                          std::to_string(pool.size()) + " eligible valid pixels exist");
  }
  // Partial Fisher-Yates: the first n slots become the sample.
  std::mt19937_64 gen(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(bounded_random(gen, pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(n);
  std::sort(pool.begin(), pool.end());

  SampleSet out;
  out.feature_names = cube.feature_names();
  out.seed = seed;
  out.features.reserve(n * cube.feature_count());
  const int width = cube.width();
  for (std::size_t p : pool) {
    out.push_back(static_cast<int>(p % width), static_cast<int>(p / width), labels.at(p),
                  cube.pixel(p));
  }
  return out;
}

void write_samples_csv(const SampleSet& samples, const std::filesystem::path& path) {
  std::string out = "col,row,label";
  for (std::size_t f = 0; f < samples.feature_count(); ++f) out += ",f" + std::to_string(f);
  out += '\n';
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out += std::to_string(samples.cols[i]);
    out += ',';
    out += std::to_string(samples.rows[i]);
    out += ',';
    out += std::to_string(code_of(samples.labels[i]));
    for (double v : samples.row_features(i)) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

namespace {

template <typename T>
T parse_field(std::string_view tok, const std::filesystem::path& path, int line) {
  T value{};
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError(path.string() + ":" + std::to_string(line) + ": bad field '" +
                     std::string(tok) + "'");
  }
  return value;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

SampleSet read_samples_csv(const std::filesystem::path& path,
                           const std::vector<std::string>& feature_names) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ":1: empty sample file");
  const auto header = split_commas(line);
  if (header.size() < 3 || header[0] != "col" || header[1] != "row" || header[2] != "label") {
    throw ParseError(path.string() + ":1: header must start with col,row,label");
  }
  const std::size_t features = header.size() - 3;
  if (features != feature_names.size()) {
    throw ParseError(path.string() + ":1: " + std::to_string(features) +
                     " feature columns but " + std::to_string(feature_names.size()) +
                     " feature names");
  }
  SampleSet out;
  out.feature_names = feature_names;
  std::vector<double> values(features);
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != header.size()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    const int col = parse_field<int>(fields[0], path, line_no);
    const int row = parse_field<int>(fields[1], path, line_no);
    const ClassCode label = class_from_code(parse_field<int>(fields[2], path, line_no));
    for (std::size_t f = 0; f < features; ++f) values[f] = parse_field<double>(fields[3 + f], path, line_no);
    out.push_back(col, row, label, values);
  }
  return out;
}

}  // namespace terraperm
