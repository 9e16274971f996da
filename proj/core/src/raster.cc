#include "terraperm/raster.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "terraperm/error.h"
#include "terraperm/io_util.h"

namespace terraperm {

void GridGeometry::validate() const {
  if (width <= 0 || height <= 0) {
    throw InvalidArgument("grid dimensions must be positive, got " +
                          std::to_string(width) + "x" + std::to_string(height));
  }
  if (!(pixel_size > 0.0) || !std::isfinite(pixel_size)) {
    throw InvalidArgument("pixel_size must be positive, got " + format_double(pixel_size));
  }
  if (!std::isfinite(origin_x) || !std::isfinite(origin_y)) {
    throw InvalidArgument("grid origin must be finite");
  }
}

void require_same_geometry(const GridGeometry& a, const GridGeometry& b, const char* what) {
  // Origins go through yllcorner arithmetic on the way to and from disk, so
  // they are compared to a small fraction of a pixel.
  const double tol = 1e-6 * a.pixel_size;
  const bool same = a.width == b.width && a.height == b.height &&
                    a.pixel_size == b.pixel_size && std::abs(a.origin_x - b.origin_x) <= tol &&
                    std::abs(a.origin_y - b.origin_y) <= tol;
  if (!same) {
    std::ostringstream msg;
    msg << what << ": geometry mismatch (" << a.width << "x" << a.height << " @"
        << format_double(a.pixel_size) << " origin " << format_double(a.origin_x) << ","
        << format_double(a.origin_y) << " vs " << b.width << "x" << b.height << " @"
        << format_double(b.pixel_size) << " origin " << format_double(b.origin_x) << ","
        << format_double(b.origin_y) << ")";
    throw GeometryError(msg.str());
  }
}

RasterGrid::RasterGrid(GridGeometry geometry, double nodata, double fill)
    : geometry_(geometry), nodata_(nodata) {
  geometry_.validate();
  values_.assign(geometry_.pixel_count(), fill);
}

RasterGrid::RasterGrid(GridGeometry geometry, double nodata, std::vector<double> values)
    : geometry_(geometry), nodata_(nodata), values_(std::move(values)) {
  geometry_.validate();
  if (values_.size() != geometry_.pixel_count()) {
    throw InvalidArgument("raster value count " + std::to_string(values_.size()) +
                          " does not match " + std::to_string(geometry_.width) + "x" +
                          std::to_string(geometry_.height));
  }
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::optional<double> parse_number(std::string_view token) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return value;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

[[noreturn]] void fail(const std::filesystem::path& path, int line, const std::string& msg) {
  throw ParseError(path.string() + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace

RasterGrid read_ascii_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open ascii grid " + path.string());

  std::optional<double> ncols, nrows, xll, yll, cellsize;
  bool x_center = false;
  bool y_center = false;
  double nodata = kDefaultNodata;

  std::string line;
  int line_no = 0;
  std::vector<std::string_view> tokens;
  bool have_pending = false;

  while (std::getline(in, line)) {
    ++line_no;
    tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (parse_number(tokens[0])) {
      have_pending = true;
      break;
    }
    if (tokens.size() != 2) fail(path, line_no, "header line must be 'key value'");
    const std::string key = lower(tokens[0]);
    const auto value = parse_number(tokens[1]);
    if (!value) fail(path, line_no, "non-numeric header value '" + std::string(tokens[1]) + "'");
    if (key == "ncols") {
      ncols = value;
    } else if (key == "nrows") {
      nrows = value;
    } else if (key == "xllcorner" || key == "xllcenter") {
      xll = value;
      x_center = key == "xllcenter";
    } else if (key == "yllcorner" || key == "yllcenter") {
      yll = value;
      y_center = key == "yllcenter";
    } else if (key == "cellsize") {
      cellsize = value;
    } else if (key == "nodata_value") {
      nodata = *value;
    } else {
      fail(path, line_no, "unknown header key '" + std::string(tokens[0]) + "'");
    }
  }

  if (!ncols || !nrows || !xll || !yll || !cellsize) {
    fail(path, line_no, "incomplete header (need ncols, nrows, xllcorner, yllcorner, cellsize)");
  }
  if (*ncols != std::floor(*ncols) || *nrows != std::floor(*nrows) || *ncols < 1 ||
      *nrows < 1) {
    fail(path, line_no, "ncols/nrows must be positive integers");
  }
  if (!(*cellsize > 0.0)) fail(path, line_no, "cellsize must be positive");

  GridGeometry geom;
  geom.width = static_cast<int>(*ncols);
  geom.height = static_cast<int>(*nrows);
  geom.pixel_size = *cellsize;
  geom.origin_x = *xll - (x_center ? 0.5 * geom.pixel_size : 0.0);
  geom.origin_y = *yll - (y_center ? 0.5 * geom.pixel_size : 0.0) +
                  geom.height * geom.pixel_size;

  std::vector<double> values;
  values.reserve(geom.pixel_count());
  int row = 0;
  auto consume = [&](const std::vector<std::string_view>& toks) {
    if (row >= geom.height) fail(path, line_no, "more than nrows=" + std::to_string(geom.height) + " data rows");
    if (static_cast<int>(toks.size()) != geom.width) {
      fail(path, line_no,
           "row " + std::to_string(row) + " has " + std::to_string(toks.size()) +
               " values, expected ncols=" + std::to_string(geom.width));
    }
    for (const auto tok : toks) {
      const auto v = parse_number(tok);
      if (!v) fail(path, line_no, "non-numeric value '" + std::string(tok) + "'");
      values.push_back(*v);
    }
    ++row;
  };
  if (have_pending) consume(tokens);
  while (std::getline(in, line)) {
    ++line_no;
    tokens = split_ws(line);
    if (tokens.empty()) continue;
    consume(tokens);
  }
  if (row != geom.height) {
    fail(path, line_no,
         "found " + std::to_string(row) + " data rows, expected nrows=" +
             std::to_string(geom.height));
  }
  return RasterGrid(geom, nodata, std::move(values));
}

void write_ascii_grid(const RasterGrid& grid, const std::filesystem::path& path) {
  const GridGeometry& g = grid.geometry();
  std::string out;
  out.reserve(64 + g.pixel_count() * 8);
  out += "ncols ";
  out += std::to_string(g.width);
  out += "\nnrows ";
  out += std::to_string(g.height);
  out += "\nxllcorner ";
  out += format_double(g.origin_x);
  out += "\nyllcorner ";
  out += format_double(g.origin_y - g.height * g.pixel_size);
  out += "\ncellsize ";
  out += format_double(g.pixel_size);
  out += "\nNODATA_value ";
  const std::string nodata_token = format_double(grid.nodata());
  out += nodata_token;
  out += '\n';
  for (int row = 0; row < g.height; ++row) {
    for (int col = 0; col < g.width; ++col) {
      if (col) out += ' ';
      out += grid.is_nodata(col, row) ? nodata_token : format_double(grid.at(col, row));
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

RasterGrid apply_offset(const RasterGrid& grid, int dx, int dy) {
  const int w = grid.width();
  const int h = grid.height();
  if (std::abs(dx) >= w || std::abs(dy) >= h) {
    throw InvalidArgument("offset (" + std::to_string(dx) + "," + std::to_string(dy) +
                          ") must be smaller than grid " + std::to_string(w) + "x" +
                          std::to_string(h));
  }
  if (dx == 0 && dy == 0) return grid;
  RasterGrid out(grid.geometry(), grid.nodata(), grid.nodata());
  for (int row = 0; row < h; ++row) {
    const int src_row = row - dy;
    if (src_row < 0 || src_row >= h) continue;
    for (int col = 0; col < w; ++col) {
      const int src_col = col - dx;
      if (src_col < 0 || src_col >= w) continue;
      out.at(col, row) = grid.at(src_col, src_row);
    }
  }
  return out;
}

}  // namespace terraperm
