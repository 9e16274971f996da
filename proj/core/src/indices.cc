#include "terraperm/indices.h"

#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include "terraperm/error.h"

namespace terraperm {

std::string_view to_string(IndexName index) {
  switch (index) {
    case IndexName::kNdvi: return "NDVI";
    case IndexName::kNdwi: return "NDWI";
    case IndexName::kNdbi: return "NDBI";
    case IndexName::kEvi: return "EVI";
  }
  return "?";
}

void BandRoleMap::validate(const TimeSeriesStack& stack) const {
  const std::pair<const char*, const std::string*> roles[] = {
      {"blue", &blue}, {"green", &green}, {"red", &red}, {"nir", &nir}, {"swir", &swir}};
  std::set<std::string> seen;
  for (const auto& [role, band] : roles) {
    if (!stack.band_index(*band)) {
      throw InvalidArgument(std::string("band role ") + role + " -> " + *band +
                            " is not a band of the optical stack");
    }
    if (!seen.insert(*band).second) {
      throw InvalidArgument(std::string("band role ") + role + " reuses band " + *band);
    }
  }
}

RasterGrid normalized_difference(const RasterGrid& a, const RasterGrid& b) {
  require_same_geometry(a.geometry(), b.geometry(), "normalized_difference");
  RasterGrid out(a.geometry(), a.nodata(), a.nodata());
  const auto av = a.values();
  const auto bv = b.values();
  auto ov = out.values();
  const long n = static_cast<long>(av.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    if (av[i] == a.nodata() || bv[i] == b.nodata()) continue;
    const double den = av[i] + bv[i];
    if (std::abs(den) < kDenominatorEpsilon) continue;
    ov[i] = (av[i] - bv[i]) / den;
  }
  return out;
}

RasterGrid compute_evi(const RasterGrid& nir, const RasterGrid& red, const RasterGrid& blue) {
  require_same_geometry(nir.geometry(), red.geometry(), "compute_evi (red)");
  require_same_geometry(nir.geometry(), blue.geometry(), "compute_evi (blue)");
  RasterGrid out(nir.geometry(), nir.nodata(), nir.nodata());
  const auto nv = nir.values();
  const auto rv = red.values();
  const auto bv = blue.values();
  auto ov = out.values();
  const long n = static_cast<long>(nv.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    if (nv[i] == nir.nodata() || rv[i] == red.nodata() || bv[i] == blue.nodata()) continue;
    const double den = nv[i] + 6.0 * rv[i] - 7.5 * bv[i] + 1.0;
    if (std::abs(den) < kDenominatorEpsilon) continue;
    ov[i] = 2.5 * (nv[i] - rv[i]) / den;
  }
  return out;
}

TimeSeriesStack derive_index_series(const TimeSeriesStack& stack, const BandRoleMap& roles) {
  if (stack.sensor() != Sensor::kOptical) {
    throw InvalidArgument("radiometric indices need an optical stack");
  }
  roles.validate(stack);
  const std::size_t blue = *stack.band_index(roles.blue);
  const std::size_t green = *stack.band_index(roles.green);
  const std::size_t red = *stack.band_index(roles.red);
  const std::size_t nir = *stack.band_index(roles.nir);
  const std::size_t swir = *stack.band_index(roles.swir);

  std::vector<RasterGrid> ndvi, ndwi, ndbi, evi;
  for (std::size_t d = 0; d < stack.date_count(); ++d) {
    ndvi.push_back(normalized_difference(stack.grid(d, nir), stack.grid(d, red)));
    ndwi.push_back(normalized_difference(stack.grid(d, green), stack.grid(d, nir)));
    ndbi.push_back(normalized_difference(stack.grid(d, swir), stack.grid(d, nir)));
    evi.push_back(compute_evi(stack.grid(d, nir), stack.grid(d, red), stack.grid(d, blue)));
  }
  return stack.with_band(std::string(to_string(IndexName::kNdvi)), std::move(ndvi))
      .with_band(std::string(to_string(IndexName::kNdwi)), std::move(ndwi))
      .with_band(std::string(to_string(IndexName::kNdbi)), std::move(ndbi))
      .with_band(std::string(to_string(IndexName::kEvi)), std::move(evi));
}

}  // namespace terraperm
