// Copyright 2026 The Nightlights Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Light rasters on a regular lat/lng grid, zonal statistics over cells and
// polygons, and the LGRID / ESRI ASCII grid formats.
//
// LGRID layout (little-endian):
//   char[4] "LGR1"
//   u32 ncols, u32 nrows
//   f64 nw_lat, f64 nw_lng, f64 cell_size_deg
//   f64 nodata
//   f64 values[nrows * ncols], row-major, north to south

#ifndef NIGHTLIGHTS_RASTER_H_
#define NIGHTLIGHTS_RASTER_H_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "nightlights/sphere_grid.h"

namespace nightlights {

// Pixel grid geometry without values.
struct GridGeometry {
  uint32_t ncols = 0;
  uint32_t nrows = 0;
  double nw_lat = 0;  // north edge
  double nw_lng = 0;  // west edge
  double cell_size_deg = 1.0 / 240.0;

  double PixelCenterLat(uint32_t row) const {
    return nw_lat - (row + 0.5) * cell_size_deg;
  }
  double PixelCenterLng(uint32_t col) const {
    return nw_lng + (col + 0.5) * cell_size_deg;
  }
  // Pixel centers must be valid coordinates; longitudes past 180 wrap.
  LatLng PixelCenter(uint32_t row, uint32_t col) const;
  std::size_t size() const { return std::size_t{ncols} * nrows; }

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

class LightRaster {
 public:
  static constexpr double kDefaultNodata = -9999.0;

  LightRaster() = default;
  // All pixels set to `fill`. Throws InvalidArgumentError on a bad geometry.
  LightRaster(const GridGeometry& geometry, double fill = 0.0,
              double nodata = kDefaultNodata);
  // Throws InvalidArgumentError unless values.size() == ncols * nrows.
  LightRaster(const GridGeometry& geometry, std::vector<double> values,
              double nodata);

  const GridGeometry& geometry() const { return geometry_; }
  uint32_t ncols() const { return geometry_.ncols; }
  uint32_t nrows() const { return geometry_.nrows; }
  double nodata() const { return nodata_; }

  double at(uint32_t row, uint32_t col) const {
    return values_[std::size_t{row} * geometry_.ncols + col];
  }
  double& at(uint32_t row, uint32_t col) {
    return values_[std::size_t{row} * geometry_.ncols + col];
  }
  bool is_nodata(double v) const { return v == nodata_ || std::isnan(v); }

  std::span<const double> values() const { return values_; }
  std::span<double> mutable_values() { return values_; }

  friend bool operator==(const LightRaster&, const LightRaster&) = default;

 private:
  GridGeometry geometry_;
  double nodata_ = kDefaultNodata;
  std::vector<double> values_;
};

// Polygon with an outer ring and optional holes; rings are closed (first
// vertex repeated at the end). Containment uses the even-odd rule over all
// rings in the (lng, lat) plane.
struct AdminPolygon {
  std::string id;
  std::string name;
  std::vector<std::vector<LatLng>> rings;
};

// Throws InvalidArgumentError for open rings, rings with fewer than 4
// vertices, rings spanning more than 180 degrees of longitude, or polygons
// without rings.
void ValidatePolygon(const AdminPolygon& poly);

// Even-odd point-in-polygon test; assumes a validated polygon.
bool PolygonContains(const AdminPolygon& poly, double lat, double lng);

struct LatLngBox {
  double min_lat, max_lat, min_lng, max_lng;
};
LatLngBox PolygonBounds(const AdminPolygon& poly);

// Cell for every pixel center at `level` (row-major).
std::vector<CellId> PixelCells(const GridGeometry& geometry, int level);

// Mean of non-nodata pixels whose center lies in each cell. Cells covering no
// valid pixel center are absent. Throws InvalidArgumentError on mixed levels.
std::unordered_map<CellId, double> MeanLightPerCell(
    const LightRaster& raster, std::span<const CellId> cells);

// Sum of non-nodata pixels whose center is inside the polygon.
// Throws InvalidArgumentError for a degenerate polygon.
double TotalLightInPolygon(const LightRaster& raster,
                           const AdminPolygon& poly);

// LGRID for paths ending in ".lgrid", ESRI ASCII grid otherwise.
void WriteRaster(const LightRaster& raster, const std::string& path);
// Detects LGRID by its magic bytes; anything else is parsed as ESRI ASCII.
// Throws MissingInputError or FormatError.
LightRaster ReadRaster(const std::string& path);

void WriteLgrid(const LightRaster& raster, const std::string& path);
void WriteAsciiGrid(const LightRaster& raster, const std::string& path);

}  // namespace nightlights

#endif  // NIGHTLIGHTS_RASTER_H_
