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

// Artificial light maps from per-cell predictions, map comparison and
// difference images.

#ifndef NIGHTLIGHTS_MAPGEN_H_
#define NIGHTLIGHTS_MAPGEN_H_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nightlights/raster.h"
#include "nightlights/sphere_grid.h"

namespace nightlights {

struct MapProvenance {
  std::string dataset;   // e.g. "all-weeks", "annual", "week-20"
  std::string model_id;  // e.g. "forest"
  uint64_t seed = 0;
  std::size_t clamped_cells = 0;  // predictions raised from below 0
};

struct PredictedMap {
  LightRaster raster;
  MapProvenance provenance;
};

// Every pixel whose center lies in a predicted cell takes that cell's value,
// clamped at 0 from below; every other pixel is 0. Throws
// InvalidArgumentError for mixed cell levels, a repeated cell or a
// non-finite value.
PredictedMap BuildMap(std::span<const std::pair<CellId, double>> predictions,
                      const GridGeometry& geometry,
                      MapProvenance provenance = {});

struct MapComparison {
  double mae = 0;
  double mse = 0;
  std::size_t pixels = 0;  // pixels counted (valid in both rasters)
  LightRaster difference;  // predicted − observed; nodata where excluded
};

// Throws InvalidArgumentError on a geometry mismatch.
MapComparison CompareMaps(const LightRaster& observed,
                          const LightRaster& predicted);

// RGB bytes, row-major, for the difference image: black where both rasters
// are 0 or nodata, white where equal and nonzero, a blue ramp where predicted
// exceeds observed and a red ramp where observed exceeds predicted. The ramp
// is log1p(|d|) / log1p(p99), saturating at the 99th percentile of the
// nonzero |d|.
std::vector<uint8_t> DiffColors(const LightRaster& observed,
                                const LightRaster& predicted);

// Writes DiffColors as an 8-bit RGB PNG.
void WriteDiffImage(const LightRaster& observed, const LightRaster& predicted,
                    const std::string& path);

// Comparison report: "metric,value" rows for mae, mse and pixels.
void WriteComparison(const MapComparison& cmp, const std::string& path);

}  // namespace nightlights

#endif  // NIGHTLIGHTS_MAPGEN_H_
