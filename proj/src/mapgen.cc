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

#include "nightlights/mapgen.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <unordered_map>

#include <png.h>

#include "nightlights/csv.h"
#include "nightlights/errors.h"
#include "nightlights/parallel.h"

namespace nightlights {
namespace {

constexpr uint32_t kRowsPerBand = 64;

void RequireSameGeometry(const LightRaster& a, const LightRaster& b) {
  if (!(a.geometry() == b.geometry())) {
    throw InvalidArgumentError("raster geometries differ");
  }
}

uint8_t Channel(double t) {
  return static_cast<uint8_t>(std::lround(255.0 * (1.0 - t)));
}

}  // namespace

PredictedMap BuildMap(std::span<const std::pair<CellId, double>> predictions,
                      const GridGeometry& geometry, MapProvenance provenance) {
  PredictedMap out{LightRaster(geometry, 0.0), std::move(provenance)};
  out.provenance.clamped_cells = 0;
  if (predictions.empty()) return out;
  const int level = predictions.front().first.level();
  std::unordered_map<CellId, double> value;
  value.reserve(predictions.size());
  for (const auto& [cell, v] : predictions) {
    if (!cell.is_valid() || cell.level() != level) {
      throw InvalidArgumentError("predictions must share one cell level");
    }
    if (!std::isfinite(v)) {
      throw InvalidArgumentError("non-finite prediction for " + cell.ToString());
    }
    if (v < 0) ++out.provenance.clamped_cells;
    if (!value.emplace(cell, std::max(0.0, v)).second) {
      throw InvalidArgumentError("overlapping predictions for cell " +
                                 cell.ToString());
    }
  }
  LightRaster& r = out.raster;
  const uint32_t bands = (geometry.nrows + kRowsPerBand - 1) / kRowsPerBand;
  ParallelFor(bands, [&](std::size_t b) {
    const uint32_t r0 = static_cast<uint32_t>(b) * kRowsPerBand;
    const uint32_t r1 = std::min(geometry.nrows, r0 + kRowsPerBand);
    for (uint32_t row = r0; row < r1; ++row) {
      for (uint32_t col = 0; col < geometry.ncols; ++col) {
        const CellId c =
            CellId::FromLatLng(geometry.PixelCenter(row, col), level);
        auto it = value.find(c);
        if (it != value.end()) r.at(row, col) = it->second;
      }
    }
  });
  return out;
}

MapComparison CompareMaps(const LightRaster& observed,
                          const LightRaster& predicted) {
  RequireSameGeometry(observed, predicted);
  MapComparison cmp;
  cmp.difference = LightRaster(observed.geometry(), 0.0, observed.nodata());
  const auto a = observed.values();
  const auto b = predicted.values();
  auto d = cmp.difference.mutable_values();
  double abs_sum = 0, sq_sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (observed.is_nodata(a[i]) || predicted.is_nodata(b[i])) {
      d[i] = cmp.difference.nodata();
      continue;
    }
    const double diff = b[i] - a[i];
    d[i] = diff;
    abs_sum += std::abs(diff);
    sq_sum += diff * diff;
    ++cmp.pixels;
  }
  if (cmp.pixels > 0) {
    cmp.mae = abs_sum / static_cast<double>(cmp.pixels);
    cmp.mse = sq_sum / static_cast<double>(cmp.pixels);
  }
  return cmp;
}

std::vector<uint8_t> DiffColors(const LightRaster& observed,
                                const LightRaster& predicted) {
  RequireSameGeometry(observed, predicted);
  const auto a = observed.values();
  const auto b = predicted.values();
  const std::size_t n = a.size();
  std::vector<double> diff(n, 0.0);
  std::vector<double> magnitudes;
  for (std::size_t i = 0; i < n; ++i) {
    const double va = observed.is_nodata(a[i]) ? 0.0 : a[i];
    const double vb = predicted.is_nodata(b[i]) ? 0.0 : b[i];
    diff[i] = vb - va;
    if (diff[i] != 0) magnitudes.push_back(std::abs(diff[i]));
  }
  double p99 = 0;
  if (!magnitudes.empty()) {
    const std::size_t k = static_cast<std::size_t>(
        std::ceil(0.99 * static_cast<double>(magnitudes.size()))) - 1;
    std::nth_element(magnitudes.begin(),
                     magnitudes.begin() + static_cast<std::ptrdiff_t>(k),
                     magnitudes.end());
    p99 = magnitudes[k];
  }
  const double denom = std::log1p(p99);
  std::vector<uint8_t> rgb(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    uint8_t* px = &rgb[3 * i];
    const bool a_zero = observed.is_nodata(a[i]) || a[i] == 0;
    const bool b_zero = predicted.is_nodata(b[i]) || b[i] == 0;
    if (a_zero && b_zero) {
      px[0] = px[1] = px[2] = 0;
      continue;
    }
    if (diff[i] == 0) {
      px[0] = px[1] = px[2] = 255;
      continue;
    }
    const double t =
        denom > 0 ? std::min(1.0, std::log1p(std::abs(diff[i])) / denom) : 1.0;
    const uint8_t fade = Channel(t);
    if (diff[i] > 0) {
      px[0] = fade;
      px[1] = fade;
      px[2] = 255;
    } else {
      px[0] = 255;
      px[1] = fade;
      px[2] = fade;
    }
  }
  return rgb;
}

void WriteDiffImage(const LightRaster& observed, const LightRaster& predicted,
                    const std::string& path) {
  const std::vector<uint8_t> rgb = DiffColors(observed, predicted);
  const uint32_t w = observed.ncols();
  const uint32_t h = observed.nrows();
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"),
                                           &std::fclose);
  if (!fp) throw Error("cannot create " + path);
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw Error("libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("PNG write failed: " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (uint32_t row = 0; row < h; ++row) {
    png_write_row(png, const_cast<png_bytep>(&rgb[std::size_t{3} * w * row]));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void WriteComparison(const MapComparison& cmp, const std::string& path) {
  TextWriter out(path);
  out.WriteLine("metric,value");
  out.WriteLine("mae," + FormatDouble(cmp.mae));
  out.WriteLine("mse," + FormatDouble(cmp.mse));
  out.WriteLine("pixels," + std::to_string(cmp.pixels));
  out.Close();
}

}  // namespace nightlights
