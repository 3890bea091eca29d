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

#include "nightlights/raster.h"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "nightlights/csv.h"
#include "nightlights/errors.h"
#include "nightlights/parallel.h"

namespace nightlights {
namespace {

static_assert(std::endian::native == std::endian::little,
              "LGRID I/O assumes a little-endian host");

constexpr char kLgridMagic[4] = {'L', 'G', 'R', '1'};
constexpr std::size_t kLgridHeaderBytes = 4 + 4 + 4 + 8 + 8 + 8 + 8;
constexpr uint32_t kRowsPerBand = 64;

void CheckGeometry(const GridGeometry& g) {
  if (g.ncols == 0 || g.nrows == 0) {
    throw InvalidArgumentError("raster must have at least one pixel");
  }
  if (!(g.cell_size_deg > 0) || !std::isfinite(g.cell_size_deg)) {
    throw InvalidArgumentError("raster cell size must be finite and > 0");
  }
  if (!(g.nw_lat <= 90.0) || g.nw_lat - g.nrows * g.cell_size_deg < -90.0) {
    throw InvalidArgumentError("raster extends past the poles");
  }
}

template <typename T>
void Put(std::string& buf, T v) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  buf.append(bytes, sizeof(T));
}

template <typename T>
T Get(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

}  // namespace

LatLng GridGeometry::PixelCenter(uint32_t row, uint32_t col) const {
  double lng = PixelCenterLng(col);
  if (lng > 180.0) lng -= 360.0;
  return LatLng(PixelCenterLat(row), lng);
}

LightRaster::LightRaster(const GridGeometry& geometry, double fill,
                         double nodata)
    : geometry_(geometry), nodata_(nodata) {
  CheckGeometry(geometry);
  values_.assign(geometry.size(), fill);
}

LightRaster::LightRaster(const GridGeometry& geometry, std::vector<double> values,
                         double nodata)
    : geometry_(geometry), nodata_(nodata), values_(std::move(values)) {
  CheckGeometry(geometry);
  if (values_.size() != geometry.size()) {
    throw InvalidArgumentError("raster value count " +
                               std::to_string(values_.size()) +
                               " does not match " +
                               std::to_string(geometry.size()) + " pixels");
  }
}

void ValidatePolygon(const AdminPolygon& poly) {
  if (poly.rings.empty()) {
    throw InvalidArgumentError("polygon '" + poly.id + "' has no rings");
  }
  for (const auto& ring : poly.rings) {
    if (ring.size() < 4) {
      throw InvalidArgumentError("polygon '" + poly.id +
                                 "' has a ring with fewer than 4 vertices");
    }
    if (!(ring.front() == ring.back())) {
      throw InvalidArgumentError("polygon '" + poly.id +
                                 "' has an unclosed ring");
    }
    double lo = 180, hi = -180;
    for (const auto& p : ring) {
      lo = std::min(lo, p.lng());
      hi = std::max(hi, p.lng());
    }
    if (hi - lo > 180.0) {
      throw InvalidArgumentError(
          "polygon '" + poly.id +
          "' spans more than 180 degrees of longitude; split it at the "
          "antimeridian");
    }
  }
}

bool PolygonContains(const AdminPolygon& poly, double lat, double lng) {
  bool inside = false;
  for (const auto& ring : poly.rings) {
    for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
      const double yi = ring[i].lat(), xi = ring[i].lng();
      const double yj = ring[j].lat(), xj = ring[j].lng();
      if ((yi > lat) != (yj > lat) &&
          lng < (xj - xi) * (lat - yi) / (yj - yi) + xi) {
        inside = !inside;
      }
    }
  }
  return inside;
}

LatLngBox PolygonBounds(const AdminPolygon& poly) {
  LatLngBox b{90, -90, 180, -180};
  for (const auto& ring : poly.rings) {
    for (const auto& p : ring) {
      b.min_lat = std::min(b.min_lat, p.lat());
      b.max_lat = std::max(b.max_lat, p.lat());
      b.min_lng = std::min(b.min_lng, p.lng());
      b.max_lng = std::max(b.max_lng, p.lng());
    }
  }
  return b;
}

std::vector<CellId> PixelCells(const GridGeometry& g, int level) {
  std::vector<CellId> out(g.size());
  ParallelFor(g.nrows, [&](std::size_t row) {
    for (uint32_t col = 0; col < g.ncols; ++col) {
      out[row * g.ncols + col] = CellId::FromLatLng(
          g.PixelCenter(static_cast<uint32_t>(row), col), level);
    }
  });
  return out;
}

std::unordered_map<CellId, double> MeanLightPerCell(
    const LightRaster& raster, std::span<const CellId> cells) {
  std::unordered_map<CellId, double> out;
  if (cells.empty()) return out;
  const int level = cells.front().level();
  struct Acc {
    double sum = 0;
    uint64_t n = 0;
  };
  std::unordered_map<CellId, Acc> acc;
  acc.reserve(cells.size());
  for (const CellId& c : cells) {
    if (c.level() != level) {
      throw InvalidArgumentError("cells passed to MeanLightPerCell mix levels");
    }
    acc.emplace(c, Acc{});
  }
  const GridGeometry& g = raster.geometry();
  std::vector<CellId> band(std::size_t{kRowsPerBand} * g.ncols);
  // Cells are computed in parallel per band; accumulation is sequential in
  // row-major order so sums do not depend on the thread count.
  for (uint32_t r0 = 0; r0 < g.nrows; r0 += kRowsPerBand) {
    const uint32_t rows = std::min(kRowsPerBand, g.nrows - r0);
    ParallelFor(rows, [&](std::size_t dr) {
      const uint32_t row = r0 + static_cast<uint32_t>(dr);
      for (uint32_t col = 0; col < g.ncols; ++col) {
        band[dr * g.ncols + col] =
            CellId::FromLatLng(g.PixelCenter(row, col), level);
      }
    });
    for (uint32_t dr = 0; dr < rows; ++dr) {
      for (uint32_t col = 0; col < g.ncols; ++col) {
        const double v = raster.at(r0 + dr, col);
        if (raster.is_nodata(v)) continue;
        auto it = acc.find(band[std::size_t{dr} * g.ncols + col]);
        if (it == acc.end()) continue;
        it->second.sum += v;
        ++it->second.n;
      }
    }
  }
  for (const auto& [cell, a] : acc) {
    if (a.n > 0) out.emplace(cell, a.sum / static_cast<double>(a.n));
  }
  return out;
}

double TotalLightInPolygon(const LightRaster& raster,
                           const AdminPolygon& poly) {
  ValidatePolygon(poly);
  const GridGeometry& g = raster.geometry();
  const LatLngBox box = PolygonBounds(poly);
  // Candidate row/column window from the bounding box.
  const double r_lo = (g.nw_lat - box.max_lat) / g.cell_size_deg - 0.5;
  const double r_hi = (g.nw_lat - box.min_lat) / g.cell_size_deg - 0.5;
  const double c_lo = (box.min_lng - g.nw_lng) / g.cell_size_deg - 0.5;
  const double c_hi = (box.max_lng - g.nw_lng) / g.cell_size_deg - 0.5;
  auto clamp_index = [](double v, uint32_t n) -> int64_t {
    return std::clamp<int64_t>(static_cast<int64_t>(std::floor(v)), 0,
                               static_cast<int64_t>(n) - 1);
  };
  const int64_t row0 = clamp_index(r_lo, g.nrows);
  const int64_t row1 = clamp_index(r_hi + 1, g.nrows);
  const int64_t col0 = clamp_index(c_lo, g.ncols);
  const int64_t col1 = clamp_index(c_hi + 1, g.ncols);
  double total = 0;
  for (int64_t r = row0; r <= row1; ++r) {
    const double lat = g.PixelCenterLat(static_cast<uint32_t>(r));
    for (int64_t c = col0; c <= col1; ++c) {
      const double v = raster.at(static_cast<uint32_t>(r),
                                static_cast<uint32_t>(c));
      if (raster.is_nodata(v)) continue;
      if (PolygonContains(poly, lat,
                          g.PixelCenterLng(static_cast<uint32_t>(c)))) {
        total += v;
      }
    }
  }
  return total;
}

void WriteLgrid(const LightRaster& raster, const std::string& path) {
  const GridGeometry& g = raster.geometry();
  std::string buf;
  buf.reserve(kLgridHeaderBytes + g.size() * 8);
  buf.append(kLgridMagic, 4);
  Put<uint32_t>(buf, g.ncols);
  Put<uint32_t>(buf, g.nrows);
  Put<double>(buf, g.nw_lat);
  Put<double>(buf, g.nw_lng);
  Put<double>(buf, g.cell_size_deg);
  Put<double>(buf, raster.nodata());
  const auto values = raster.values();
  buf.append(reinterpret_cast<const char*>(values.data()),
             values.size() * sizeof(double));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot create " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error("write failed: " + path);
}

void WriteAsciiGrid(const LightRaster& raster, const std::string& path) {
  const GridGeometry& g = raster.geometry();
  TextWriter out(path);
  out.WriteLine("ncols " + std::to_string(g.ncols));
  out.WriteLine("nrows " + std::to_string(g.nrows));
  out.WriteLine("xllcorner " + FormatDouble(g.nw_lng));
  out.WriteLine("yllcorner " +
                FormatDouble(g.nw_lat - g.nrows * g.cell_size_deg));
  out.WriteLine("cellsize " + FormatDouble(g.cell_size_deg));
  out.WriteLine("NODATA_value " + FormatDouble(raster.nodata()));
  std::string line;
  for (uint32_t r = 0; r < g.nrows; ++r) {
    line.clear();
    for (uint32_t c = 0; c < g.ncols; ++c) {
      if (c > 0) line += ' ';
      line += FormatDouble(raster.at(r, c));
    }
    out.WriteLine(line);
  }
  out.Close();
}

void WriteRaster(const LightRaster& raster, const std::string& path) {
  if (EndsWith(path, ".lgrid")) {
    WriteLgrid(raster, path);
  } else {
    WriteAsciiGrid(raster, path);
  }
}

namespace {

LightRaster ParseLgrid(const std::string& path, const std::string& data) {
  if (data.size() < kLgridHeaderBytes) {
    throw FormatError(path, 0, "truncated LGRID header");
  }
  const char* p = data.data() + 4;
  GridGeometry g;
  g.ncols = Get<uint32_t>(p);
  g.nrows = Get<uint32_t>(p + 4);
  g.nw_lat = Get<double>(p + 8);
  g.nw_lng = Get<double>(p + 16);
  g.cell_size_deg = Get<double>(p + 24);
  const double nodata = Get<double>(p + 32);
  const std::size_t expected = kLgridHeaderBytes + g.size() * sizeof(double);
  if (data.size() != expected) {
    throw FormatError(path, 0,
                      "payload size mismatch: header describes " +
                          std::to_string(g.size()) + " pixels (" +
                          std::to_string(expected) + " bytes), file has " +
                          std::to_string(data.size()) + " bytes");
  }
  std::vector<double> values(g.size());
  std::memcpy(values.data(), data.data() + kLgridHeaderBytes,
              values.size() * sizeof(double));
  try {
    return LightRaster(g, std::move(values), nodata);
  } catch (const InvalidArgumentError& e) {
    throw FormatError(path, 0, e.what());
  }
}

LightRaster ParseAsciiGrid(const std::string& path, const std::string& data) {
  std::istringstream in(data);
  std::string line;
  std::size_t line_no = 0;
  double xll = NAN, yll = NAN, cellsize = NAN;
  bool center = false;
  long long ncols = -1, nrows = -1;
  double nodata = LightRaster::kDefaultNodata;
  std::vector<double> values;
  // Header keys are case-insensitive; NODATA_value is optional.
  while (true) {
    const auto pos = in.tellg();
    if (!std::getline(in, line)) break;
    ++line_no;
    std::string_view t = Trim(line);
    if (t.empty()) continue;
    const char c0 = t.front();
    if ((c0 >= '0' && c0 <= '9') || c0 == '-' || c0 == '+' || c0 == '.') {
      in.clear();
      in.seekg(pos);
      --line_no;
      break;
    }
    const auto sp = t.find_first_of(" \t");
    if (sp == std::string_view::npos) {
      throw FormatError(path, line_no, "malformed header line");
    }
    std::string key(t.substr(0, sp));
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char ch) { return std::tolower(ch); });
    const std::string_view value = Trim(t.substr(sp));
    if (key == "ncols") {
      ncols = ParseInt(value, path, line_no);
    } else if (key == "nrows") {
      nrows = ParseInt(value, path, line_no);
    } else if (key == "xllcorner") {
      xll = ParseDouble(value, path, line_no);
    } else if (key == "yllcorner") {
      yll = ParseDouble(value, path, line_no);
    } else if (key == "xllcenter") {
      xll = ParseDouble(value, path, line_no);
      center = true;
    } else if (key == "yllcenter") {
      yll = ParseDouble(value, path, line_no);
      center = true;
    } else if (key == "cellsize") {
      cellsize = ParseDouble(value, path, line_no);
    } else if (key == "nodata_value") {
      nodata = ParseDouble(value, path, line_no);
    } else {
      throw FormatError(path, line_no, "unknown header key '" + key + "'");
    }
  }
  if (ncols <= 0 || nrows <= 0 || std::isnan(xll) || std::isnan(yll) ||
      std::isnan(cellsize)) {
    throw FormatError(path, line_no, "incomplete ESRI ASCII grid header");
  }
  if (center) {
    xll -= 0.5 * cellsize;
    yll -= 0.5 * cellsize;
  }
  values.reserve(static_cast<std::size_t>(ncols * nrows));
  while (std::getline(in, line)) {
    ++line_no;
    for (std::string_view tok : SplitFields(Trim(line), ' ')) {
      tok = Trim(tok);
      if (tok.empty()) continue;
      double v;
      auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (r.ec != std::errc() || r.ptr != tok.data() + tok.size()) {
        throw FormatError(path, line_no,
                          "bad grid value '" + std::string(tok) + "'");
      }
      values.push_back(v);
    }
  }
  GridGeometry g;
  g.ncols = static_cast<uint32_t>(ncols);
  g.nrows = static_cast<uint32_t>(nrows);
  g.nw_lng = xll;
  g.nw_lat = yll + static_cast<double>(nrows) * cellsize;
  g.cell_size_deg = cellsize;
  if (values.size() != g.size()) {
    throw FormatError(path, 0,
                      "payload size mismatch: header describes " +
                          std::to_string(g.size()) + " values, found " +
                          std::to_string(values.size()));
  }
  try {
    return LightRaster(g, std::move(values), nodata);
  } catch (const InvalidArgumentError& e) {
    throw FormatError(path, 0, e.what());
  }
}

}  // namespace

LightRaster ReadRaster(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError(path);
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (data.size() >= 4 && std::memcmp(data.data(), kLgridMagic, 4) == 0) {
    return ParseLgrid(path, data);
  }
  if (EndsWith(path, ".lgrid")) {
    throw FormatError(path, 0, "unknown magic (expected LGR1)");
  }
  return ParseAsciiGrid(path, data);
}

}  // namespace nightlights
