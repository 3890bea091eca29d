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

#ifndef NIGHTLIGHTS_GEOJSON_H_
#define NIGHTLIGHTS_GEOJSON_H_

#include <span>
#include <string>
#include <vector>

#include "nightlights/raster.h"

namespace nightlights {

// Reads a GeoJSON FeatureCollection of Polygon / MultiPolygon features whose
// properties carry "id" and "name". MultiPolygon parts are merged into one
// even-odd polygon. Every polygon is validated.
std::vector<AdminPolygon> ReadPolygons(const std::string& path);

void WritePolygons(std::span<const AdminPolygon> polygons,
                   const std::string& path);

}  // namespace nightlights

#endif  // NIGHTLIGHTS_GEOJSON_H_
