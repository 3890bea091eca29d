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

#include "nightlights/geojson.h"

#include <fstream>

#include "json.hpp"
#include "nightlights/errors.h"

namespace nightlights {
namespace {

using nlohmann::json;

std::vector<LatLng> ParseRing(const json& ring) {
  std::vector<LatLng> out;
  for (const json& pt : ring) {
    if (!pt.is_array() || pt.size() < 2) {
      throw InvalidArgumentError("coordinate must be [lng, lat]");
    }
    out.emplace_back(pt[1].get<double>(), pt[0].get<double>());
  }
  return out;
}

std::string PropertyString(const json& props, const char* key) {
  if (!props.is_object() || !props.contains(key)) return {};
  const json& v = props.at(key);
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

std::vector<AdminPolygon> ReadPolygons(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError(path);
  std::vector<AdminPolygon> out;
  try {
    const json doc = json::parse(in);
    if (doc.value("type", "") != "FeatureCollection") {
      throw FormatError(path, 0, "expected a FeatureCollection");
    }
    for (const json& f : doc.at("features")) {
      AdminPolygon poly;
      const json& props = f.contains("properties") ? f.at("properties")
                                                   : json::object();
      poly.id = PropertyString(props, "id");
      if (poly.id.empty() && f.contains("id")) {
        poly.id = f.at("id").is_string() ? f.at("id").get<std::string>()
                                         : f.at("id").dump();
      }
      poly.name = PropertyString(props, "name");
      const json& geom = f.at("geometry");
      const std::string type = geom.at("type").get<std::string>();
      if (type == "Polygon") {
        for (const json& ring : geom.at("coordinates")) {
          poly.rings.push_back(ParseRing(ring));
        }
      } else if (type == "MultiPolygon") {
        for (const json& part : geom.at("coordinates")) {
          for (const json& ring : part) poly.rings.push_back(ParseRing(ring));
        }
      } else {
        throw FormatError(path, 0, "unsupported geometry type '" + type + "'");
      }
      ValidatePolygon(poly);
      out.push_back(std::move(poly));
    }
  } catch (const json::exception& e) {
    throw FormatError(path, 0, e.what());
  } catch (const InvalidArgumentError& e) {
    throw FormatError(path, 0, e.what());
  }
  return out;
}

void WritePolygons(std::span<const AdminPolygon> polygons,
                   const std::string& path) {
  json features = json::array();
  for (const AdminPolygon& p : polygons) {
    json rings = json::array();
    for (const auto& ring : p.rings) {
      json coords = json::array();
      for (const LatLng& v : ring) coords.push_back({v.lng(), v.lat()});
      rings.push_back(std::move(coords));
    }
    features.push_back({{"type", "Feature"},
                        {"properties", {{"id", p.id}, {"name", p.name}}},
                        {"geometry",
                         {{"type", "Polygon"}, {"coordinates", rings}}}});
  }
  const json doc = {{"type", "FeatureCollection"}, {"features", features}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot create " + path);
  out << doc.dump() << "\n";
  if (!out) throw Error("write failed: " + path);
}

}  // namespace nightlights
