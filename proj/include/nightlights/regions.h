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

// Cell-to-region assignment in three stages:
//
//   1. containment: a cell overlapping countries of a single region takes
//      that region;
//   2. hull: an unassigned cell inside exactly one region's convex hull
//      (built over the centroids of cells assigned so far) takes that region;
//   3. knn: every remaining cell takes the majority region of its k nearest
//      assigned cells.

#ifndef NIGHTLIGHTS_REGIONS_H_
#define NIGHTLIGHTS_REGIONS_H_

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nightlights/raster.h"
#include "nightlights/sphere_grid.h"

namespace nightlights {

struct Region {
  std::string id;
  std::string name;
};

// The fourteen World Bank sub-regions used for regional models, with
// South-eastern Asia absorbing Polynesia, Melanesia and Micronesia.
std::span<const Region> WorldBankRegions();

class RegionTable {
 public:
  // Throws InvalidArgumentError when a country maps to a region not in
  // `regions` or when region ids repeat.
  RegionTable(std::vector<Region> regions,
              std::map<std::string, std::string> country_to_region);

  const std::vector<Region>& regions() const { return regions_; }
  const std::map<std::string, std::string>& countries() const {
    return country_to_region_;
  }
  // nullptr when the country is unknown.
  const std::string* RegionOf(std::string_view country_id) const;

 private:
  std::vector<Region> regions_;
  std::map<std::string, std::string> country_to_region_;
};

// Reads "country_id,region_id". Regions named in WorldBankRegions() keep
// their names; any other region id is registered with its id as name.
RegionTable ReadRegionTable(const std::string& path);
void WriteRegionTable(const RegionTable& table, const std::string& path);

enum class AssignMethod { kContainment, kHull, kKnn };
std::string_view AssignMethodName(AssignMethod m);

struct CellRegionAssignment {
  CellId cell;
  std::string region;
  AssignMethod method;

  friend bool operator==(const CellRegionAssignment&,
                         const CellRegionAssignment&) = default;
};

// Both lists sorted by cell.
struct PartialAssignment {
  std::vector<CellRegionAssignment> assigned;
  std::vector<CellId> unassigned;
};

// A cell overlaps a country when any of its four vertices or its centroid is
// inside the polygon, or any polygon vertex is inside the cell. Throws
// InvalidArgumentError naming a country missing from the table.
PartialAssignment AssignByContainment(std::span<const CellId> cells,
                                      std::span<const AdminPolygon> countries,
                                      const RegionTable& table);

// Planar convex hull of points given in a local tangent plane, returned
// counter-clockwise without repeated or collinear vertices.
std::vector<std::array<double, 2>> ConvexHull(
    std::vector<std::array<double, 2>> points);

// Closed point-in-convex-polygon test (boundary counts as inside) by binary
// search over the hull's fan; hulls with fewer than 3 vertices contain
// nothing.
bool ConvexHullContains(std::span<const std::array<double, 2>> hull,
                        const std::array<double, 2>& q);

// Gnomonic projection about a tangent point. Points on or beyond the
// tangent point's horizon have no projection.
class GnomonicProjection {
 public:
  explicit GnomonicProjection(const Vec3& center);
  std::optional<std::array<double, 2>> Project(const Vec3& p) const;

 private:
  Vec3 center_, e1_, e2_;
};

// Hulls are built per region in a gnomonic projection about the normalized
// sum of that region's assigned centroids. Returns the newly assigned cells
// (method kHull) and the cells still unassigned.
PartialAssignment AssignByHull(
    std::span<const CellId> unassigned,
    std::span<const CellRegionAssignment> assigned);

// Majority region of the k nearest assigned centroids (great-circle), ties
// broken by smaller summed distance, then by region id. With fewer than k
// assigned cells, all are used. Throws InvalidArgumentError if `assigned` is
// empty and `remaining` is not.
std::vector<CellRegionAssignment> AssignByKnn(
    std::span<const CellId> remaining,
    std::span<const CellRegionAssignment> assigned, std::size_t k = 5);

struct AssignmentStats {
  std::size_t by_containment = 0;
  std::size_t by_hull = 0;
  std::size_t by_knn = 0;
};

// Runs all three stages; every input cell receives exactly one region.
std::vector<CellRegionAssignment> AssignRegions(
    std::span<const CellId> cells, std::span<const AdminPolygon> countries,
    const RegionTable& table, std::size_t k = 5,
    AssignmentStats* stats = nullptr);

// Assignment CSV: "cell,region,method".
void WriteAssignments(std::span<const CellRegionAssignment> assignments,
                      const std::string& path);
std::vector<CellRegionAssignment> ReadAssignments(const std::string& path);

}  // namespace nightlights

#endif  // NIGHTLIGHTS_REGIONS_H_
