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

#include "nightlights/regions.h"

#include <algorithm>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "nightlights/csv.h"
#include "nightlights/errors.h"
#include "nightlights/parallel.h"
#include "nightlights/spatial_index.h"

namespace nightlights {
namespace {

const Region kWorldBankRegions[] = {
    {"northern_america", "Northern America"},
    {"latin_america_caribbean", "Latin America and the Caribbean"},
    {"eastern_europe", "Eastern Europe"},
    {"southern_asia", "Southern Asia"},
    {"south_eastern_asia", "South-eastern Asia and Oceania islands"},
    {"southern_europe", "Southern Europe"},
    {"western_europe", "Western Europe"},
    {"western_asia", "Western Asia"},
    {"northern_europe", "Northern Europe"},
    {"eastern_asia", "Eastern Asia"},
    {"sub_saharan_africa", "Sub-Saharan Africa"},
    {"northern_africa", "Northern Africa"},
    {"australia_new_zealand", "Australia and New Zealand"},
    {"central_asia", "Central Asia"},
};

using Point2 = std::array<double, 2>;

double Cross2(const Point2& o, const Point2& a, const Point2& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

struct Box {
  double min_lat, max_lat, min_lng, max_lng;
  bool Intersects(const Box& o) const {
    return min_lat <= o.max_lat && o.min_lat <= max_lat &&
           min_lng <= o.max_lng && o.min_lng <= max_lng;
  }
};

}  // namespace

std::span<const Region> WorldBankRegions() { return kWorldBankRegions; }

RegionTable::RegionTable(std::vector<Region> regions,
                         std::map<std::string, std::string> country_to_region)
    : regions_(std::move(regions)),
      country_to_region_(std::move(country_to_region)) {
  std::set<std::string> ids;
  for (const Region& r : regions_) {
    if (!ids.insert(r.id).second) {
      throw InvalidArgumentError("duplicate region id '" + r.id + "'");
    }
  }
  for (const auto& [country, region] : country_to_region_) {
    if (!ids.contains(region)) {
      throw InvalidArgumentError("country '" + country +
                                 "' maps to unknown region '" + region + "'");
    }
  }
}

const std::string* RegionTable::RegionOf(std::string_view country_id) const {
  auto it = country_to_region_.find(std::string(country_id));
  return it == country_to_region_.end() ? nullptr : &it->second;
}

RegionTable ReadRegionTable(const std::string& path) {
  LineReader in(path);
  std::string line;
  std::map<std::string, std::string> mapping;
  if (!in.Next(&line) || Trim(line) != "country_id,region_id") {
    throw FormatError(path, 1, "expected header 'country_id,region_id'");
  }
  while (in.Next(&line)) {
    if (Trim(line).empty()) continue;
    const auto f = SplitFields(line);
    if (f.size() != 2) {
      throw FormatError(path, in.line_number(), "expected 2 fields");
    }
    const std::string country(Trim(f[0]));
    const std::string region(Trim(f[1]));
    if (country.empty() || region.empty()) {
      throw FormatError(path, in.line_number(), "empty id");
    }
    auto [it, inserted] = mapping.emplace(country, region);
    if (!inserted && it->second != region) {
      throw FormatError(path, in.line_number(),
                        "country '" + country + "' mapped to two regions");
    }
  }
  std::vector<Region> regions(std::begin(kWorldBankRegions),
                              std::end(kWorldBankRegions));
  std::set<std::string> known;
  for (const Region& r : regions) known.insert(r.id);
  for (const auto& [country, region] : mapping) {
    if (known.insert(region).second) regions.push_back({region, region});
  }
  return RegionTable(std::move(regions), std::move(mapping));
}

void WriteRegionTable(const RegionTable& table, const std::string& path) {
  TextWriter out(path);
  out.WriteLine("country_id,region_id");
  for (const auto& [country, region] : table.countries()) {
    out.WriteLine(country + "," + region);
  }
  out.Close();
}

std::string_view AssignMethodName(AssignMethod m) {
  switch (m) {
    case AssignMethod::kContainment:
      return "containment";
    case AssignMethod::kHull:
      return "hull";
    case AssignMethod::kKnn:
      return "knn";
  }
  return "unknown";
}

PartialAssignment AssignByContainment(std::span<const CellId> cells,
                                      std::span<const AdminPolygon> countries,
                                      const RegionTable& table) {
  std::vector<const std::string*> country_region(countries.size());
  std::vector<Box> country_box(countries.size());
  for (std::size_t c = 0; c < countries.size(); ++c) {
    country_region[c] = table.RegionOf(countries[c].id);
    if (country_region[c] == nullptr) {
      throw InvalidArgumentError("country '" + countries[c].id +
                                 "' is not in the region table");
    }
    const LatLngBox b = PolygonBounds(countries[c]);
    country_box[c] = {b.min_lat, b.max_lat, b.min_lng, b.max_lng};
  }

  // Polygon vertices indexed by the cell containing them, per level in use.
  std::map<int, std::unordered_map<CellId, std::vector<std::size_t>>>
      vertex_cells;
  for (const CellId& cell : cells) {
    auto [it, inserted] = vertex_cells.try_emplace(cell.level());
    if (!inserted) continue;
    for (std::size_t c = 0; c < countries.size(); ++c) {
      for (const auto& ring : countries[c].rings) {
        for (const LatLng& v : ring) {
          auto& list = it->second[CellId::FromLatLng(v, cell.level())];
          if (list.empty() || list.back() != c) list.push_back(c);
        }
      }
    }
  }

  std::vector<std::optional<std::string>> result(cells.size());
  ParallelFor(cells.size(), [&](std::size_t i) {
    const CellId& cell = cells[i];
    const CellGeometry g = GetCellGeometry(cell);
    std::array<LatLng, 5> probes = {g.vertices[0], g.vertices[1],
                                    g.vertices[2], g.vertices[3], g.centroid};
    Box box{90, -90, 180, -180};
    for (const LatLng& p : probes) {
      box.min_lat = std::min(box.min_lat, p.lat());
      box.max_lat = std::max(box.max_lat, p.lat());
      box.min_lng = std::min(box.min_lng, p.lng());
      box.max_lng = std::max(box.max_lng, p.lng());
    }
    if (box.max_lng - box.min_lng > 180) {
      box.min_lng = -180;
      box.max_lng = 180;
    }
    std::set<std::string_view> regions;
    for (std::size_t c = 0; c < countries.size(); ++c) {
      if (!box.Intersects(country_box[c])) continue;
      for (const LatLng& p : probes) {
        if (PolygonContains(countries[c], p.lat(), p.lng())) {
          regions.insert(*country_region[c]);
          break;
        }
      }
    }
    const auto& vc = vertex_cells.at(cell.level());
    if (auto it = vc.find(cell); it != vc.end()) {
      for (std::size_t c : it->second) regions.insert(*country_region[c]);
    }
    if (regions.size() == 1) result[i] = std::string(*regions.begin());
  });

  PartialAssignment out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (result[i]) {
      out.assigned.push_back(
          {cells[i], std::move(*result[i]), AssignMethod::kContainment});
    } else {
      out.unassigned.push_back(cells[i]);
    }
  }
  std::sort(out.assigned.begin(), out.assigned.end(),
            [](const auto& a, const auto& b) { return a.cell < b.cell; });
  std::sort(out.unassigned.begin(), out.unassigned.end());
  return out;
}

std::vector<Point2> ConvexHull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Point2& p : pts) {
    while (k >= 2 && Cross2(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && Cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

bool ConvexHullContains(std::span<const Point2> hull, const Point2& q) {
  const std::size_t n = hull.size();
  if (n < 3) return false;
  const Point2& o = hull[0];
  if (Cross2(o, hull[1], q) < 0 || Cross2(o, hull[n - 1], q) > 0) return false;
  // Largest i in [1, n-2] with q left of (or on) the ray o -> hull[i].
  std::size_t lo = 1, hi = n - 2;
  while (lo < hi) {
    const std::size_t mid = (lo + hi + 1) / 2;
    if (Cross2(o, hull[mid], q) >= 0) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return Cross2(hull[lo], hull[lo + 1], q) >= 0;
}

GnomonicProjection::GnomonicProjection(const Vec3& center)
    : center_(Normalized(center)) {
  // Any axis not parallel to the center yields a valid tangent basis.
  const Vec3 helper = std::abs(center_.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
  e1_ = Normalized(Cross(helper, center_));
  e2_ = Cross(center_, e1_);
}

std::optional<Point2> GnomonicProjection::Project(const Vec3& p) const {
  const double d = Dot(p, center_);
  if (!(d > 1e-12)) return std::nullopt;
  const Vec3 q = (1.0 / d) * p;
  return Point2{Dot(q, e1_), Dot(q, e2_)};
}

PartialAssignment AssignByHull(std::span<const CellId> unassigned,
                               std::span<const CellRegionAssignment> assigned) {
  std::vector<const CellRegionAssignment*> sorted;
  for (const auto& a : assigned) sorted.push_back(&a);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->cell < b->cell; });
  std::map<std::string, std::vector<Vec3>> by_region;
  for (const auto* a : sorted) {
    by_region[a->region].push_back(CellCenterPoint(a->cell));
  }
  struct RegionHull {
    std::string region;
    GnomonicProjection projection;
    std::vector<Point2> hull;
  };
  std::vector<RegionHull> hulls;
  for (const auto& [region, points] : by_region) {
    Vec3 sum;
    for (const Vec3& p : points) sum = sum + p;
    if (Norm(sum) == 0) continue;
    GnomonicProjection proj(sum);
    std::vector<Point2> planar;
    planar.reserve(points.size());
    for (const Vec3& p : points) {
      if (auto q = proj.Project(p)) planar.push_back(*q);
    }
    hulls.push_back({region, proj, ConvexHull(std::move(planar))});
  }

  std::vector<int> owner(unassigned.size(), -1);
  ParallelFor(unassigned.size(), [&](std::size_t i) {
    const Vec3 p = CellCenterPoint(unassigned[i]);
    int found = -1;
    for (std::size_t h = 0; h < hulls.size(); ++h) {
      const auto q = hulls[h].projection.Project(p);
      if (!q || !ConvexHullContains(hulls[h].hull, *q)) continue;
      if (found >= 0) {
        found = -2;
        break;
      }
      found = static_cast<int>(h);
    }
    owner[i] = found;
  });

  PartialAssignment out;
  for (std::size_t i = 0; i < unassigned.size(); ++i) {
    if (owner[i] >= 0) {
      out.assigned.push_back(
          {unassigned[i], hulls[owner[i]].region, AssignMethod::kHull});
    } else {
      out.unassigned.push_back(unassigned[i]);
    }
  }
  std::sort(out.assigned.begin(), out.assigned.end(),
            [](const auto& a, const auto& b) { return a.cell < b.cell; });
  std::sort(out.unassigned.begin(), out.unassigned.end());
  return out;
}

std::vector<CellRegionAssignment> AssignByKnn(
    std::span<const CellId> remaining,
    std::span<const CellRegionAssignment> assigned, std::size_t k) {
  std::vector<CellRegionAssignment> out;
  if (remaining.empty()) return out;
  if (assigned.empty()) {
    throw InvalidArgumentError("k-NN assignment needs assigned cells");
  }
  if (k == 0) throw InvalidArgumentError("k must be positive");
  std::vector<const CellRegionAssignment*> sorted;
  for (const auto& a : assigned) sorted.push_back(&a);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->cell < b->cell; });
  std::vector<Vec3> points;
  std::vector<LatLng> centroids;
  points.reserve(sorted.size());
  for (const auto* a : sorted) {
    points.push_back(CellCenterPoint(a->cell));
    centroids.push_back(LatLng::FromUnitVector(points.back()));
  }
  const PointIndex index(points);
  const std::size_t kk = std::min(k, sorted.size());
  // Extra candidates absorb rounding differences between chord order and
  // haversine order.
  const std::size_t slack = std::min(sorted.size(), kk + 8);

  out.resize(remaining.size());
  ParallelFor(remaining.size(), [&](std::size_t i) {
    const Vec3 q = CellCenterPoint(remaining[i]);
    const LatLng ql = LatLng::FromUnitVector(q);
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t idx : index.Nearest(q, slack)) {
      cand.emplace_back(GreatCircleKm(ql, centroids[idx]), idx);
    }
    std::sort(cand.begin(), cand.end());
    cand.resize(kk);
    std::map<std::string_view, std::pair<int, double>> tally;
    for (const auto& [d, idx] : cand) {
      auto& t = tally[sorted[idx]->region];
      ++t.first;
      t.second += d;
    }
    auto best = tally.begin();
    for (auto it = std::next(tally.begin()); it != tally.end(); ++it) {
      const auto& [cnt, dist] = it->second;
      const auto& [bcnt, bdist] = best->second;
      // Map order already sorts by region id for the final tie-break.
      if (cnt > bcnt || (cnt == bcnt && dist < bdist)) best = it;
    }
    out[i] = {remaining[i], std::string(best->first), AssignMethod::kKnn};
  });
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.cell < b.cell; });
  return out;
}

std::vector<CellRegionAssignment> AssignRegions(
    std::span<const CellId> cells, std::span<const AdminPolygon> countries,
    const RegionTable& table, std::size_t k, AssignmentStats* stats) {
  PartialAssignment stage1 = AssignByContainment(cells, countries, table);
  std::vector<CellRegionAssignment> all = stage1.assigned;
  PartialAssignment stage2 = AssignByHull(stage1.unassigned, all);
  all.insert(all.end(), stage2.assigned.begin(), stage2.assigned.end());
  std::vector<CellRegionAssignment> stage3 =
      AssignByKnn(stage2.unassigned, all, k);
  if (stats != nullptr) {
    stats->by_containment = stage1.assigned.size();
    stats->by_hull = stage2.assigned.size();
    stats->by_knn = stage3.size();
  }
  all.insert(all.end(), stage3.begin(), stage3.end());
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.cell < b.cell; });
  return all;
}

void WriteAssignments(std::span<const CellRegionAssignment> assignments,
                      const std::string& path) {
  TextWriter out(path);
  out.WriteLine("cell,region,method");
  for (const auto& a : assignments) {
    out.WriteLine(a.cell.ToString() + "," + a.region + "," +
                  std::string(AssignMethodName(a.method)));
  }
  out.Close();
}

std::vector<CellRegionAssignment> ReadAssignments(const std::string& path) {
  LineReader in(path);
  std::string line;
  std::vector<CellRegionAssignment> out;
  if (!in.Next(&line)) return out;
  if (Trim(line) != "cell,region,method") {
    throw FormatError(path, 1, "expected header 'cell,region,method'");
  }
  while (in.Next(&line)) {
    if (Trim(line).empty()) continue;
    const auto f = SplitFields(line);
    if (f.size() != 3) {
      throw FormatError(path, in.line_number(), "expected 3 fields");
    }
    CellRegionAssignment a;
    try {
      a.cell = CellId::FromString(Trim(f[0]));
    } catch (const InvalidArgumentError& e) {
      throw FormatError(path, in.line_number(), e.what());
    }
    a.region = std::string(Trim(f[1]));
    const std::string_view m = Trim(f[2]);
    if (m == "containment") {
      a.method = AssignMethod::kContainment;
    } else if (m == "hull") {
      a.method = AssignMethod::kHull;
    } else if (m == "knn") {
      a.method = AssignMethod::kKnn;
    } else {
      throw FormatError(path, in.line_number(),
                        "unknown method '" + std::string(m) + "'");
    }
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace nightlights
