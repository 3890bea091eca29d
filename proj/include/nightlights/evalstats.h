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

// Rank correlation of Total Light against GDP per administrative unit.

#ifndef NIGHTLIGHTS_EVALSTATS_H_
#define NIGHTLIGHTS_EVALSTATS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nightlights/raster.h"

namespace nightlights {

// 1-based ranks; tied values share the mean of their ranks.
std::vector<double> AverageRanks(std::span<const double> values);

struct SpearmanResult {
  std::size_t n = 0;
  double rho = 0;  // NaN when undefined
  double p = 1;    // NaN when undefined or unreliable
  bool defined = true;    // false when either input is constant
  bool reliable = true;   // false when n < 3
};

// Pearson correlation of average ranks. The two-sided p-value uses
// t = ρ·sqrt((n−2)/(1−ρ²)) with n−2 degrees of freedom; |ρ| = 1 gives p = 0.
// Throws InvalidArgumentError for unequal lengths or fewer than 2 pairs.
SpearmanResult Spearman(std::span<const double> x, std::span<const double> y);

// Two-sided permutation p-value: the fraction of seeded shuffles of y whose
// |ρ| reaches the observed |ρ|, with the usual +1 correction.
double SpearmanPermutationP(std::span<const double> x,
                            std::span<const double> y, int shuffles,
                            uint64_t seed);

// "***" for p < 0.001, "**" for p < 0.01, "*" for p < 0.05, else "".
std::string Stars(double p);

struct GdpEntry {
  std::string unit_id;
  double gdp = 0;
  std::string group;  // may be empty
};

// GDP CSV: "unit_id,gdp,group". Throws FormatError for negative GDP or a
// repeated unit id.
std::vector<GdpEntry> ReadGdpTable(const std::string& path);
void WriteGdpTable(std::span<const GdpEntry> table, const std::string& path);

struct NamedMap {
  std::string name;
  const LightRaster* raster;
};

struct CorrelationRow {
  std::string map;
  std::string group;  // "All" for every unit
  SpearmanResult stats;
  std::string stars;
};

struct CorrelationReport {
  std::vector<CorrelationRow> rows;  // per map: "All", then groups by name
  std::vector<std::string> excluded_units;  // polygons without GDP
};

enum class PValueMode { kTApproximation, kPermutation };

// Total Light per unit is the sum of raw non-nodata radiance over pixels
// whose center lies in the unit's polygon. Units are ordered by id before
// ranking so that input order does not matter.
CorrelationReport CorrelationTable(std::span<const NamedMap> maps,
                                   std::span<const AdminPolygon> units,
                                   std::span<const GdpEntry> gdp,
                                   PValueMode mode = PValueMode::kTApproximation,
                                   uint64_t seed = 0);

// Report CSV: "map,group,n,rho,p,stars".
void WriteCorrelationCsv(const CorrelationReport& report,
                         const std::string& path);
// Text table with one row per map and one column per group.
std::string FormatCorrelationTable(const CorrelationReport& report);

}  // namespace nightlights

#endif  // NIGHTLIGHTS_EVALSTATS_H_
