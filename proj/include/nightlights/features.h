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

// Per-cell mobility metrics derived from flow records.

#ifndef NIGHTLIGHTS_FEATURES_H_
#define NIGHTLIGHTS_FEATURES_H_

#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "nightlights/flow_ingest.h"
#include "nightlights/sphere_grid.h"

namespace nightlights {

struct MobilityProfile {
  CellId cell;
  double out_flow = 0;        // trips to other cells
  double self_flow = 0;       // trips starting and ending in the cell
  double median_trip_km = 0;  // count-weighted lower median, self trips excluded
  double total_trip_km = 0;   // sum of count * centroid distance, self excluded
  double in_flow = 0;         // trips arriving from other cells

  friend bool operator==(const MobilityProfile&,
                         const MobilityProfile&) = default;
};

// One profile per distinct source cell, sorted by packed cell id. Only
// records whose interval is in `interval_filter` are used; an empty filter
// keeps everything. Records with a non-positive count carry no trips and are
// ignored. Throws InvalidArgumentError on mixed cell levels.
std::vector<MobilityProfile> BuildProfiles(
    std::span<const FlowRecord> records,
    const std::set<IntervalId>& interval_filter = {});

// Smallest value whose cumulative weight reaches half the total weight.
// Returns 0 for an empty or zero-weight input.
double WeightedLowerMedian(std::vector<std::pair<double, double>> value_weight);

inline constexpr std::string_view kFeatureNames[] = {
    "out_flow", "self_flow", "median_trip_km", "total_trip_km", "in_flow"};

struct ProfileMatrix {
  std::vector<CellId> cells;  // ascending packed id
  Eigen::MatrixXd x;          // columns: out_flow, self_flow, median, total[, in_flow]
  std::vector<std::string> columns;
};

// Throws InvalidArgumentError on empty input or a duplicated cell.
ProfileMatrix MakeProfileMatrix(std::span<const MobilityProfile> profiles,
                                bool include_in_flow = false);

// Profile CSV: "cell,out_flow,self_flow,median_trip_km,total_trip_km", with a
// trailing in_flow column when requested.
void WriteProfiles(std::span<const MobilityProfile> profiles,
                   const std::string& path, bool include_in_flow = false);
std::vector<MobilityProfile> ReadProfiles(const std::string& path);

// Interval subsets of a weekly dataset: "all-weeks", "spring" (weeks whose
// Thursday falls between the March equinox and June solstice), "may" (weeks
// whose Thursday is in May), and "week-N". "annual" yields the single annual
// interval. Throws InvalidArgumentError for unknown names.
std::set<IntervalId> NamedIntervals(std::string_view dataset, int year);

}  // namespace nightlights

#endif  // NIGHTLIGHTS_FEATURES_H_
