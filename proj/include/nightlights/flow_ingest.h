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

// Trip aggregation into origin-destination flow tuples, the Laplace
// mechanism with a k-anonymity threshold, and the flow CSV format.

#ifndef NIGHTLIGHTS_FLOW_INGEST_H_
#define NIGHTLIGHTS_FLOW_INGEST_H_

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nightlights/csv.h"
#include "nightlights/sphere_grid.h"

namespace nightlights {

// A year, or one ISO-8601 week of a week-numbering year.
struct IntervalId {
  int year = 0;
  int week = 0;  // 0 for a whole year, else 1..53

  static IntervalId Annual(int year) { return {year, 0}; }
  static IntervalId Week(int year, int week) { return {year, week}; }

  bool is_annual() const { return week == 0; }
  // "2016" or "2016-W05".
  std::string ToString() const;
  // Throws InvalidArgumentError.
  static IntervalId Parse(std::string_view text);

  friend auto operator<=>(const IntervalId&, const IntervalId&) = default;
};

struct IsoWeekDate {
  int year;
  int week;
};

IsoWeekDate IsoWeekOf(int64_t epoch_seconds);
// Calendar (UTC) year of a timestamp.
int CalendarYearOf(int64_t epoch_seconds);
// Epoch seconds of Monday 00:00 UTC starting the given ISO week.
int64_t IsoWeekStart(int year, int week);
int IsoWeeksInYear(int year);

enum class IntervalKind { kWeekly, kAnnual };

struct IntervalScheme {
  IntervalKind kind = IntervalKind::kAnnual;
  int year = 2016;

  // Interval containing the timestamp, or nullopt when it falls outside the
  // configured year (ISO week-numbering year for weekly schemes, calendar
  // year for annual ones).
  std::optional<IntervalId> Classify(int64_t epoch_seconds) const;
};

struct RawTrip {
  LatLng origin;
  LatLng destination;
  int64_t timestamp;
};

struct FlowKey {
  CellId a;
  CellId b;
  IntervalId t;

  friend auto operator<=>(const FlowKey&, const FlowKey&) = default;
};

using FlowCounts = std::map<FlowKey, uint64_t>;

struct AggregationResult {
  FlowCounts counts;
  // Trips whose timestamps fell outside the configured year.
  uint64_t dropped = 0;
};

// Incremental form of AggregateTrips for streamed inputs.
class TripAggregator {
 public:
  // Throws InvalidArgumentError unless level is 12 or 13.
  TripAggregator(int level, IntervalScheme scheme);

  void Add(const RawTrip& trip);
  const AggregationResult& result() const { return result_; }
  AggregationResult Take() { return std::move(result_); }

 private:
  int level_;
  IntervalScheme scheme_;
  AggregationResult result_;
};

AggregationResult AggregateTrips(std::span<const RawTrip> trips, int level,
                                 const IntervalScheme& scheme);

struct FlowRecord {
  CellId a;
  CellId b;
  IntervalId t;
  double n;

  friend bool operator==(const FlowRecord&, const FlowRecord&) = default;
};

enum class ThresholdMode {
  kPostNoise,  // keep records whose noisy count exceeds the threshold
  kPreNoise,   // keep records whose true count exceeds the threshold
};

struct PrivacyParams {
  double epsilon = 0.66;
  double sensitivity = 1.0;
  int64_t k_threshold = 100;
  // Carried as metadata; no accounting is derived from it.
  double declared_delta = 2.1e-29;
  ThresholdMode mode = ThresholdMode::kPostNoise;

  // Throws InvalidArgumentError.
  void Validate() const;
  // sensitivity / epsilon; 0 when epsilon is infinite.
  double laplace_scale() const;
};

// Laplace noise assigned to a flow key. Depends only on (seed, key, scale).
double FlowNoise(const FlowKey& key, double scale, uint64_t seed);

// Adds Laplace(0, sensitivity/epsilon) noise to every count and applies the
// k-anonymity threshold. Output is sorted by key.
std::vector<FlowRecord> Privatize(const FlowCounts& counts,
                                  const PrivacyParams& params, uint64_t seed);

// Flow CSV: header "src,dst,interval,count". A ".gz" suffix selects gzip.
void WriteFlows(std::span<const FlowRecord> records, const std::string& path);
// Throws MissingInputError or FormatError (with the offending line).
std::vector<FlowRecord> ReadFlows(const std::string& path);

// Trip CSV: "origin_lat,origin_lng,dest_lat,dest_lng,timestamp".
void WriteTripsHeader(TextWriter& out);
void WriteTrip(TextWriter& out, const RawTrip& trip);
// Streams every trip of a file into `sink`.
void ForEachTrip(const std::string& path,
                 const std::function<void(const RawTrip&)>& sink);

}  // namespace nightlights

#endif  // NIGHTLIGHTS_FLOW_INGEST_H_
