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

#include "nightlights/flow_ingest.h"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "nightlights/csv.h"
#include "nightlights/errors.h"
#include "nightlights/random.h"

namespace nightlights {
namespace {

using std::chrono::days;
using std::chrono::sys_days;
using std::chrono::year_month_day;

constexpr int64_t kSecondsPerDay = 86400;
constexpr char kFlowHeader[] = "src,dst,interval,count";
constexpr char kTripHeader[] = "origin_lat,origin_lng,dest_lat,dest_lng,timestamp";

sys_days DayOf(int64_t epoch_seconds) {
  int64_t d = epoch_seconds / kSecondsPerDay;
  if (epoch_seconds % kSecondsPerDay < 0) --d;
  return sys_days(days(d));
}

// ISO weekday, Monday = 1 ... Sunday = 7.
unsigned IsoWeekday(sys_days d) {
  return std::chrono::weekday(d).iso_encoding();
}

}  // namespace

std::string IntervalId::ToString() const {
  if (is_annual()) return std::to_string(year);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-W%02d", year, week);
  return buf;
}

IntervalId IntervalId::Parse(std::string_view text) {
  auto bad = [&] {
    return InvalidArgumentError("malformed interval: '" + std::string(text) +
                                "'");
  };
  int y = 0;
  auto r = std::from_chars(text.data(), text.data() + text.size(), y);
  if (r.ec != std::errc() || r.ptr == text.data()) throw bad();
  const std::string_view rest(r.ptr, text.data() + text.size() - r.ptr);
  if (rest.empty()) return Annual(y);
  if (rest.size() < 3 || rest.substr(0, 2) != "-W") throw bad();
  int w = 0;
  auto r2 = std::from_chars(rest.data() + 2, rest.data() + rest.size(), w);
  if (r2.ec != std::errc() || r2.ptr != rest.data() + rest.size()) throw bad();
  if (w < 1 || w > IsoWeeksInYear(y)) throw bad();
  return Week(y, w);
}

IsoWeekDate IsoWeekOf(int64_t epoch_seconds) {
  const sys_days d = DayOf(epoch_seconds);
  const sys_days thursday = d - days(IsoWeekday(d) - 1) + days(3);
  const year_month_day ymd(thursday);
  const sys_days jan1 = sys_days(ymd.year() / std::chrono::January / 1);
  const int doy = static_cast<int>((thursday - jan1).count());
  return {static_cast<int>(ymd.year()), doy / 7 + 1};
}

int CalendarYearOf(int64_t epoch_seconds) {
  return static_cast<int>(year_month_day(DayOf(epoch_seconds)).year());
}

int64_t IsoWeekStart(int year, int week) {
  // January 4th always lies in ISO week 1.
  const sys_days jan4 =
      sys_days(std::chrono::year(year) / std::chrono::January / 4);
  const sys_days week1 = jan4 - days(IsoWeekday(jan4) - 1);
  const sys_days start = week1 + days(7 * (week - 1));
  return static_cast<int64_t>(start.time_since_epoch().count()) *
         kSecondsPerDay;
}

int IsoWeeksInYear(int year) {
  const int64_t dec28 =
      static_cast<int64_t>(
          sys_days(std::chrono::year(year) / std::chrono::December / 28)
              .time_since_epoch()
              .count()) *
      kSecondsPerDay;
  return IsoWeekOf(dec28).week;
}

std::optional<IntervalId> IntervalScheme::Classify(
    int64_t epoch_seconds) const {
  if (epoch_seconds < 0) return std::nullopt;
  if (kind == IntervalKind::kAnnual) {
    if (CalendarYearOf(epoch_seconds) != year) return std::nullopt;
    return IntervalId::Annual(year);
  }
  const IsoWeekDate w = IsoWeekOf(epoch_seconds);
  if (w.year != year) return std::nullopt;
  return IntervalId::Week(w.year, w.week);
}

TripAggregator::TripAggregator(int level, IntervalScheme scheme)
    : level_(level), scheme_(scheme) {
  if (level != 12 && level != 13) {
    throw InvalidArgumentError("flow aggregation level must be 12 or 13, got " +
                               std::to_string(level));
  }
}

void TripAggregator::Add(const RawTrip& trip) {
  const auto t = scheme_.Classify(trip.timestamp);
  if (!t) {
    ++result_.dropped;
    return;
  }
  const FlowKey key{CellId::FromLatLng(trip.origin, level_),
                    CellId::FromLatLng(trip.destination, level_), *t};
  ++result_.counts[key];
}

AggregationResult AggregateTrips(std::span<const RawTrip> trips, int level,
                                 const IntervalScheme& scheme) {
  TripAggregator agg(level, scheme);
  for (const RawTrip& t : trips) agg.Add(t);
  return agg.Take();
}

void PrivacyParams::Validate() const {
  if (!(epsilon > 0)) {
    throw InvalidArgumentError("epsilon must be > 0");
  }
  if (!(sensitivity > 0) || std::isinf(sensitivity)) {
    throw InvalidArgumentError("sensitivity must be finite and > 0");
  }
  if (k_threshold < 0) {
    throw InvalidArgumentError("k_threshold must be >= 0");
  }
}

double PrivacyParams::laplace_scale() const {
  if (std::isinf(epsilon)) return 0.0;
  return sensitivity / epsilon;
}

double FlowNoise(const FlowKey& key, double scale, uint64_t seed) {
  const uint64_t interval_word =
      (static_cast<uint64_t>(static_cast<uint32_t>(key.t.year)) << 8) |
      static_cast<uint64_t>(key.t.week);
  CounterRng rng({seed, key.a.id(), key.b.id(), interval_word});
  return LaplaceFromUniform(rng.Uniform(), scale);
}

std::vector<FlowRecord> Privatize(const FlowCounts& counts,
                                  const PrivacyParams& params, uint64_t seed) {
  params.Validate();
  const double scale = params.laplace_scale();
  const double k = static_cast<double>(params.k_threshold);
  std::vector<FlowRecord> out;
  for (const auto& [key, count] : counts) {
    const double truth = static_cast<double>(count);
    if (params.mode == ThresholdMode::kPreNoise && !(truth > k)) continue;
    const double noisy = truth + FlowNoise(key, scale, seed);
    if (params.mode == ThresholdMode::kPostNoise && !(noisy > k)) continue;
    out.push_back({key.a, key.b, key.t, noisy});
  }
  return out;
}

void WriteFlows(std::span<const FlowRecord> records, const std::string& path) {
  TextWriter out(path);
  out.WriteLine(kFlowHeader);
  std::string line;
  for (const FlowRecord& r : records) {
    line.clear();
    line += r.a.ToString();
    line += ',';
    line += r.b.ToString();
    line += ',';
    line += r.t.ToString();
    line += ',';
    line += FormatDouble(r.n);
    out.WriteLine(line);
  }
  out.Close();
}

std::vector<FlowRecord> ReadFlows(const std::string& path) {
  LineReader in(path);
  std::vector<FlowRecord> out;
  std::string line;
  if (!in.Next(&line)) return out;
  if (Trim(line) != kFlowHeader) {
    throw FormatError(path, in.line_number(),
                      "expected header '" + std::string(kFlowHeader) + "'");
  }
  while (in.Next(&line)) {
    if (Trim(line).empty()) continue;
    const auto f = SplitFields(line);
    if (f.size() != 4) {
      throw FormatError(path, in.line_number(),
                        "expected 4 fields, got " + std::to_string(f.size()));
    }
    try {
      FlowRecord r{CellId::FromString(Trim(f[0])), CellId::FromString(Trim(f[1])),
                   IntervalId::Parse(Trim(f[2])), 0.0};
      r.n = ParseDouble(f[3], path, in.line_number());
      if (r.a.level() != r.b.level()) {
        throw FormatError(path, in.line_number(),
                          "source and destination levels differ");
      }
      out.push_back(r);
    } catch (const InvalidArgumentError& e) {
      throw FormatError(path, in.line_number(), e.what());
    }
  }
  return out;
}

void WriteTripsHeader(TextWriter& out) { out.WriteLine(kTripHeader); }

void WriteTrip(TextWriter& out, const RawTrip& trip) {
  std::string line = FormatDouble(trip.origin.lat());
  line += ',';
  line += FormatDouble(trip.origin.lng());
  line += ',';
  line += FormatDouble(trip.destination.lat());
  line += ',';
  line += FormatDouble(trip.destination.lng());
  line += ',';
  line += std::to_string(trip.timestamp);
  out.WriteLine(line);
}

void ForEachTrip(const std::string& path,
                 const std::function<void(const RawTrip&)>& sink) {
  LineReader in(path);
  std::string line;
  if (!in.Next(&line)) return;
  if (Trim(line) != kTripHeader) {
    throw FormatError(path, in.line_number(),
                      "expected header '" + std::string(kTripHeader) + "'");
  }
  while (in.Next(&line)) {
    if (Trim(line).empty()) continue;
    const auto f = SplitFields(line);
    if (f.size() != 5) {
      throw FormatError(path, in.line_number(),
                        "expected 5 fields, got " + std::to_string(f.size()));
    }
    const std::size_t ln = in.line_number();
    try {
      sink(RawTrip{LatLng(ParseDouble(f[0], path, ln), ParseDouble(f[1], path, ln)),
                   LatLng(ParseDouble(f[2], path, ln), ParseDouble(f[3], path, ln)),
                   ParseInt(f[4], path, ln)});
    } catch (const InvalidArgumentError& e) {
      throw FormatError(path, ln, e.what());
    }
  }
}

}  // namespace nightlights
