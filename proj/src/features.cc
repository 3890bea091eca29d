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

#include "nightlights/features.h"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <tuple>
#include <unordered_map>

#include "nightlights/csv.h"
#include "nightlights/errors.h"

namespace nightlights {
namespace {

constexpr char kProfileHeader[] =
    "cell,out_flow,self_flow,median_trip_km,total_trip_km";

}  // namespace

double WeightedLowerMedian(std::vector<std::pair<double, double>> value_weight) {
  std::sort(value_weight.begin(), value_weight.end());
  double total = 0;
  for (const auto& [v, w] : value_weight) total += w;
  if (value_weight.empty() || !(total > 0)) return 0.0;
  const double half = 0.5 * total;
  double cum = 0;
  for (const auto& [v, w] : value_weight) {
    cum += w;
    if (cum >= half) return v;
  }
  return value_weight.back().first;
}

std::vector<MobilityProfile> BuildProfiles(
    std::span<const FlowRecord> records,
    const std::set<IntervalId>& interval_filter) {
  std::vector<const FlowRecord*> kept;
  kept.reserve(records.size());
  int level = -1;
  for (const FlowRecord& r : records) {
    if (r.a.level() != r.b.level() || (level >= 0 && r.a.level() != level)) {
      throw InvalidArgumentError("flow records mix cell levels");
    }
    level = r.a.level();
    if (!interval_filter.empty() && !interval_filter.contains(r.t)) continue;
    if (!(r.n > 0)) continue;
    kept.push_back(&r);
  }
  // Canonical order so floating-point sums do not depend on input order.
  auto key = [](const FlowRecord* r) {
    return std::make_tuple(r->a, r->b, r->t, r->n);
  };
  std::sort(kept.begin(), kept.end(),
            [&](const FlowRecord* x, const FlowRecord* y) {
              return key(x) < key(y);
            });

  std::unordered_map<CellId, LatLng> centroid;
  auto centroid_of = [&](const CellId& c) -> const LatLng& {
    auto it = centroid.find(c);
    if (it == centroid.end()) {
      it = centroid.emplace(c, GetCellGeometry(c).centroid).first;
    }
    return it->second;
  };

  std::vector<MobilityProfile> out;
  std::unordered_map<CellId, std::size_t> index;
  std::vector<std::pair<double, double>> dist_weight;
  std::size_t i = 0;
  while (i < kept.size()) {
    const CellId cell = kept[i]->a;
    MobilityProfile p;
    p.cell = cell;
    dist_weight.clear();
    for (; i < kept.size() && kept[i]->a == cell; ++i) {
      const FlowRecord& r = *kept[i];
      if (r.b == cell) {
        p.self_flow += r.n;
      } else {
        const double d = GreatCircleKm(centroid_of(r.a), centroid_of(r.b));
        p.out_flow += r.n;
        p.total_trip_km += r.n * d;
        dist_weight.emplace_back(d, r.n);
      }
    }
    p.median_trip_km = WeightedLowerMedian(dist_weight);
    index.emplace(cell, out.size());
    out.push_back(p);
  }

  // In-flow in (b, a, t) order for the same reason as above.
  std::sort(kept.begin(), kept.end(),
            [](const FlowRecord* x, const FlowRecord* y) {
              return std::make_tuple(x->b, x->a, x->t, x->n) <
                     std::make_tuple(y->b, y->a, y->t, y->n);
            });
  for (const FlowRecord* r : kept) {
    if (r->a == r->b) continue;
    auto it = index.find(r->b);
    if (it != index.end()) out[it->second].in_flow += r->n;
  }
  return out;
}

ProfileMatrix MakeProfileMatrix(std::span<const MobilityProfile> profiles,
                                bool include_in_flow) {
  if (profiles.empty()) {
    throw InvalidArgumentError("profile matrix needs at least one profile");
  }
  std::vector<const MobilityProfile*> sorted;
  sorted.reserve(profiles.size());
  for (const auto& p : profiles) sorted.push_back(&p);
  std::sort(sorted.begin(), sorted.end(),
            [](const MobilityProfile* a, const MobilityProfile* b) {
              return a->cell < b->cell;
            });
  for (std::size_t k = 1; k < sorted.size(); ++k) {
    if (sorted[k]->cell == sorted[k - 1]->cell) {
      throw InvalidArgumentError("duplicate profile for cell " +
                                 sorted[k]->cell.ToString());
    }
  }
  const int ncols = include_in_flow ? 5 : 4;
  ProfileMatrix m;
  m.x.resize(static_cast<Eigen::Index>(sorted.size()), ncols);
  m.cells.reserve(sorted.size());
  for (std::size_t r = 0; r < sorted.size(); ++r) {
    const MobilityProfile& p = *sorted[r];
    const auto row = static_cast<Eigen::Index>(r);
    m.cells.push_back(p.cell);
    m.x(row, 0) = p.out_flow;
    m.x(row, 1) = p.self_flow;
    m.x(row, 2) = p.median_trip_km;
    m.x(row, 3) = p.total_trip_km;
    if (include_in_flow) m.x(row, 4) = p.in_flow;
  }
  for (int c = 0; c < ncols; ++c) m.columns.emplace_back(kFeatureNames[c]);
  return m;
}

void WriteProfiles(std::span<const MobilityProfile> profiles,
                   const std::string& path, bool include_in_flow) {
  TextWriter out(path);
  out.WriteLine(include_in_flow ? std::string(kProfileHeader) + ",in_flow"
                                : std::string(kProfileHeader));
  for (const auto& p : profiles) {
    std::string line = p.cell.ToString();
    for (double v : {p.out_flow, p.self_flow, p.median_trip_km,
                     p.total_trip_km}) {
      line += ',';
      line += FormatDouble(v);
    }
    if (include_in_flow) {
      line += ',';
      line += FormatDouble(p.in_flow);
    }
    out.WriteLine(line);
  }
  out.Close();
}

std::vector<MobilityProfile> ReadProfiles(const std::string& path) {
  LineReader in(path);
  std::string line;
  std::vector<MobilityProfile> out;
  if (!in.Next(&line)) return out;
  const std::string header(Trim(line));
  bool with_in_flow;
  if (header == kProfileHeader) {
    with_in_flow = false;
  } else if (header == std::string(kProfileHeader) + ",in_flow") {
    with_in_flow = true;
  } else {
    throw FormatError(path, 1, "unexpected profile header '" + header + "'");
  }
  const std::size_t nfields = with_in_flow ? 6 : 5;
  while (in.Next(&line)) {
    if (Trim(line).empty()) continue;
    const auto f = SplitFields(line);
    const std::size_t ln = in.line_number();
    if (f.size() != nfields) {
      throw FormatError(path, ln, "expected " + std::to_string(nfields) +
                                      " fields, got " +
                                      std::to_string(f.size()));
    }
    MobilityProfile p;
    try {
      p.cell = CellId::FromString(Trim(f[0]));
    } catch (const InvalidArgumentError& e) {
      throw FormatError(path, ln, e.what());
    }
    p.out_flow = ParseDouble(f[1], path, ln);
    p.self_flow = ParseDouble(f[2], path, ln);
    p.median_trip_km = ParseDouble(f[3], path, ln);
    p.total_trip_km = ParseDouble(f[4], path, ln);
    if (with_in_flow) p.in_flow = ParseDouble(f[5], path, ln);
    out.push_back(p);
  }
  return out;
}

std::set<IntervalId> NamedIntervals(std::string_view dataset, int year) {
  using namespace std::chrono;
  std::set<IntervalId> out;
  const int nweeks = IsoWeeksInYear(year);
  auto thursday_day = [&](int week) {
    const int64_t start = IsoWeekStart(year, week);
    return sys_days(days(start / 86400 + 3));
  };
  if (dataset == "annual") {
    out.insert(IntervalId::Annual(year));
  } else if (dataset == "all-weeks") {
    for (int w = 1; w <= nweeks; ++w) out.insert(IntervalId::Week(year, w));
  } else if (dataset == "spring") {
    const sys_days from = sys_days(std::chrono::year(year) / March / 20);
    const sys_days to = sys_days(std::chrono::year(year) / June / 21);
    for (int w = 1; w <= nweeks; ++w) {
      const sys_days th = thursday_day(w);
      if (th >= from && th < to) out.insert(IntervalId::Week(year, w));
    }
  } else if (dataset == "may") {
    for (int w = 1; w <= nweeks; ++w) {
      if (year_month_day(thursday_day(w)).month() == May) {
        out.insert(IntervalId::Week(year, w));
      }
    }
  } else if (dataset.starts_with("week-")) {
    const std::string_view num = dataset.substr(5);
    int w = 0;
    auto r = std::from_chars(num.data(), num.data() + num.size(), w);
    if (r.ec != std::errc() || r.ptr != num.data() + num.size() || w < 1 ||
        w > nweeks) {
      throw InvalidArgumentError("bad week dataset '" + std::string(dataset) +
                                 "'");
    }
    out.insert(IntervalId::Week(year, w));
  } else {
    throw InvalidArgumentError("unknown dataset '" + std::string(dataset) +
                               "'");
  }
  return out;
}

}  // namespace nightlights
