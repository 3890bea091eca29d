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

#include "nightlights/evalstats.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "nightlights/csv.h"
#include "nightlights/errors.h"
#include "nightlights/parallel.h"
#include "nightlights/random.h"

namespace nightlights {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double PearsonOfRanks(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0 || sbb == 0) return kNaN;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::string FormatFixed(double v, int digits) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

std::vector<double> AverageRanks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 hold ranks i+1..j.
    const double mean_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = mean_rank;
    i = j;
  }
  return ranks;
}

SpearmanResult Spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw InvalidArgumentError("Spearman inputs differ in length");
  }
  if (x.size() < 2) throw InvalidArgumentError("Spearman needs >= 2 pairs");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw InvalidArgumentError("Spearman inputs must be finite");
    }
  }
  SpearmanResult r;
  r.n = x.size();
  r.reliable = r.n >= 3;
  const std::vector<double> rx = AverageRanks(x);
  const std::vector<double> ry = AverageRanks(y);
  r.rho = PearsonOfRanks(rx, ry);
  if (std::isnan(r.rho)) {
    r.defined = false;
    r.p = kNaN;
    return r;
  }
  if (!r.reliable) {
    r.p = kNaN;
    return r;
  }
  if (std::abs(r.rho) >= 1.0) {
    r.p = 0.0;
    return r;
  }
  const double dof = static_cast<double>(r.n - 2);
  const double t = r.rho * std::sqrt(dof / (1 - r.rho * r.rho));
  boost::math::students_t dist(dof);
  r.p = std::clamp(
      2 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0,
      1.0);
  return r;
}

double SpearmanPermutationP(std::span<const double> x,
                            std::span<const double> y, int shuffles,
                            uint64_t seed) {
  if (shuffles < 1) throw InvalidArgumentError("need at least one shuffle");
  const SpearmanResult obs = Spearman(x, y);
  if (!obs.defined) return kNaN;
  const std::vector<double> rx = AverageRanks(x);
  const std::vector<double> ry = AverageRanks(y);
  const double target = std::abs(obs.rho) * (1 - 1e-12);
  std::vector<int> hit(static_cast<std::size_t>(shuffles), 0);
  ParallelFor(hit.size(), [&](std::size_t s) {
    std::vector<double> perm = ry;
    CounterRng rng({seed, 0x7065726dULL, s});
    Shuffle(std::span<double>(perm), rng);
    hit[s] = std::abs(PearsonOfRanks(rx, perm)) >= target ? 1 : 0;
  });
  const double extreme = std::accumulate(hit.begin(), hit.end(), 0.0);
  return (extreme + 1) / (shuffles + 1.0);
}

std::string Stars(double p) {
  if (std::isnan(p)) return "";
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

std::vector<GdpEntry> ReadGdpTable(const std::string& path) {
  LineReader in(path);
  std::string line;
  std::vector<GdpEntry> out;
  if (!in.Next(&line)) return out;
  const std::string_view header = Trim(line);
  if (header != "unit_id,gdp,group" && header != "unit_id,gdp") {
    throw FormatError(path, 1, "expected header 'unit_id,gdp,group'");
  }
  std::set<std::string> seen;
  while (in.Next(&line)) {
    if (Trim(line).empty()) continue;
    const auto f = SplitFields(line);
    if (f.size() != 2 && f.size() != 3) {
      throw FormatError(path, in.line_number(), "expected 2 or 3 fields");
    }
    GdpEntry e;
    e.unit_id = std::string(Trim(f[0]));
    e.gdp = ParseDouble(Trim(f[1]), path, in.line_number());
    if (f.size() == 3) e.group = std::string(Trim(f[2]));
    if (e.unit_id.empty()) {
      throw FormatError(path, in.line_number(), "empty unit id");
    }
    if (!(e.gdp >= 0) || !std::isfinite(e.gdp)) {
      throw FormatError(path, in.line_number(), "GDP must be >= 0");
    }
    if (!seen.insert(e.unit_id).second) {
      throw FormatError(path, in.line_number(),
                        "duplicate unit id '" + e.unit_id + "'");
    }
    out.push_back(std::move(e));
  }
  return out;
}

void WriteGdpTable(std::span<const GdpEntry> table, const std::string& path) {
  TextWriter out(path);
  out.WriteLine("unit_id,gdp,group");
  for (const GdpEntry& e : table) {
    out.WriteLine(e.unit_id + "," + FormatDouble(e.gdp) + "," + e.group);
  }
  out.Close();
}

CorrelationReport CorrelationTable(std::span<const NamedMap> maps,
                                   std::span<const AdminPolygon> units,
                                   std::span<const GdpEntry> gdp,
                                   PValueMode mode, uint64_t seed) {
  std::map<std::string, const GdpEntry*> by_id;
  for (const GdpEntry& e : gdp) by_id[e.unit_id] = &e;
  std::vector<const AdminPolygon*> used;
  CorrelationReport report;
  for (const AdminPolygon& u : units) {
    if (by_id.contains(u.id)) {
      used.push_back(&u);
    } else {
      report.excluded_units.push_back(u.id);
    }
  }
  std::sort(report.excluded_units.begin(), report.excluded_units.end());
  std::sort(used.begin(), used.end(),
            [](const auto* a, const auto* b) { return a->id < b->id; });
  for (std::size_t i = 1; i < used.size(); ++i) {
    if (used[i]->id == used[i - 1]->id) {
      throw InvalidArgumentError("duplicate polygon id '" + used[i]->id + "'");
    }
  }

  std::vector<std::string> groups = {"All"};
  {
    std::set<std::string> g;
    for (const auto* u : used) {
      const std::string& name = by_id.at(u->id)->group;
      if (!name.empty() && name != "All") g.insert(name);
    }
    groups.insert(groups.end(), g.begin(), g.end());
  }

  for (const NamedMap& m : maps) {
    std::vector<double> light(used.size());
    ParallelFor(used.size(), [&](std::size_t i) {
      light[i] = TotalLightInPolygon(*m.raster, *used[i]);
    });
    for (const std::string& group : groups) {
      std::vector<double> x, y;
      for (std::size_t i = 0; i < used.size(); ++i) {
        const GdpEntry& e = *by_id.at(used[i]->id);
        if (group != "All" && e.group != group) continue;
        x.push_back(light[i]);
        y.push_back(e.gdp);
      }
      CorrelationRow row;
      row.map = m.name;
      row.group = group;
      if (x.size() < 2) {
        row.stats.n = x.size();
        row.stats.rho = kNaN;
        row.stats.p = kNaN;
        row.stats.defined = false;
        row.stats.reliable = false;
      } else {
        row.stats = Spearman(x, y);
        if (mode == PValueMode::kPermutation && row.stats.defined &&
            row.stats.reliable) {
          row.stats.p = SpearmanPermutationP(x, y, 10000, seed);
        }
      }
      row.stars = Stars(row.stats.p);
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

void WriteCorrelationCsv(const CorrelationReport& report,
                         const std::string& path) {
  TextWriter out(path);
  out.WriteLine("map,group,n,rho,p,stars");
  for (const CorrelationRow& r : report.rows) {
    out.WriteLine(r.map + "," + r.group + "," + std::to_string(r.stats.n) +
                  "," + (std::isnan(r.stats.rho) ? "NA" : FormatDouble(r.stats.rho)) +
                  "," + (std::isnan(r.stats.p) ? "NA" : FormatDouble(r.stats.p)) +
                  "," + r.stars);
  }
  out.Close();
}

std::string FormatCorrelationTable(const CorrelationReport& report) {
  std::vector<std::string> maps, groups;
  std::map<std::pair<std::string, std::string>, const CorrelationRow*> cell;
  for (const CorrelationRow& r : report.rows) {
    if (std::find(maps.begin(), maps.end(), r.map) == maps.end()) {
      maps.push_back(r.map);
    }
    if (std::find(groups.begin(), groups.end(), r.group) == groups.end()) {
      groups.push_back(r.group);
    }
    cell[{r.map, r.group}] = &r;
  }
  std::size_t name_w = 3;
  for (const auto& m : maps) name_w = std::max(name_w, m.size());
  std::vector<std::size_t> col_w;
  for (const auto& g : groups) col_w.push_back(std::max<std::size_t>(g.size(), 14));

  std::ostringstream s;
  auto pad = [](std::string v, std::size_t w) {
    if (v.size() < w) v.insert(0, w - v.size(), ' ');
    return v;
  };
  s << pad("Map", name_w);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    s << "  " << pad(groups[g], col_w[g]);
  }
  s << "\n";
  for (const auto& m : maps) {
    s << pad(m, name_w);
    for (std::size_t g = 0; g < groups.size(); ++g) {
      auto it = cell.find({m, groups[g]});
      std::string v;
      if (it != cell.end()) {
        const CorrelationRow& r = *it->second;
        v = FormatFixed(r.stats.rho, 3) + (r.stars.empty() ? "" : r.stars) +
            " (" + std::to_string(r.stats.n) + ")";
      }
      s << "  " << pad(v, col_w[g]);
    }
    s << "\n";
  }
  s << "Significance: *** p<0.001, ** p<0.01, * p<0.05; (n) units.\n";
  if (!report.excluded_units.empty()) {
    s << "Excluded (no GDP):";
    for (const auto& u : report.excluded_units) s << " " << u;
    s << "\n";
  }
  return s.str();
}

}  // namespace nightlights
