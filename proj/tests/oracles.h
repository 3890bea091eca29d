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

// Brute-force reference implementations used by the unit and acceptance
// tests. They favour the most direct formulation over speed and share no
// code with the library beyond plain data types.

#ifndef NIGHTLIGHTS_TESTS_ORACLES_H_
#define NIGHTLIGHTS_TESTS_ORACLES_H_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "nightlights/features.h"
#include "nightlights/flow_ingest.h"
#include "nightlights/raster.h"
#include "nightlights/sphere_grid.h"

namespace oracle {

using nightlights::CellId;
using nightlights::FlowRecord;
using nightlights::IntervalId;
using nightlights::LatLng;

inline constexpr double kRadiusKm = 6371.0;

inline double Rad(double deg) { return deg * std::numbers::pi / 180.0; }

// Spherical law of cosines in its haversine form.
inline double HaversineKm(double lat1, double lng1, double lat2, double lng2) {
  const double dlat = Rad(lat2 - lat1);
  const double dlng = Rad(lng2 - lng1);
  const double s = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(Rad(lat1)) * std::cos(Rad(lat2)) *
                       std::sin(dlng / 2) * std::sin(dlng / 2);
  return 2 * kRadiusKm * std::asin(std::min(1.0, std::sqrt(s)));
}

inline double HaversineKm(const LatLng& a, const LatLng& b) {
  return HaversineKm(a.lat(), a.lng(), b.lat(), b.lng());
}

// Face, i and j of the cell containing a point, from first principles: the
// face is the dominant axis (sign included), u and v are the gnomonic
// coordinates on that face, and the inverse quadratic transform maps them to
// [0, 1].
struct FaceIJ {
  int face;
  uint32_t i;
  uint32_t j;
};

inline double UvToStRef(double u) {
  return u >= 0 ? 0.5 * std::sqrt(1 + 3 * u) : 1 - 0.5 * std::sqrt(1 - 3 * u);
}

inline FaceIJ CellOf(double lat_deg, double lng_deg, int level) {
  const double x = std::cos(Rad(lat_deg)) * std::cos(Rad(lng_deg));
  const double y = std::cos(Rad(lat_deg)) * std::sin(Rad(lng_deg));
  const double z = std::sin(Rad(lat_deg));
  const double ax = std::abs(x), ay = std::abs(y), az = std::abs(z);
  int face;
  double u, v;
  if (ax >= ay && ax >= az) {
    face = x > 0 ? 0 : 3;
    u = x > 0 ? y / x : z / x;
    v = x > 0 ? z / x : y / x;
  } else if (ay >= az) {
    face = y > 0 ? 1 : 4;
    u = y > 0 ? -x / y : z / y;
    v = y > 0 ? z / y : -x / y;
  } else {
    face = z > 0 ? 2 : 5;
    u = z > 0 ? -x / z : -y / z;
    v = z > 0 ? -y / z : -x / z;
  }
  const double n = std::ldexp(1.0, level);
  auto index = [&](double w) {
    const double st = UvToStRef(w);
    return static_cast<uint32_t>(std::clamp(std::floor(st * n), 0.0, n - 1));
  };
  return {face, index(u), index(v)};
}

// Mean of valid pixels per cell by scanning every pixel for every cell.
inline std::map<CellId, double> MeanLightPerCell(
    const nightlights::LightRaster& raster, const std::vector<CellId>& cells) {
  std::map<CellId, double> out;
  const auto& g = raster.geometry();
  for (const CellId& c : cells) {
    double sum = 0;
    uint64_t n = 0;
    for (uint32_t r = 0; r < g.nrows; ++r) {
      for (uint32_t col = 0; col < g.ncols; ++col) {
        const double v = raster.at(r, col);
        if (v == raster.nodata() || std::isnan(v)) continue;
        double lng = g.PixelCenterLng(col);
        if (lng > 180) lng -= 360;
        const FaceIJ f = CellOf(g.PixelCenterLat(r), lng, c.level());
        if (f.face == c.face() && f.i == c.i() && f.j == c.j()) {
          sum += v;
          ++n;
        }
      }
    }
    if (n > 0) out[c] = sum / static_cast<double>(n);
  }
  return out;
}

// Even-odd ray casting over every ring.
inline bool InPolygon(const nightlights::AdminPolygon& poly, double lat,
                      double lng) {
  bool inside = false;
  for (const auto& ring : poly.rings) {
    for (std::size_t a = 0, b = ring.size() - 1; a < ring.size(); b = a++) {
      const double ya = ring[a].lat(), yb = ring[b].lat();
      const double xa = ring[a].lng(), xb = ring[b].lng();
      if ((ya > lat) != (yb > lat) &&
          lng < (xb - xa) * (lat - ya) / (yb - ya) + xa) {
        inside = !inside;
      }
    }
  }
  return inside;
}

inline double TotalLight(const nightlights::LightRaster& raster,
                         const nightlights::AdminPolygon& poly) {
  const auto& g = raster.geometry();
  double total = 0;
  for (uint32_t r = 0; r < g.nrows; ++r) {
    for (uint32_t c = 0; c < g.ncols; ++c) {
      const double v = raster.at(r, c);
      if (v == raster.nodata() || std::isnan(v)) continue;
      if (InPolygon(poly, g.PixelCenterLat(r), g.PixelCenterLng(c))) total += v;
    }
  }
  return total;
}

// Mobility profile of one cell straight from its definition.
struct Profile {
  double out_flow = 0, self_flow = 0, median_km = 0, total_km = 0, in_flow = 0;
};

inline std::map<CellId, Profile> Profiles(const std::vector<FlowRecord>& records,
                                          const std::set<IntervalId>& filter) {
  std::map<CellId, Profile> out;
  std::map<CellId, std::vector<std::pair<double, double>>> trips;
  auto keep = [&](const FlowRecord& r) {
    return (filter.empty() || filter.contains(r.t)) && r.n > 0;
  };
  for (const FlowRecord& r : records) {
    if (!keep(r)) continue;
    Profile& p = out[r.a];
    if (r.a == r.b) {
      p.self_flow += r.n;
      continue;
    }
    const LatLng ca = nightlights::GetCellGeometry(r.a).centroid;
    const LatLng cb = nightlights::GetCellGeometry(r.b).centroid;
    const double d = HaversineKm(ca, cb);
    p.out_flow += r.n;
    p.total_km += r.n * d;
    trips[r.a].emplace_back(d, r.n);
  }
  for (auto& [cell, t] : trips) {
    std::sort(t.begin(), t.end());
    double total = 0;
    for (const auto& [d, w] : t) total += w;
    double run = 0;
    for (const auto& [d, w] : t) {
      run += w;
      if (run >= total / 2) {
        out[cell].median_km = d;
        break;
      }
    }
  }
  for (const FlowRecord& r : records) {
    if (!keep(r) || r.a == r.b) continue;
    auto it = out.find(r.b);
    if (it != out.end()) it->second.in_flow += r.n;
  }
  return out;
}

// Empirical semivariogram by enumerating all unordered pairs.
struct Variogram {
  std::vector<double> gamma;
  std::vector<double> mean_lag;
  std::vector<uint64_t> pairs;
};

inline Variogram EmpiricalVariogram(const std::vector<LatLng>& pts,
                                    const std::vector<double>& z,
                                    double max_lag_km, int bins) {
  Variogram v;
  v.gamma.assign(static_cast<std::size_t>(bins), 0);
  v.mean_lag.assign(static_cast<std::size_t>(bins), 0);
  v.pairs.assign(static_cast<std::size_t>(bins), 0);
  const double width = max_lag_km / bins;
  for (std::size_t a = 0; a < pts.size(); ++a) {
    for (std::size_t b = 0; b < a; ++b) {
      const double h = HaversineKm(pts[a], pts[b]);
      if (h >= max_lag_km) continue;
      const auto k = std::min<std::size_t>(static_cast<std::size_t>(bins) - 1,
                                           static_cast<std::size_t>(h / width));
      v.gamma[k] += (z[a] - z[b]) * (z[a] - z[b]);
      v.mean_lag[k] += h;
      ++v.pairs[k];
    }
  }
  for (std::size_t k = 0; k < v.gamma.size(); ++k) {
    if (v.pairs[k] == 0) continue;
    v.gamma[k] /= 2.0 * static_cast<double>(v.pairs[k]);
    v.mean_lag[k] /= static_cast<double>(v.pairs[k]);
  }
  return v;
}

// Majority region among the k nearest labelled points; ties go to the region
// with the smaller summed distance, then the smaller region id.
inline std::string KnnRegion(const LatLng& q,
                             const std::vector<LatLng>& labelled,
                             const std::vector<std::string>& labels,
                             std::size_t k) {
  std::vector<std::tuple<double, std::size_t>> d;
  for (std::size_t i = 0; i < labelled.size(); ++i) {
    d.emplace_back(HaversineKm(q, labelled[i]), i);
  }
  std::sort(d.begin(), d.end());
  d.resize(std::min(k, d.size()));
  std::map<std::string, std::pair<int, double>> votes;
  for (const auto& [dist, i] : d) {
    votes[labels[i]].first += 1;
    votes[labels[i]].second += dist;
  }
  std::string best;
  int best_votes = -1;
  double best_dist = 0;
  for (const auto& [label, vd] : votes) {
    if (vd.first > best_votes ||
        (vd.first == best_votes && vd.second < best_dist)) {
      best = label;
      best_votes = vd.first;
      best_dist = vd.second;
    }
  }
  return best;
}

// Average ranks by counting smaller and equal values.
inline std::vector<double> CountingRanks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      less += w < v[i];
      equal += w == v[i];
    }
    r[i] = less + (equal + 1) / 2;
  }
  return r;
}

inline double Pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
  }
  const double ma = sa / n, mb = sb / n;
  for (std::size_t i = 0; i < a.size(); ++i) {
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
    sab += (a[i] - ma) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline double SpearmanRho(const std::vector<double>& x,
                          const std::vector<double>& y) {
  return Pearson(CountingRanks(x), CountingRanks(y));
}

// Two-sided tail of Student's t from Simpson integration of its density.
inline double StudentTwoSidedP(double t, double dof) {
  const double c = std::exp(std::lgamma((dof + 1) / 2) - std::lgamma(dof / 2)) /
                   std::sqrt(dof * std::numbers::pi);
  auto pdf = [&](double x) { return c * std::pow(1 + x * x / dof, -(dof + 1) / 2); };
  // Integrate [0, |t|] and use symmetry: p = 1 − 2∫₀^|t| f.
  const double a = std::abs(t);
  const int n = 20000;
  const double h = a / n;
  double s = pdf(0) + pdf(a);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * pdf(i * h);
  return std::clamp(1 - 2 * s * h / 3, 0.0, 1.0);
}

}  // namespace oracle

#endif  // NIGHTLIGHTS_TESTS_ORACLES_H_
