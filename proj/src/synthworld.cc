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

#include "nightlights/synthworld.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "nightlights/csv.h"
#include "nightlights/errors.h"
#include "nightlights/geojson.h"
#include "nightlights/parallel.h"
#include "nightlights/random.h"
#include "nightlights/spatial_index.h"

namespace nightlights {
namespace {

constexpr double kKmPerDeg = kEarthRadiusKm * std::numbers::pi / 180.0;
// Kernel length per unit of spherical range; see SmoothField.
constexpr double kRangeToSigma = 4.31;

// Stream tags for the counter-based generator.
enum Stream : uint64_t {
  kCenters = 1,
  kPairs = 2,
  kTrips = 3,
  kResidual = 4,
  kNugget = 5,
  kGdp = 6,
  kLeakFeature = 10,
  kLeakTarget = 20,
  kLeakWhite = 21,
};

// Days since 1970-01-01 of a proleptic Gregorian date.
int64_t DaysFromCivil(int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

// Seconds inside both the calendar year and the ISO week-numbering year.
std::pair<int64_t, int64_t> TripWindow(int year) {
  const int64_t jan1 = DaysFromCivil(year, 1, 1) * 86400;
  const int64_t next_jan1 = DaysFromCivil(year + 1, 1, 1) * 86400;
  const int64_t lo = std::max(jan1, IsoWeekStart(year, 1));
  const int64_t hi = std::min(next_jan1, IsoWeekStart(year + 1, 1));
  return {lo, hi};
}

double AverageCellSideKm(int level) {
  const double area = 4 * std::numbers::pi * kEarthRadiusKm * kEarthRadiusKm /
                      (6.0 * std::pow(4.0, level));
  return std::sqrt(area);
}

double Density(std::span<const PopulationCenter> centers, const LatLng& p) {
  double d = 0;
  for (const PopulationCenter& c : centers) {
    const double km = GreatCircleKm(p, c.location);
    if (km > 6 * c.sigma_km) continue;
    d += c.peak_density * std::exp(-km * km / (2 * c.sigma_km * c.sigma_km));
  }
  return d;
}

LatLng PointInCell(const CellId& cell, CounterRng& rng) {
  constexpr double kMargin = 0.01;
  const double scale = std::ldexp(1.0, -cell.level());
  const double s = (cell.i() + kMargin + (1 - 2 * kMargin) * rng.Uniform()) * scale;
  const double t = (cell.j() + kMargin + (1 - 2 * kMargin) * rng.Uniform()) * scale;
  const Vec3 p = cube::FaceUvToXyz(cell.face(), cube::StToUv(s), cube::StToUv(t));
  return LatLng::FromUnitVector(Normalized(p));
}

std::string FormatCoef(const std::array<double, 4>& c) {
  return FormatDouble(c[0]) + "," + FormatDouble(c[1]) + "," +
         FormatDouble(c[2]) + "," + FormatDouble(c[3]);
}

}  // namespace

double LightLaw::Evaluate(const MobilityProfile& p) const {
  const double z = intercept + coef[0] * p.out_flow / 1000.0 +
                   coef[1] * p.self_flow / 1000.0 + coef[2] * p.median_trip_km +
                   coef[3] * p.total_trip_km / 1000.0;
  if (kind == Kind::kLinear || z <= 0) return z;
  return saturation * -std::expm1(-z / saturation);
}

void WorldSpec::Validate() const {
  auto fail = [](const std::string& what) {
    throw InvalidArgumentError("world spec: " + what);
  };
  if (!(min_lat < max_lat) || min_lat < -85 || max_lat > 85) {
    fail("latitude box must satisfy -85 <= min < max <= 85");
  }
  if (!(min_lng < max_lng) || min_lng < -180 || max_lng > 180) {
    fail("longitude box must satisfy -180 <= min < max <= 180");
  }
  if (level < 1 || level > 20) fail("level must be in [1, 20]");
  if (n_centers < 1) fail("at least one population center is required");
  if (!(peak_density_min > 0) || peak_density_max < peak_density_min) {
    fail("bad peak density range");
  }
  if (!(sigma_km_min > 0) || sigma_km_max < sigma_km_min) {
    fail("bad sigma range");
  }
  if (!(min_density > 0)) fail("min_density must be > 0");
  if (!(trips_per_person > 0)) fail("trips_per_person must be > 0");
  if (destinations < 0) fail("destinations must be >= 0");
  if (!(distance_scale_km > 0) || distance_decay < 0 || self_affinity < 0) {
    fail("bad gravity parameters");
  }
  if (country_rows < 1 || country_cols < 1 || region_rows < 1 ||
      region_cols < 1 || region_rows > country_rows ||
      region_cols > country_cols) {
    fail("bad country / region grid");
  }
  if (coast_inset_deg < 0 ||
      2 * coast_inset_deg >= (max_lat - min_lat) / country_rows ||
      2 * coast_inset_deg >= (max_lng - min_lng) / country_cols) {
    fail("coast inset too large");
  }
  if (laws.size() != 1 && laws.size() != static_cast<std::size_t>(n_regions())) {
    fail("need one light law or one per region");
  }
  for (const LightLaw& l : laws) {
    if (l.kind == LightLaw::Kind::kSaturating && !(l.saturation > 0)) {
      fail("saturation must be > 0");
    }
  }
  if (residual.psill < 0 || residual.nugget < 0 || !(residual.range_km > 0)) {
    fail("bad residual parameters");
  }
  if (!(raster_cell_deg > 0)) fail("raster cell size must be > 0");
  if (!(gdp_per_light > 0) || gdp_noise < 0) fail("bad GDP law");
}

std::string WorldSpec::Serialize() const {
  std::ostringstream s;
  auto kv = [&](const std::string& k, const std::string& v) {
    s << k << " = " << v << "\n";
  };
  kv("seed", std::to_string(seed));
  kv("min_lat", FormatDouble(min_lat));
  kv("max_lat", FormatDouble(max_lat));
  kv("min_lng", FormatDouble(min_lng));
  kv("max_lng", FormatDouble(max_lng));
  kv("level", std::to_string(level));
  kv("year", std::to_string(year));
  kv("n_centers", std::to_string(n_centers));
  kv("peak_density_min", FormatDouble(peak_density_min));
  kv("peak_density_max", FormatDouble(peak_density_max));
  kv("sigma_km_min", FormatDouble(sigma_km_min));
  kv("sigma_km_max", FormatDouble(sigma_km_max));
  kv("min_density", FormatDouble(min_density));
  kv("trips_per_person", FormatDouble(trips_per_person));
  kv("destinations", std::to_string(destinations));
  kv("distance_scale_km", FormatDouble(distance_scale_km));
  kv("distance_decay", FormatDouble(distance_decay));
  kv("self_affinity", FormatDouble(self_affinity));
  kv("country_rows", std::to_string(country_rows));
  kv("country_cols", std::to_string(country_cols));
  kv("region_rows", std::to_string(region_rows));
  kv("region_cols", std::to_string(region_cols));
  kv("coast_inset_deg", FormatDouble(coast_inset_deg));
  kv("laws", std::to_string(laws.size()));
  for (std::size_t i = 0; i < laws.size(); ++i) {
    const std::string p = "law." + std::to_string(i) + ".";
    kv(p + "kind",
       laws[i].kind == LightLaw::Kind::kLinear ? "linear" : "saturating");
    kv(p + "intercept", FormatDouble(laws[i].intercept));
    kv(p + "coef", FormatCoef(laws[i].coef));
    kv(p + "saturation", FormatDouble(laws[i].saturation));
  }
  kv("residual.psill", FormatDouble(residual.psill));
  kv("residual.range_km", FormatDouble(residual.range_km));
  kv("residual.nugget", FormatDouble(residual.nugget));
  kv("raster_cell_deg", FormatDouble(raster_cell_deg));
  kv("gdp_per_light", FormatDouble(gdp_per_light));
  kv("gdp_noise", FormatDouble(gdp_noise));
  return s.str();
}

WorldSpec ParseWorldSpec(const std::string& text) {
  WorldSpec spec;
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = Trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw FormatError("world spec", line_no, "expected key = value");
    }
    kv[std::string(Trim(t.substr(0, eq)))] = std::string(Trim(t.substr(eq + 1)));
  }
  auto take = [&](const std::string& k) -> std::optional<std::string> {
    auto it = kv.find(k);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto num = [&](const std::string& k, double& out) {
    if (auto v = take(k)) out = ParseDouble(*v, "world spec", 0);
  };
  auto integer = [&](const std::string& k, int& out) {
    if (auto v = take(k)) out = static_cast<int>(ParseInt(*v, "world spec", 0));
  };
  if (auto v = take("seed")) {
    spec.seed = static_cast<uint64_t>(std::stoull(*v));
  }
  num("min_lat", spec.min_lat);
  num("max_lat", spec.max_lat);
  num("min_lng", spec.min_lng);
  num("max_lng", spec.max_lng);
  integer("level", spec.level);
  integer("year", spec.year);
  integer("n_centers", spec.n_centers);
  num("peak_density_min", spec.peak_density_min);
  num("peak_density_max", spec.peak_density_max);
  num("sigma_km_min", spec.sigma_km_min);
  num("sigma_km_max", spec.sigma_km_max);
  num("min_density", spec.min_density);
  num("trips_per_person", spec.trips_per_person);
  integer("destinations", spec.destinations);
  num("distance_scale_km", spec.distance_scale_km);
  num("distance_decay", spec.distance_decay);
  num("self_affinity", spec.self_affinity);
  integer("country_rows", spec.country_rows);
  integer("country_cols", spec.country_cols);
  integer("region_rows", spec.region_rows);
  integer("region_cols", spec.region_cols);
  num("coast_inset_deg", spec.coast_inset_deg);
  int n_laws = 1;
  integer("laws", n_laws);
  if (n_laws < 1) throw InvalidArgumentError("world spec: laws must be >= 1");
  spec.laws.assign(static_cast<std::size_t>(n_laws), LightLaw{});
  for (int i = 0; i < n_laws; ++i) {
    const std::string p = "law." + std::to_string(i) + ".";
    LightLaw& law = spec.laws[static_cast<std::size_t>(i)];
    if (auto v = take(p + "kind")) {
      if (*v == "linear") {
        law.kind = LightLaw::Kind::kLinear;
      } else if (*v == "saturating") {
        law.kind = LightLaw::Kind::kSaturating;
      } else {
        throw InvalidArgumentError("world spec: unknown law kind '" + *v + "'");
      }
    }
    num(p + "intercept", law.intercept);
    if (auto v = take(p + "coef")) {
      const auto f = SplitFields(*v);
      if (f.size() != 4) {
        throw InvalidArgumentError("world spec: " + p + "coef needs 4 values");
      }
      for (int k = 0; k < 4; ++k) {
        law.coef[static_cast<std::size_t>(k)] =
            ParseDouble(Trim(f[static_cast<std::size_t>(k)]), "world spec", 0);
      }
    }
    num(p + "saturation", law.saturation);
  }
  num("residual.psill", spec.residual.psill);
  num("residual.range_km", spec.residual.range_km);
  num("residual.nugget", spec.residual.nugget);
  num("raster_cell_deg", spec.raster_cell_deg);
  num("gdp_per_light", spec.gdp_per_light);
  num("gdp_noise", spec.gdp_noise);
  if (!kv.empty()) {
    throw InvalidArgumentError("world spec: unknown key '" + kv.begin()->first +
                               "'");
  }
  spec.Validate();
  return spec;
}

std::string RegionId(int region) { return "region_" + std::to_string(region); }

std::string CountryId(int row, int col) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "C%02d%02d", row, col);
  return buf;
}

int RegionAt(const WorldSpec& spec, double lat, double lng) {
  const double fr = (lat - spec.min_lat) / (spec.max_lat - spec.min_lat);
  const double fc = (lng - spec.min_lng) / (spec.max_lng - spec.min_lng);
  const int rr = std::clamp(static_cast<int>(std::floor(fr * spec.region_rows)),
                            0, spec.region_rows - 1);
  const int rc = std::clamp(static_cast<int>(std::floor(fc * spec.region_cols)),
                            0, spec.region_cols - 1);
  return rr * spec.region_cols + rc;
}

SmoothField::SmoothField(uint64_t seed, uint64_t stream, double range_km,
                         double variance)
    : seed_(seed),
      stream_(stream),
      sigma_km_(range_km / kRangeToSigma),
      scale_(std::sqrt(std::max(0.0, variance))),
      step_deg_(sigma_km_ / 2 / kKmPerDeg) {
  if (!(range_km > 0)) throw InvalidArgumentError("field range must be > 0");
}

double SmoothField::operator()(const LatLng& p) const {
  if (scale_ == 0) return 0;
  const double reach_deg = 3.5 * sigma_km_ / kKmPerDeg;
  const double coslat = std::max(0.05, std::cos(p.lat() * std::numbers::pi / 180));
  const int64_t i0 = static_cast<int64_t>(std::floor((p.lat() - reach_deg) / step_deg_));
  const int64_t i1 = static_cast<int64_t>(std::ceil((p.lat() + reach_deg) / step_deg_));
  const double reach_lng = std::min(180.0, reach_deg / coslat);
  const int64_t j0 = static_cast<int64_t>(std::floor((p.lng() - reach_lng) / step_deg_));
  const int64_t j1 = static_cast<int64_t>(std::ceil((p.lng() + reach_lng) / step_deg_));
  double sum = 0, norm = 0;
  const double inv = 1 / (2 * sigma_km_ * sigma_km_);
  for (int64_t i = i0; i <= i1; ++i) {
    const double lat = i * step_deg_;
    if (lat < -90 || lat > 90) continue;
    for (int64_t j = j0; j <= j1; ++j) {
      double lng = j * step_deg_;
      if (lng > 180 || lng < -180) continue;
      const double km = GreatCircleKm(p, LatLng(lat, lng));
      if (km > 3.5 * sigma_km_) continue;
      const double w = std::exp(-km * km * inv);
      CounterRng rng({seed_, stream_, static_cast<uint64_t>(i),
                      static_cast<uint64_t>(j)});
      sum += w * rng.Normal();
      norm += w * w;
    }
  }
  return norm > 0 ? scale_ * sum / std::sqrt(norm) : 0;
}

World Generate(const WorldSpec& spec) {
  spec.Validate();
  World w;
  w.spec = spec;

  // Population centers.
  for (int c = 0; c < spec.n_centers; ++c) {
    CounterRng rng({spec.seed, kCenters, static_cast<uint64_t>(c)});
    const double lat = rng.Uniform(spec.min_lat, spec.max_lat);
    const double lng = rng.Uniform(spec.min_lng, spec.max_lng);
    const double peak = std::exp(rng.Uniform(std::log(spec.peak_density_min),
                                             std::log(spec.peak_density_max)));
    const double sigma = rng.Uniform(spec.sigma_km_min, spec.sigma_km_max);
    w.centers.push_back({LatLng(lat, lng), peak, sigma});
  }

  // Candidate cells from a lattice around each center, finer than a cell.
  const double step_km = AverageCellSideKm(spec.level) / 2.5;
  std::vector<std::vector<CellId>> per_center(w.centers.size());
  ParallelFor(w.centers.size(), [&](std::size_t c) {
    const PopulationCenter& pc = w.centers[c];
    if (pc.peak_density <= spec.min_density) return;
    const double radius_km =
        pc.sigma_km * std::sqrt(2 * std::log(pc.peak_density / spec.min_density)) +
        2 * step_km;
    const double dlat = radius_km / kKmPerDeg;
    const double lat0 = std::max(spec.min_lat, pc.location.lat() - dlat);
    const double lat1 = std::min(spec.max_lat, pc.location.lat() + dlat);
    const double step_lat = step_km / kKmPerDeg;
    std::unordered_set<CellId> seen;
    for (double lat = lat0; lat <= lat1; lat += step_lat) {
      const double coslat = std::cos(lat * std::numbers::pi / 180);
      const double dlng = dlat / coslat;
      const double step_lng = step_lat / coslat;
      const double lng0 = std::max(spec.min_lng, pc.location.lng() - dlng);
      const double lng1 = std::min(spec.max_lng, pc.location.lng() + dlng);
      for (double lng = lng0; lng <= lng1; lng += step_lng) {
        seen.insert(CellId::FromLatLng(LatLng(lat, lng), spec.level));
      }
    }
    per_center[c].assign(seen.begin(), seen.end());
  });
  std::vector<CellId> candidates;
  for (auto& v : per_center) candidates.insert(candidates.end(), v.begin(), v.end());
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());
  std::vector<double> cand_pop(candidates.size(), -1);
  ParallelFor(candidates.size(), [&](std::size_t i) {
    const CellGeometry g = GetCellGeometry(candidates[i]);
    const LatLng& c = g.centroid;
    if (c.lat() < spec.min_lat || c.lat() > spec.max_lat ||
        c.lng() < spec.min_lng || c.lng() > spec.max_lng) {
      return;
    }
    const double density = Density(w.centers, c);
    if (density >= spec.min_density) cand_pop[i] = density * g.area_km2;
  });
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (cand_pop[i] < 0) continue;
    w.populated.push_back(candidates[i]);
    w.population.push_back(cand_pop[i]);
  }
  if (w.populated.empty()) {
    throw InvalidArgumentError("world spec yields no populated cells");
  }

  // Gravity flows to the nearest populated cells.
  std::vector<Vec3> points(w.populated.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    points[i] = CellCenterPoint(w.populated[i]);
  }
  const PointIndex index(points);
  std::vector<std::vector<PairCount>> per_cell(w.populated.size());
  ParallelFor(w.populated.size(), [&](std::size_t i) {
    const std::vector<std::size_t> nn = index.Nearest(
        points[i], static_cast<std::size_t>(spec.destinations) + 1);
    std::vector<std::pair<std::size_t, double>> weights;
    weights.emplace_back(i, spec.self_affinity * w.population[i]);
    for (std::size_t j : nn) {
      if (j == i) continue;
      if (weights.size() > static_cast<std::size_t>(spec.destinations)) break;
      const double d = GreatCircleKm(points[i], points[j]);
      weights.emplace_back(
          j, w.population[j] *
                 std::pow(1 + d / spec.distance_scale_km, -spec.distance_decay));
    }
    double total_w = 0;
    for (const auto& [j, wt] : weights) total_w += wt;
    if (!(total_w > 0)) return;
    const double trips = spec.trips_per_person * w.population[i];
    for (const auto& [j, wt] : weights) {
      CounterRng rng({spec.seed, kPairs, w.populated[i].id(), w.populated[j].id()});
      const uint64_t n = rng.Poisson(trips * wt / total_w);
      if (n > 0) per_cell[i].push_back({w.populated[i], w.populated[j], n});
    }
    std::sort(per_cell[i].begin(), per_cell[i].end(),
              [](const PairCount& x, const PairCount& y) { return x.b < y.b; });
  });
  for (auto& v : per_cell) w.pairs.insert(w.pairs.end(), v.begin(), v.end());
  if (w.pairs.empty()) throw InvalidArgumentError("world spec yields no trips");

  // Ground truth from the true annual flows.
  std::vector<FlowRecord> records;
  records.reserve(w.pairs.size());
  const IntervalId annual = IntervalId::Annual(spec.year);
  for (const PairCount& p : w.pairs) {
    records.push_back({p.a, p.b, annual, static_cast<double>(p.n)});
  }
  const std::vector<MobilityProfile> profiles = BuildProfiles(records);
  w.truth.resize(profiles.size());
  const SmoothField residual_field(spec.seed, kResidual, spec.residual.range_km,
                                   spec.residual.psill);
  ParallelFor(profiles.size(), [&](std::size_t i) {
    CellTruth& t = w.truth[i];
    t.cell = profiles[i].cell;
    t.profile = profiles[i];
    const LatLng c = GetCellGeometry(t.cell).centroid;
    t.region = RegionAt(spec, c.lat(), c.lng());
    const LightLaw& law =
        spec.laws.size() == 1 ? spec.laws[0] : spec.laws[static_cast<std::size_t>(t.region)];
    t.mobility_light = law.Evaluate(t.profile);
    t.residual = residual_field(c);
    if (spec.residual.nugget > 0) {
      CounterRng rng({spec.seed, kNugget, t.cell.id()});
      t.residual += std::sqrt(spec.residual.nugget) * rng.Normal();
    }
    t.radiance = std::max(0.0, t.mobility_light + t.residual);
  });

  // Rasters: every pixel takes the value of the cell containing its center.
  GridGeometry g;
  g.cell_size_deg = spec.raster_cell_deg;
  g.nw_lat = spec.max_lat;
  g.nw_lng = spec.min_lng;
  g.ncols = static_cast<uint32_t>(
      std::ceil((spec.max_lng - spec.min_lng) / spec.raster_cell_deg - 1e-9));
  g.nrows = static_cast<uint32_t>(
      std::ceil((spec.max_lat - spec.min_lat) / spec.raster_cell_deg - 1e-9));
  std::unordered_map<CellId, std::size_t> truth_index;
  for (std::size_t i = 0; i < w.truth.size(); ++i) {
    truth_index.emplace(w.truth[i].cell, i);
  }
  w.light = LightRaster(g, 0.0);
  w.mobility_light = LightRaster(g, 0.0);
  ParallelFor(g.nrows, [&](std::size_t row) {
    for (uint32_t col = 0; col < g.ncols; ++col) {
      const CellId c = CellId::FromLatLng(
          g.PixelCenter(static_cast<uint32_t>(row), col), spec.level);
      auto it = truth_index.find(c);
      if (it == truth_index.end()) continue;
      const CellTruth& t = w.truth[it->second];
      w.light.at(static_cast<uint32_t>(row), col) = t.radiance;
      w.mobility_light.at(static_cast<uint32_t>(row), col) =
          std::max(0.0, t.mobility_light);
    }
  });

  // Countries, regions and GDP.
  std::map<std::string, std::string> country_region;
  const double dlat = (spec.max_lat - spec.min_lat) / spec.country_rows;
  const double dlng = (spec.max_lng - spec.min_lng) / spec.country_cols;
  for (int r = 0; r < spec.country_rows; ++r) {
    for (int c = 0; c < spec.country_cols; ++c) {
      const double lat0 = spec.min_lat + r * dlat + spec.coast_inset_deg;
      const double lat1 = spec.min_lat + (r + 1) * dlat - spec.coast_inset_deg;
      const double lng0 = spec.min_lng + c * dlng + spec.coast_inset_deg;
      const double lng1 = spec.min_lng + (c + 1) * dlng - spec.coast_inset_deg;
      AdminPolygon poly;
      poly.id = CountryId(r, c);
      poly.name = "Country " + poly.id;
      poly.rings.push_back({LatLng(lat0, lng0), LatLng(lat0, lng1),
                            LatLng(lat1, lng1), LatLng(lat1, lng0),
                            LatLng(lat0, lng0)});
      const int region = (r * spec.region_rows / spec.country_rows) *
                             spec.region_cols +
                         c * spec.region_cols / spec.country_cols;
      country_region[poly.id] = RegionId(region);
      w.countries.push_back(std::move(poly));
    }
  }
  std::vector<Region> regions;
  for (int r = 0; r < spec.n_regions(); ++r) {
    regions.push_back({RegionId(r), "Region " + std::to_string(r)});
  }
  w.regions = RegionTable(std::move(regions), country_region);
  w.gdp.resize(w.countries.size());
  ParallelFor(w.countries.size(), [&](std::size_t i) {
    const AdminPolygon& poly = w.countries[i];
    double gdp = spec.gdp_per_light * TotalLightInPolygon(w.mobility_light, poly);
    if (spec.gdp_noise > 0) {
      CounterRng rng({spec.seed, kGdp, static_cast<uint64_t>(i)});
      gdp *= std::exp(spec.gdp_noise * rng.Normal());
    }
    w.gdp[i] = {poly.id, gdp, country_region.at(poly.id)};
  });
  return w;
}

void ForEachWorldTrip(const World& world,
                      const std::function<void(const RawTrip&)>& sink) {
  const auto [lo, hi] = TripWindow(world.spec.year);
  const uint64_t span = static_cast<uint64_t>(hi - lo);
  for (const PairCount& p : world.pairs) {
    for (uint64_t k = 0; k < p.n; ++k) {
      CounterRng rng({world.spec.seed, kTrips, p.a.id(), p.b.id(), k});
      const int64_t ts = lo + static_cast<int64_t>(rng.Below(span));
      const LatLng origin = PointInCell(p.a, rng);
      const LatLng dest = PointInCell(p.b, rng);
      sink(RawTrip{origin, dest, ts});
    }
  }
}

FlowCounts TrueFlowCounts(const World& world, const IntervalScheme& scheme) {
  FlowCounts counts;
  const auto [lo, hi] = TripWindow(world.spec.year);
  const uint64_t span = static_cast<uint64_t>(hi - lo);
  for (const PairCount& p : world.pairs) {
    if (scheme.kind == IntervalKind::kAnnual) {
      if (scheme.year == world.spec.year) {
        counts[{p.a, p.b, IntervalId::Annual(scheme.year)}] += p.n;
      }
      continue;
    }
    for (uint64_t k = 0; k < p.n; ++k) {
      CounterRng rng({world.spec.seed, kTrips, p.a.id(), p.b.id(), k});
      const int64_t ts = lo + static_cast<int64_t>(rng.Below(span));
      if (auto t = scheme.Classify(ts)) counts[{p.a, p.b, *t}] += 1;
    }
  }
  return counts;
}

void WriteWorld(const World& world, const std::string& dir, bool write_trips) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "truth");
  const fs::path root(dir);
  if (write_trips) {
    TextWriter out((root / "trips.csv.gz").string());
    WriteTripsHeader(out);
    ForEachWorldTrip(world, [&](const RawTrip& t) { WriteTrip(out, t); });
    out.Close();
  }
  WriteLgrid(world.light, (root / "light.lgrid").string());
  WritePolygons(world.countries, (root / "countries.geojson").string());
  WriteRegionTable(world.regions, (root / "regions.csv").string());
  WriteGdpTable(world.gdp, (root / "gdp.csv").string());

  {
    TextWriter out((root / "truth" / "spec.txt").string());
    out.Write(world.spec.Serialize());
    out.Close();
  }
  {
    TextWriter out((root / "truth" / "cells.csv").string());
    out.WriteLine(
        "cell,region,out_flow,self_flow,median_trip_km,total_trip_km,in_flow,"
        "mobility_light,residual,radiance");
    for (const CellTruth& t : world.truth) {
      out.WriteLine(t.cell.ToString() + "," + RegionId(t.region) + "," +
                    FormatDouble(t.profile.out_flow) + "," +
                    FormatDouble(t.profile.self_flow) + "," +
                    FormatDouble(t.profile.median_trip_km) + "," +
                    FormatDouble(t.profile.total_trip_km) + "," +
                    FormatDouble(t.profile.in_flow) + "," +
                    FormatDouble(t.mobility_light) + "," +
                    FormatDouble(t.residual) + "," + FormatDouble(t.radiance));
    }
    out.Close();
  }
  {
    std::vector<FlowRecord> records;
    const IntervalId annual = IntervalId::Annual(world.spec.year);
    for (const PairCount& p : world.pairs) {
      records.push_back({p.a, p.b, annual, static_cast<double>(p.n)});
    }
    WriteFlows(records, (root / "truth" / "flows.csv").string());
  }
  WriteLgrid(world.mobility_light,
             (root / "truth" / "mobility_light.lgrid").string());
}

LeakageData LeakageField(const LeakageSpec& spec) {
  if (!(spec.min_lat < spec.max_lat) || !(spec.min_lng < spec.max_lng) ||
      !(spec.spacing_deg > 0)) {
    throw InvalidArgumentError("bad leakage field box");
  }
  LeakageData d;
  std::unordered_set<CellId> seen;
  for (double lat = spec.min_lat + spec.spacing_deg / 2; lat < spec.max_lat;
       lat += spec.spacing_deg) {
    for (double lng = spec.min_lng + spec.spacing_deg / 2; lng < spec.max_lng;
         lng += spec.spacing_deg) {
      const CellId c = CellId::FromLatLng(LatLng(lat, lng), spec.level);
      if (seen.insert(c).second) d.cells.push_back(c);
    }
  }
  std::sort(d.cells.begin(), d.cells.end());
  const std::size_t n = d.cells.size();
  for (const CellId& c : d.cells) d.coords.push_back(GetCellGeometry(c).centroid);
  d.x.resize(static_cast<Eigen::Index>(n), 4);
  d.y.resize(static_cast<Eigen::Index>(n));
  std::vector<SmoothField> features;
  for (uint64_t k = 0; k < 4; ++k) {
    features.emplace_back(spec.seed, kLeakFeature + k, spec.feature_range_km, 1.0);
  }
  const SmoothField target(spec.seed, kLeakTarget, spec.range_km, spec.variance);
  ParallelFor(n, [&](std::size_t i) {
    const Eigen::Index r = static_cast<Eigen::Index>(i);
    for (int k = 0; k < 4; ++k) d.x(r, k) = features[static_cast<std::size_t>(k)](d.coords[i]);
    switch (spec.target) {
      case LeakageSpec::Target::kSmooth:
        d.y(r) = target(d.coords[i]);
        break;
      case LeakageSpec::Target::kWhite: {
        CounterRng rng({spec.seed, kLeakWhite, d.cells[i].id()});
        d.y(r) = std::sqrt(spec.variance) * rng.Normal();
        break;
      }
      case LeakageSpec::Target::kZero:
        d.y(r) = 0;
        break;
    }
  });
  return d;
}

}  // namespace nightlights
