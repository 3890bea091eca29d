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

// Synthetic worlds with known ground truth: population centers, gravity
// flows, light laws per region, a correlated residual field, country
// polygons and GDP.

#ifndef NIGHTLIGHTS_SYNTHWORLD_H_
#define NIGHTLIGHTS_SYNTHWORLD_H_

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "nightlights/evalstats.h"
#include "nightlights/features.h"
#include "nightlights/flow_ingest.h"
#include "nightlights/raster.h"
#include "nightlights/regions.h"
#include "nightlights/sphere_grid.h"

namespace nightlights {

// Radiance as a function of a cell's true mobility profile. Features are
// used in units of thousands of trips, km, and thousands of trip-km.
struct LightLaw {
  enum class Kind { kLinear, kSaturating };
  Kind kind = Kind::kLinear;
  double intercept = 1.0;
  // out_flow, self_flow, median_trip_km, total_trip_km
  std::array<double, 4> coef = {4.0, 6.0, 0.5, 0.2};
  // Saturating laws map a linear predictor z to saturation·(1 − exp(−z /
  // saturation)).
  double saturation = 20.0;

  double Evaluate(const MobilityProfile& p) const;
};

// Spatially correlated residual with a spherical-like variogram: smooth part
// of variance `psill` and correlation length `range_km`, plus independent
// per-cell noise of variance `nugget`.
struct ResidualSpec {
  double psill = 0;
  double range_km = 100;
  double nugget = 0;
};

struct WorldSpec {
  uint64_t seed = 1;
  double min_lat = 0, max_lat = 40;
  double min_lng = 0, max_lng = 40;
  int level = 12;
  int year = 2016;

  int n_centers = 120;
  // Peak density (people per km²) is log-uniform in this range.
  double peak_density_min = 500, peak_density_max = 5000;
  double sigma_km_min = 2, sigma_km_max = 6;
  double min_density = 100;  // populated-cell threshold, people per km²

  double trips_per_person = 0.3;   // trips per year
  int destinations = 4;            // nearest populated cells reached
  double distance_scale_km = 5;
  double distance_decay = 2;
  double self_affinity = 1.0;

  int country_rows = 6, country_cols = 6;
  int region_rows = 1, region_cols = 2;
  double coast_inset_deg = 0.05;  // polygons shrink by this on each side

  // One law per region in row-major region order; a single law applies
  // everywhere.
  std::vector<LightLaw> laws = {LightLaw{}};
  ResidualSpec residual;

  double raster_cell_deg = 1.0 / 120.0;
  double gdp_per_light = 1.0;
  double gdp_noise = 0.0;  // log-normal sigma

  // Throws InvalidArgumentError.
  void Validate() const;
  int n_regions() const { return region_rows * region_cols; }
  // "key = value" lines covering every parameter.
  std::string Serialize() const;
};

// Parses Serialize() output (unknown keys are errors).
WorldSpec ParseWorldSpec(const std::string& text);

struct PopulationCenter {
  LatLng location;
  double peak_density;
  double sigma_km;
};

// Annual number of trips from cell a to cell b.
struct PairCount {
  CellId a;
  CellId b;
  uint64_t n;
};

struct CellTruth {
  CellId cell;
  int region = 0;
  MobilityProfile profile;
  double mobility_light = 0;  // law output
  double residual = 0;
  double radiance = 0;  // max(0, mobility_light + residual)
};

struct World {
  WorldSpec spec;
  std::vector<PopulationCenter> centers;
  std::vector<CellId> populated;  // sorted
  std::vector<double> population;  // per populated cell
  std::vector<PairCount> pairs;   // sorted by (a, b)
  std::vector<CellTruth> truth;   // cells with at least one trip, sorted
  std::vector<AdminPolygon> countries;
  RegionTable regions{std::vector<Region>{},
                      std::map<std::string, std::string>{}};
  std::vector<GdpEntry> gdp;
  LightRaster light;           // observed radiance
  LightRaster mobility_light;  // law output only, no residual
};

// Deterministic given spec.seed. Throws InvalidArgumentError for a
// degenerate spec (no centers, no populated cells, or no trips).
World Generate(const WorldSpec& spec);

std::string RegionId(int region);
std::string CountryId(int row, int col);

// Region index of a location by the region grid (without coastal inset).
int RegionAt(const WorldSpec& spec, double lat, double lng);

// Every trip of the world in (pair, trip index) order. Endpoints lie inside
// the pair's cells and timestamps inside the configured year.
void ForEachWorldTrip(const World& world,
                      const std::function<void(const RawTrip&)>& sink);

// True aggregated counts under `scheme`, equal to aggregating every trip.
FlowCounts TrueFlowCounts(const World& world, const IntervalScheme& scheme);

// Writes trips.csv.gz (when write_trips), light.lgrid, countries.geojson,
// regions.csv, gdp.csv and truth/{spec.txt,cells.csv,flows.csv,
// mobility_light.lgrid} into `dir`.
void WriteWorld(const World& world, const std::string& dir, bool write_trips);

// Smooth zero-mean Gaussian field: seeded white noise on a lattice convolved
// with a Gaussian kernel of length sigma = range_km / 4.31, which matches the
// spherical correlation at half the range. Unit variance before scaling.
class SmoothField {
 public:
  SmoothField(uint64_t seed, uint64_t stream, double range_km,
              double variance);
  double operator()(const LatLng& p) const;

 private:
  uint64_t seed_, stream_;
  double sigma_km_, scale_;
  double step_deg_;
};

struct LeakageSpec {
  enum class Target { kSmooth, kWhite, kZero };
  uint64_t seed = 1;
  double min_lat = 0, max_lat = 8, min_lng = 0, max_lng = 8;
  int level = 12;
  double spacing_deg = 0.1;  // lattice of sample cells
  Target target = Target::kSmooth;
  double variance = 100;
  double range_km = 150;
  double feature_range_km = 150;
};

struct LeakageData {
  std::vector<CellId> cells;
  std::vector<LatLng> coords;  // cell centroids
  Eigen::MatrixXd x;           // four smooth fields independent of y
  Eigen::VectorXd y;
};

// Target without feature signal, for contrasting random and buffered CV.
LeakageData LeakageField(const LeakageSpec& spec);

}  // namespace nightlights

#endif  // NIGHTLIGHTS_SYNTHWORLD_H_
