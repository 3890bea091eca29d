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

#include "pipeline.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <unordered_map>

#include <openssl/evp.h>

#include "CLI11.hpp"
#include "nightlights/csv.h"
#include "nightlights/features.h"
#include "nightlights/geojson.h"
#include "nightlights/mapgen.h"
#include "nightlights/parallel.h"
#include "nightlights/random.h"
#include "nightlights/raster.h"
#include "nightlights/regions.h"
#include "nightlights/synthworld.h"

namespace nightlights::cli {
namespace fs = std::filesystem;

namespace {

const std::map<std::string, std::set<std::string>>& KnownKeys() {
  static const auto* keys = new std::map<std::string, std::set<std::string>>{
      {"run", {"seed", "threads"}},
      {"paths",
       {"out", "world_dir", "trips", "flows", "raster", "polygons", "gdp",
        "regions"}},
      {"grid", {"level"}},
      {"intervals", {"scheme", "year", "dataset"}},
      {"privacy",
       {"epsilon", "sensitivity", "k_threshold", "declared_delta", "mode"}},
      {"model",
       {"kind", "log_target", "include_in_flow", "n_trees", "max_depth",
        "min_leaf", "features_per_split", "bootstrap"}},
      {"cv", {"scheme", "k", "block_size_deg"}},
      {"kriging",
       {"window_deg", "max_neighbors", "buffered", "variogram", "max_lag_km",
        "n_bins", "max_variogram_points", "trend"}},
      {"regions", {"knn_k"}},
      {"map", {"source"}},
      {"eval", {"p_value"}},
  };
  return *keys;
}

std::string Lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string Join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void RequireInput(const std::string& path) {
  if (!fs::exists(path)) throw MissingInputError(path);
}

void Note(const std::string& text) { std::cerr << text << "\n"; }

// Mean observed radiance per cell: "cell,mean_radiance".
void WriteCellLight(const std::vector<std::pair<CellId, double>>& rows,
                    const std::string& path) {
  TextWriter out(path);
  out.WriteLine("cell,mean_radiance");
  for (const auto& [cell, v] : rows) {
    out.WriteLine(cell.ToString() + "," + FormatDouble(v));
  }
  out.Close();
}

std::unordered_map<CellId, double> ReadCellLight(const std::string& path) {
  RequireInput(path);
  LineReader in(path);
  std::string line;
  if (!in.Next(&line) || Trim(line) != "cell,mean_radiance") {
    throw FormatError(path, 1, "expected header 'cell,mean_radiance'");
  }
  std::unordered_map<CellId, double> out;
  while (in.Next(&line)) {
    if (Trim(line).empty()) continue;
    const auto f = SplitFields(line);
    if (f.size() != 2) throw FormatError(path, in.line_number(), "expected 2 fields");
    CellId cell;
    try {
      cell = CellId::FromString(Trim(f[0]));
    } catch (const Error& e) {
      throw FormatError(path, in.line_number(), e.what());
    }
    out[cell] = ParseDouble(Trim(f[1]), path, in.line_number());
  }
  return out;
}

// Cells with both a mobility profile and an observed mean radiance.
struct TrainingData {
  std::vector<CellId> cells;
  std::vector<LatLng> coords;
  std::vector<std::string> columns;
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

TrainingData LoadTrainingData(const PipelineConfig& cfg) {
  const std::string features_path = Join(cfg.paths.out, "features.csv");
  const std::string light_path = Join(cfg.paths.out, "cell_light.csv");
  RequireInput(features_path);
  RequireInput(light_path);
  const std::vector<MobilityProfile> profiles = ReadProfiles(features_path);
  const auto light = ReadCellLight(light_path);
  std::vector<MobilityProfile> kept;
  std::vector<double> y;
  for (const MobilityProfile& p : profiles) {
    auto it = light.find(p.cell);
    if (it == light.end()) continue;
    kept.push_back(p);
    y.push_back(it->second);
  }
  if (kept.empty()) {
    throw ValidationError("no cell has both mobility features and light");
  }
  ProfileMatrix pm = MakeProfileMatrix(kept, cfg.include_in_flow);
  TrainingData d;
  d.cells = pm.cells;
  d.columns = pm.columns;
  d.x = std::move(pm.x);
  d.y = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  d.coords.reserve(d.cells.size());
  for (const CellId& c : d.cells) d.coords.push_back(GetCellGeometry(c).centroid);
  return d;
}

void WriteMetrics(const std::vector<std::pair<std::string, std::string>>& rows,
                  const std::string& path) {
  TextWriter out(path);
  out.WriteLine("metric,value");
  for (const auto& [k, v] : rows) out.WriteLine(k + "," + v);
  out.Close();
}

int Exit(int code, const std::string& message) {
  std::cerr << "error: " << message << "\n";
  return code;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

Config Config::Load(const std::string& path) {
  RequireInput(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError(path);
  std::ostringstream text;
  text << in.rdbuf();
  return Parse(text.str(), path);
}

Config Config::Parse(std::string_view text, const std::string& source) {
  Config c;
  std::string section = "run";
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = Trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ValidationError(source + ":" + std::to_string(line_no) +
                              ": malformed section header");
      }
      section = Lower(Trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError(source + ":" + std::to_string(line_no) +
                            ": expected key = value");
    }
    std::string key(Trim(line.substr(0, eq)));
    std::string value(Trim(line.substr(eq + 1)));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty()) {
      throw ValidationError(source + ":" + std::to_string(line_no) +
                            ": empty key");
    }
    c.values_[section + "." + key] = value;
  }
  return c;
}

void Config::SetAssignment(std::string_view assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string_view::npos || dot == std::string_view::npos || dot > eq ||
      dot == 0) {
    throw ValidationError("expected section.key=value, got '" +
                          std::string(assignment) + "'");
  }
  std::string key(Trim(assignment.substr(0, eq)));
  const auto d = key.find('.');
  key = Lower(key.substr(0, d)) + key.substr(d);
  Set(key, std::string(Trim(assignment.substr(eq + 1))));
}

void Config::Set(const std::string& key, const std::string& value) {
  values_[key] = value;
}

std::optional<std::string> Config::Get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string Config::GetOr(const std::string& key,
                          const std::string& fallback) const {
  return Get(key).value_or(fallback);
}

double Config::GetDouble(const std::string& key, double fallback) const {
  auto v = Get(key);
  if (!v) return fallback;
  try {
    return ParseDouble(*v, key, 0);
  } catch (const Error&) {
    throw ValidationError(key + ": expected a number, got '" + *v + "'");
  }
}

int64_t Config::GetInt(const std::string& key, int64_t fallback) const {
  auto v = Get(key);
  if (!v) return fallback;
  try {
    return ParseInt(*v, key, 0);
  } catch (const Error&) {
    throw ValidationError(key + ": expected an integer, got '" + *v + "'");
  }
}

bool Config::GetBool(const std::string& key, bool fallback) const {
  auto v = Get(key);
  if (!v) return fallback;
  const std::string s = Lower(*v);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ValidationError(key + ": expected true or false, got '" + *v + "'");
}

std::map<std::string, std::string> Config::Section(
    const std::string& section) const {
  std::map<std::string, std::string> out;
  const std::string prefix = section + ".";
  for (auto it = values_.lower_bound(prefix);
       it != values_.end() && it->first.starts_with(prefix); ++it) {
    out[it->first.substr(prefix.size())] = it->second;
  }
  return out;
}

uint64_t PipelineConfig::RequireSeed(std::string_view stage) const {
  if (!seed) {
    throw ValidationError(std::string(stage) +
                          " is stochastic and needs a seed (--seed or run.seed)");
  }
  return *seed;
}

PipelineConfig Resolve(const Config& config) {
  PipelineConfig cfg;
  cfg.raw = config;
  for (const auto& [key, value] : config.values()) {
    const auto dot = key.find('.');
    const std::string section = key.substr(0, dot);
    const std::string name = key.substr(dot + 1);
    if (section == "world") continue;  // checked by the world spec parser
    auto it = KnownKeys().find(section);
    if (it == KnownKeys().end()) {
      throw ValidationError("unknown config section [" + section + "]");
    }
    if (!it->second.contains(name)) {
      throw ValidationError("unknown config key " + key);
    }
  }

  if (auto s = config.Get("run.seed")) {
    try {
      const int64_t v = ParseInt(*s, "run.seed", 0);
      if (v < 0) throw ValidationError("run.seed must be >= 0");
      cfg.seed = static_cast<uint64_t>(v);
    } catch (const FormatError&) {
      throw ValidationError("run.seed: expected an integer, got '" + *s + "'");
    }
  }
  cfg.threads = static_cast<int>(config.GetInt("run.threads", 0));
  if (cfg.threads < 0) throw ValidationError("run.threads must be >= 0");

  Paths& p = cfg.paths;
  p.out = config.GetOr("paths.out", "out");
  p.world_dir = config.GetOr("paths.world_dir", Join(p.out, "world"));
  p.trips = config.GetOr("paths.trips", Join(p.world_dir, "trips.csv.gz"));
  p.flows = config.GetOr("paths.flows", Join(p.out, "flows.csv"));
  p.raster = config.GetOr("paths.raster", Join(p.world_dir, "light.lgrid"));
  p.polygons =
      config.GetOr("paths.polygons", Join(p.world_dir, "countries.geojson"));
  p.gdp = config.GetOr("paths.gdp", Join(p.world_dir, "gdp.csv"));
  p.regions = config.GetOr("paths.regions", Join(p.world_dir, "regions.csv"));

  cfg.level = static_cast<int>(config.GetInt("grid.level", 12));
  if (cfg.level != 12 && cfg.level != 13) {
    throw ValidationError("grid.level must be 12 or 13");
  }

  const std::string scheme = Lower(config.GetOr("intervals.scheme", "annual"));
  if (scheme == "annual") {
    cfg.scheme.kind = IntervalKind::kAnnual;
  } else if (scheme == "weekly") {
    cfg.scheme.kind = IntervalKind::kWeekly;
  } else {
    throw ValidationError("intervals.scheme must be annual or weekly");
  }
  cfg.scheme.year = static_cast<int>(config.GetInt("intervals.year", 2016));
  cfg.dataset = config.GetOr(
      "intervals.dataset",
      cfg.scheme.kind == IntervalKind::kAnnual ? "annual" : "all-weeks");
  if ((cfg.dataset == "annual") != (cfg.scheme.kind == IntervalKind::kAnnual)) {
    throw ValidationError("intervals.dataset '" + cfg.dataset +
                          "' does not match intervals.scheme '" + scheme + "'");
  }
  try {
    NamedIntervals(cfg.dataset, cfg.scheme.year);
  } catch (const InvalidArgumentError& e) {
    throw ValidationError(e.what());
  }

  PrivacyParams& pp = cfg.privacy;
  pp.epsilon = config.GetDouble("privacy.epsilon", pp.epsilon);
  pp.sensitivity = config.GetDouble("privacy.sensitivity", pp.sensitivity);
  pp.k_threshold = config.GetInt("privacy.k_threshold", pp.k_threshold);
  pp.declared_delta = config.GetDouble("privacy.declared_delta", pp.declared_delta);
  const std::string mode = Lower(config.GetOr("privacy.mode", "post-noise"));
  if (mode == "post-noise") {
    pp.mode = ThresholdMode::kPostNoise;
  } else if (mode == "pre-noise") {
    pp.mode = ThresholdMode::kPreNoise;
  } else {
    throw ValidationError("privacy.mode must be post-noise or pre-noise");
  }

  try {
    pp.Validate();
    cfg.model.kind = ParseModelKind(Lower(config.GetOr("model.kind", "forest")));
    cfg.model.log_target = config.GetBool("model.log_target", false);
    cfg.include_in_flow = config.GetBool("model.include_in_flow", false);
    ForestParams& fp = cfg.model.forest;
    fp.n_trees = static_cast<int>(config.GetInt("model.n_trees", fp.n_trees));
    fp.max_depth = static_cast<int>(config.GetInt("model.max_depth", fp.max_depth));
    fp.min_leaf = static_cast<int>(config.GetInt("model.min_leaf", fp.min_leaf));
    fp.features_per_split = static_cast<int>(
        config.GetInt("model.features_per_split", fp.features_per_split));
    fp.bootstrap = config.GetBool("model.bootstrap", fp.bootstrap);
    fp.Validate();

    cfg.folds.kind = ParseFoldKind(Lower(config.GetOr("cv.scheme", "block-buffered")));
    cfg.folds.k = static_cast<int>(config.GetInt("cv.k", 5));
    cfg.folds.block_size_deg = config.GetDouble("cv.block_size_deg", 1.0);
    cfg.folds.Validate();

    RegressionKrigingOptions& ko = cfg.kriging;
    ko.kriging.window_deg = config.GetDouble("kriging.window_deg", 7.0);
    ko.kriging.max_neighbors =
        static_cast<int>(config.GetInt("kriging.max_neighbors", 64));
    ko.kriging.block_size_deg = cfg.folds.block_size_deg;
    ko.kriging.buffered = config.GetBool("kriging.buffered", true);
    ko.kriging.Validate();
    ko.variogram =
        ParseVariogramKind(Lower(config.GetOr("kriging.variogram", "spherical")));
    ko.max_lag_km = config.GetDouble("kriging.max_lag_km", ko.max_lag_km);
    ko.n_bins = static_cast<int>(config.GetInt("kriging.n_bins", ko.n_bins));
    const int64_t max_points = config.GetInt(
        "kriging.max_variogram_points",
        static_cast<int64_t>(ko.max_variogram_points));
    if (max_points < 10 || !(ko.max_lag_km > 0) || ko.n_bins < 1) {
      throw ValidationError("bad kriging variogram settings");
    }
    ko.max_variogram_points = static_cast<std::size_t>(max_points);
    ko.trend.kind = ParseModelKind(Lower(config.GetOr("kriging.trend", "linear")));
    ko.trend.forest = cfg.model.forest;
  } catch (const ValidationError&) {
    throw;
  } catch (const InvalidArgumentError& e) {
    throw ValidationError(e.what());
  }

  const int64_t knn = config.GetInt("regions.knn_k", 5);
  if (knn < 1) throw ValidationError("regions.knn_k must be >= 1");
  cfg.knn_k = static_cast<std::size_t>(knn);

  const std::string source = Lower(config.GetOr("map.source", "train"));
  if (source == "train") {
    cfg.map_source = MapSource::kTrain;
  } else if (source == "krige") {
    cfg.map_source = MapSource::kKrige;
  } else {
    throw ValidationError("map.source must be train or krige");
  }

  const std::string pv = Lower(config.GetOr("eval.p_value", "t"));
  if (pv == "t") {
    cfg.p_value = PValueMode::kTApproximation;
  } else if (pv == "permutation") {
    cfg.p_value = PValueMode::kPermutation;
  } else {
    throw ValidationError("eval.p_value must be t or permutation");
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Stages

Artifacts RunSimulate(const PipelineConfig& cfg) {
  std::ostringstream text;
  const auto world = cfg.raw.Section("world");
  if (!world.contains("seed")) text << "seed = " << cfg.RequireSeed("simulate") << "\n";
  for (const auto& [k, v] : world) text << k << " = " << v << "\n";
  WorldSpec spec;
  try {
    spec = ParseWorldSpec(text.str());
  } catch (const Error& e) {
    throw ValidationError(e.what());
  }
  const World w = Generate(spec);
  WriteWorld(w, cfg.paths.world_dir, true);
  uint64_t trips = 0;
  for (const PairCount& p : w.pairs) trips += p.n;
  Note("simulate: " + std::to_string(w.populated.size()) + " populated cells, " +
       std::to_string(trips) + " trips");
  const std::string d = cfg.paths.world_dir;
  return {Join(d, "trips.csv.gz"),
          Join(d, "light.lgrid"),
          Join(d, "countries.geojson"),
          Join(d, "regions.csv"),
          Join(d, "gdp.csv"),
          Join(d, "truth/spec.txt"),
          Join(d, "truth/cells.csv"),
          Join(d, "truth/flows.csv"),
          Join(d, "truth/mobility_light.lgrid")};
}

Artifacts RunAggregate(const PipelineConfig& cfg) {
  const uint64_t seed = cfg.RequireSeed("aggregate");
  RequireInput(cfg.paths.trips);
  TripAggregator agg(cfg.level, cfg.scheme);
  ForEachTrip(cfg.paths.trips, [&](const RawTrip& t) { agg.Add(t); });
  const AggregationResult result = agg.Take();
  const std::vector<FlowRecord> records =
      Privatize(result.counts, cfg.privacy, seed);
  fs::create_directories(cfg.paths.out);
  WriteFlows(records, cfg.paths.flows);
  const std::string summary = Join(cfg.paths.out, "aggregate_summary.csv");
  WriteMetrics({{"tuples_before_threshold", std::to_string(result.counts.size())},
                {"tuples_released", std::to_string(records.size())},
                {"trips_outside_year", std::to_string(result.dropped)}},
               summary);
  Note("aggregate: " + std::to_string(records.size()) + " of " +
       std::to_string(result.counts.size()) + " tuples released");
  return {cfg.paths.flows, summary};
}

Artifacts RunFeatures(const PipelineConfig& cfg) {
  RequireInput(cfg.paths.flows);
  const std::vector<FlowRecord> records = ReadFlows(cfg.paths.flows);
  const std::vector<MobilityProfile> profiles =
      BuildProfiles(records, NamedIntervals(cfg.dataset, cfg.scheme.year));
  fs::create_directories(cfg.paths.out);
  const std::string path = Join(cfg.paths.out, "features.csv");
  WriteProfiles(profiles, path, cfg.include_in_flow);
  Note("features: " + std::to_string(profiles.size()) + " cells");
  return {path};
}

Artifacts RunExtractLight(const PipelineConfig& cfg) {
  const std::string features = Join(cfg.paths.out, "features.csv");
  RequireInput(features);
  RequireInput(cfg.paths.raster);
  std::vector<CellId> cells;
  for (const MobilityProfile& p : ReadProfiles(features)) cells.push_back(p.cell);
  const LightRaster raster = ReadRaster(cfg.paths.raster);
  const auto means = MeanLightPerCell(raster, cells);
  std::vector<std::pair<CellId, double>> rows(means.begin(), means.end());
  std::sort(rows.begin(), rows.end());
  const std::string path = Join(cfg.paths.out, "cell_light.csv");
  WriteCellLight(rows, path);
  Note("extract-light: " + std::to_string(rows.size()) + " of " +
       std::to_string(cells.size()) + " cells cover a pixel center");
  return {path};
}

Artifacts RunAssignRegions(const PipelineConfig& cfg) {
  const std::string features = Join(cfg.paths.out, "features.csv");
  RequireInput(features);
  RequireInput(cfg.paths.polygons);
  RequireInput(cfg.paths.regions);
  std::vector<CellId> cells;
  for (const MobilityProfile& p : ReadProfiles(features)) cells.push_back(p.cell);
  const auto polygons = ReadPolygons(cfg.paths.polygons);
  const RegionTable table = ReadRegionTable(cfg.paths.regions);
  AssignmentStats stats;
  const auto assignments =
      AssignRegions(cells, polygons, table, cfg.knn_k, &stats);
  const std::string path = Join(cfg.paths.out, "cell_regions.csv");
  WriteAssignments(assignments, path);
  Note("assign-regions: " + std::to_string(stats.by_containment) +
       " by containment, " + std::to_string(stats.by_hull) + " by hull, " +
       std::to_string(stats.by_knn) + " by nearest neighbors");
  return {path};
}

Artifacts RunTrain(const PipelineConfig& cfg) {
  const uint64_t seed = cfg.RequireSeed("train");
  const TrainingData d = LoadTrainingData(cfg);
  Artifacts written;
  const CvResult cv =
      CrossValidate(d.x, d.y, d.coords, cfg.model, cfg.folds, seed);
  const std::string tag = std::string(ModelKindName(cfg.model.kind)) + "_" +
                          std::string(FoldKindName(cfg.folds.kind));
  const std::string report = Join(cfg.paths.out, "cv_" + tag + ".csv");
  WriteCvReport(cv.report, report);
  written.push_back(report);
  std::cout << FormatCvReport(cv.report, "cv " + tag);

  const std::string predictions = Join(cfg.paths.out, "predictions.csv");
  std::vector<double> held_out(cv.predictions.data(),
                               cv.predictions.data() + cv.predictions.size());
  WritePredictions(d.cells, held_out, predictions);
  written.push_back(predictions);

  const TrainedModel model = TrainModel(d.x, d.y, cfg.model, seed, d.columns);
  const std::string model_path =
      Join(cfg.paths.out, "model_" + std::string(ModelKindName(cfg.model.kind)) + ".lfm");
  WriteModel(model, model_path);
  written.push_back(model_path);

  const std::string assignments = Join(cfg.paths.out, "cell_regions.csv");
  if (fs::exists(assignments)) {
    std::unordered_map<CellId, std::string> region_of;
    for (const auto& a : ReadAssignments(assignments)) region_of[a.cell] = a.region;
    std::vector<std::string> regions;
    regions.reserve(d.cells.size());
    for (const CellId& c : d.cells) {
      auto it = region_of.find(c);
      if (it == region_of.end()) {
        throw ValidationError("cell " + c.ToString() + " has no region in " +
                              assignments);
      }
      regions.push_back(it->second);
    }
    const RegionalResult rr = FitRegional(d.x, d.y, regions, cfg.model.forest,
                                          cfg.folds.k, seed, d.columns);
    for (const std::string& w : rr.warnings) Note("train: " + w);
    const std::string path = Join(cfg.paths.out, "regional_cv.csv");
    TextWriter out(path);
    out.WriteLine("region,rows,linear_mae,linear_mse,forest_mae,forest_mse");
    for (const RegionalFit& f : rr.fits) {
      out.WriteLine(f.region + "," + std::to_string(f.rows) + "," +
                    FormatDouble(f.linear_cv.mae) + "," +
                    FormatDouble(f.linear_cv.mse) + "," +
                    FormatDouble(f.forest_cv.mae) + "," +
                    FormatDouble(f.forest_cv.mse));
    }
    out.Close();
    written.push_back(path);
  }
  return written;
}

Artifacts RunKrige(const PipelineConfig& cfg) {
  const uint64_t seed = cfg.RequireSeed("krige");
  const TrainingData d = LoadTrainingData(cfg);
  const RkResult rk =
      RegressionKrigeCv(d.x, d.y, d.coords, cfg.kriging, seed);
  Artifacts written;
  const std::string rk_path = Join(cfg.paths.out, "rk_cv.csv");
  const std::string trend_path = Join(cfg.paths.out, "rk_trend_cv.csv");
  WriteCvReport(rk.rk, rk_path);
  WriteCvReport(rk.trend, trend_path);
  written.push_back(rk_path);
  written.push_back(trend_path);

  std::vector<CellId> cells;
  std::vector<double> values;
  for (std::size_t i = 0; i < d.cells.size(); ++i) {
    const double v = rk.rk_predictions(static_cast<Eigen::Index>(i));
    if (!std::isfinite(v)) continue;
    cells.push_back(d.cells[i]);
    values.push_back(v);
  }
  const std::string pred_path = Join(cfg.paths.out, "rk_predictions.csv");
  WritePredictions(cells, values, pred_path);
  written.push_back(pred_path);

  // Global view of the residual structure under a trend fit on every row.
  const TrainedModel trend = TrainModel(d.x, d.y, cfg.kriging.trend, seed, d.columns);
  const Eigen::VectorXd residual = d.y - trend.Predict(d.x);
  std::vector<std::size_t> rows(d.cells.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  if (rows.size() > cfg.kriging.max_variogram_points) {
    CounterRng rng({seed, 0x76617269ULL});
    Shuffle(std::span<std::size_t>(rows), rng);
    rows.resize(cfg.kriging.max_variogram_points);
    std::sort(rows.begin(), rows.end());
  }
  std::vector<LatLng> pts;
  std::vector<double> vals;
  for (std::size_t r : rows) {
    pts.push_back(d.coords[r]);
    vals.push_back(residual(static_cast<Eigen::Index>(r)));
  }
  const EmpiricalVariogram ev = ComputeEmpiricalVariogram(
      pts, vals, cfg.kriging.max_lag_km, cfg.kriging.n_bins);
  const std::string vg_path = Join(cfg.paths.out, "variogram.csv");
  WriteVariogramCsv(ev, vg_path);
  written.push_back(vg_path);
  if (ev.nonempty_bins() > 0) {
    const VariogramFit fit = FitVariogram(ev, cfg.kriging.variogram);
    const std::string model_path = Join(cfg.paths.out, "variogram_model.json");
    TextWriter out(model_path);
    out.WriteLine(FormatVariogramModel(fit.model));
    out.Close();
    written.push_back(model_path);
  }

  const std::string summary = Join(cfg.paths.out, "krige_summary.csv");
  WriteMetrics({{"rk_mae", FormatDouble(rk.rk.mae)},
                {"rk_mse", FormatDouble(rk.rk.mse)},
                {"trend_mae", FormatDouble(rk.trend.mae)},
                {"trend_mse", FormatDouble(rk.trend.mse)},
                {"blocks", std::to_string(rk.blocks.size())},
                {"skipped_blocks", std::to_string(rk.skipped_blocks)},
                {"jittered_solves", std::to_string(rk.kriging_stats.jittered)},
                {"inverse_distance_fallbacks",
                 std::to_string(rk.kriging_stats.inverse_distance)}},
               summary);
  written.push_back(summary);
  std::cout << FormatCvReport(rk.rk, "regression-kriging")
            << FormatCvReport(rk.trend, "trend only");
  return written;
}

Artifacts RunPredictMap(const PipelineConfig& cfg) {
  const std::string source = cfg.map_source == MapSource::kTrain
                                 ? Join(cfg.paths.out, "predictions.csv")
                                 : Join(cfg.paths.out, "rk_predictions.csv");
  RequireInput(source);
  RequireInput(cfg.paths.raster);
  const auto predictions = ReadPredictions(source);
  const LightRaster observed = ReadRaster(cfg.paths.raster);
  MapProvenance prov;
  prov.dataset = cfg.dataset;
  prov.model_id = cfg.map_source == MapSource::kTrain
                      ? std::string(ModelKindName(cfg.model.kind))
                      : "regression-kriging";
  prov.seed = cfg.RequireSeed("predict-map");
  const PredictedMap map = BuildMap(predictions, observed.geometry(), prov);
  const std::string raster_path = Join(cfg.paths.out, "predicted.lgrid");
  WriteRaster(map.raster, raster_path);
  const std::string prov_path = Join(cfg.paths.out, "predicted_provenance.csv");
  WriteMetrics({{"dataset", map.provenance.dataset},
                {"model_id", map.provenance.model_id},
                {"seed", std::to_string(map.provenance.seed)},
                {"clamped_cells", std::to_string(map.provenance.clamped_cells)}},
               prov_path);
  return {raster_path, prov_path};
}

Artifacts RunDiff(const PipelineConfig& cfg) {
  const std::string predicted_path = Join(cfg.paths.out, "predicted.lgrid");
  RequireInput(cfg.paths.raster);
  RequireInput(predicted_path);
  const LightRaster observed = ReadRaster(cfg.paths.raster);
  const LightRaster predicted = ReadRaster(predicted_path);
  const MapComparison cmp = CompareMaps(observed, predicted);
  const std::string cmp_path = Join(cfg.paths.out, "comparison.csv");
  const std::string diff_path = Join(cfg.paths.out, "difference.lgrid");
  const std::string png_path = Join(cfg.paths.out, "diff.png");
  WriteComparison(cmp, cmp_path);
  WriteRaster(cmp.difference, diff_path);
  WriteDiffImage(observed, predicted, png_path);
  Note("diff: map MAE " + FormatDouble(cmp.mae) + ", MSE " + FormatDouble(cmp.mse));
  return {cmp_path, diff_path, png_path};
}

Artifacts RunEvalGdp(const PipelineConfig& cfg) {
  const std::string predicted_path = Join(cfg.paths.out, "predicted.lgrid");
  RequireInput(cfg.paths.raster);
  RequireInput(predicted_path);
  RequireInput(cfg.paths.polygons);
  RequireInput(cfg.paths.gdp);
  const LightRaster observed = ReadRaster(cfg.paths.raster);
  const LightRaster predicted = ReadRaster(predicted_path);
  const auto polygons = ReadPolygons(cfg.paths.polygons);
  const auto gdp = ReadGdpTable(cfg.paths.gdp);
  const std::vector<NamedMap> maps = {{"observed", &observed},
                                      {"predicted", &predicted}};
  const uint64_t seed =
      cfg.p_value == PValueMode::kPermutation ? cfg.RequireSeed("eval-gdp") : 0;
  const CorrelationReport report =
      CorrelationTable(maps, polygons, gdp, cfg.p_value, seed);
  const std::string csv = Join(cfg.paths.out, "gdp_correlation.csv");
  const std::string txt = Join(cfg.paths.out, "gdp_correlation.txt");
  WriteCorrelationCsv(report, csv);
  const std::string table = FormatCorrelationTable(report);
  TextWriter out(txt);
  out.Write(table);
  out.Close();
  std::cout << table;
  return {csv, txt};
}

Artifacts RunAll(const PipelineConfig& cfg) {
  cfg.RequireSeed("run-all");
  Artifacts all;
  auto add = [&](const Artifacts& a) { all.insert(all.end(), a.begin(), a.end()); };
  const bool external_trips =
      cfg.raw.Has("paths.trips") && fs::exists(cfg.paths.trips);
  if (!external_trips) add(RunSimulate(cfg));
  add(RunAggregate(cfg));
  add(RunFeatures(cfg));
  add(RunExtractLight(cfg));
  add(RunAssignRegions(cfg));
  add(RunTrain(cfg));
  add(RunKrige(cfg));
  add(RunPredictMap(cfg));
  add(RunDiff(cfg));
  add(RunEvalGdp(cfg));
  const std::string manifest = Join(cfg.paths.out, "manifest.csv");
  WriteManifest(cfg, all, manifest);
  all.push_back(manifest);
  return all;
}

// ---------------------------------------------------------------------------
// Manifest

std::string Sha256File(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError(path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 initialisation failed");
  }
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    const std::streamsize got = in.gcount();
    if (got > 0 &&
        EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(got)) != 1) {
      throw Error("SHA-256 update failed");
    }
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest;
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) {
    throw Error("SHA-256 finalisation failed");
  }
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof(byte), "%02x", digest[i]);
    hex += byte;
  }
  return hex;
}

void WriteManifest(const PipelineConfig& cfg, const Artifacts& artifacts,
                   const std::string& path) {
  const fs::path out_dir = fs::absolute(cfg.paths.out).lexically_normal();
  std::vector<std::pair<std::string, std::string>> rows;  // name, full path
  for (const std::string& a : artifacts) {
    const fs::path full = fs::absolute(a).lexically_normal();
    fs::path rel = full.lexically_relative(out_dir);
    const std::string name =
        rel.empty() || rel.string().starts_with("..") ? full.string() : rel.generic_string();
    rows.emplace_back(name, a);
  }
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  TextWriter out(path);
  for (const auto& [key, value] : cfg.raw.values()) {
    if (key == "paths.out" || key == "run.threads") continue;
    out.WriteLine("# " + key + " = " + value);
  }
  out.WriteLine("artifact,sha256,bytes");
  for (const auto& [name, full] : rows) {
    out.WriteLine(name + "," + Sha256File(full) + "," +
                  std::to_string(fs::file_size(full)));
  }
  out.Close();
}

// ---------------------------------------------------------------------------
// Command line

int Main(int argc, char** argv) {
  CLI::App app{"Nighttime-lights maps from aggregated mobility flows"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<int> threads;
  std::string out_dir;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "Configuration file");
  app.add_option("--seed", seed, "Global seed");
  app.add_option("--threads", threads, "Worker thread bound (0 = all cores)");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--set", sets, "Override a setting: section.key=value");

  struct Stage {
    std::string name;
    std::string help;
    Artifacts (*run)(const PipelineConfig&);
  };
  const std::vector<Stage> stages = {
      {"simulate", "Generate a synthetic world", &RunSimulate},
      {"aggregate", "Aggregate trips into privatized flow tuples", &RunAggregate},
      {"features", "Mobility profile per cell", &RunFeatures},
      {"extract-light", "Mean observed radiance per cell", &RunExtractLight},
      {"assign-regions", "Region per cell", &RunAssignRegions},
      {"train", "Cross-validated regression models", &RunTrain},
      {"krige", "Regression-kriging evaluation", &RunKrige},
      {"predict-map", "Rasterize cell predictions", &RunPredictMap},
      {"diff", "Compare predicted and observed maps", &RunDiff},
      {"eval-gdp", "Correlate Total Light with GDP", &RunEvalGdp},
      {"run-all", "Every stage in order plus a manifest", &RunAll},
  };
  std::string model_kind, cv_scheme, map_source, p_value;
  std::vector<CLI::App*> commands;
  for (const Stage& s : stages) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    if (s.name == "train" || s.name == "run-all") {
      sub->add_option("--model", model_kind, "linear | forest");
      sub->add_option("--cv", cv_scheme, "random-k | block | block-buffered");
    }
    if (s.name == "predict-map" || s.name == "run-all") {
      sub->add_option("--source", map_source, "train | krige");
    }
    if (s.name == "eval-gdp" || s.name == "run-all") {
      sub->add_option("--p-value", p_value, "t | permutation");
    }
    commands.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 3;
  }

  try {
    Config config;
    if (!config_path.empty()) config = Config::Load(config_path);
    for (const std::string& s : sets) config.SetAssignment(s);
    if (seed) config.Set("run.seed", std::to_string(*seed));
    if (threads) config.Set("run.threads", std::to_string(*threads));
    if (!out_dir.empty()) config.Set("paths.out", out_dir);
    if (!model_kind.empty()) config.Set("model.kind", model_kind);
    if (!cv_scheme.empty()) config.Set("cv.scheme", cv_scheme);
    if (!map_source.empty()) config.Set("map.source", map_source);
    if (!p_value.empty()) config.Set("eval.p_value", p_value);
    const PipelineConfig cfg = Resolve(config);
    SetMaxThreads(cfg.threads);
    fs::create_directories(cfg.paths.out);
    for (std::size_t i = 0; i < stages.size(); ++i) {
      if (commands[i]->parsed()) {
        for (const std::string& a : stages[i].run(cfg)) Note("wrote " + a);
      }
    }
    return 0;
  } catch (const MissingInputError& e) {
    return Exit(2, e.what());
  } catch (const ValidationError& e) {
    return Exit(3, e.what());
  } catch (const InvalidArgumentError& e) {
    return Exit(3, e.what());
  } catch (const FormatError& e) {
    return Exit(3, e.what());
  } catch (const std::exception& e) {
    return Exit(1, e.what());
  }
}

}  // namespace nightlights::cli
