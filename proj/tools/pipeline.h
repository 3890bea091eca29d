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

// Pipeline configuration and the stages behind each CLI subcommand.

#ifndef NIGHTLIGHTS_TOOLS_PIPELINE_H_
#define NIGHTLIGHTS_TOOLS_PIPELINE_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nightlights/errors.h"
#include "nightlights/evalstats.h"
#include "nightlights/flow_ingest.h"
#include "nightlights/kriging.h"
#include "nightlights/models.h"

namespace nightlights::cli {

// Configuration problems; mapped to exit code 3.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Flat "section.key" -> value store read from an INI-like file:
//
//   # comment
//   [section]
//   key = value
//
// Keys outside any section live in the "run" section.
class Config {
 public:
  // Throws MissingInputError or ValidationError.
  static Config Load(const std::string& path);
  static Config Parse(std::string_view text, const std::string& source);

  // "section.key=value"; throws ValidationError when malformed.
  void SetAssignment(std::string_view assignment);
  void Set(const std::string& key, const std::string& value);

  bool Has(const std::string& key) const { return values_.contains(key); }
  std::optional<std::string> Get(const std::string& key) const;
  std::string GetOr(const std::string& key, const std::string& fallback) const;
  double GetDouble(const std::string& key, double fallback) const;
  int64_t GetInt(const std::string& key, int64_t fallback) const;
  bool GetBool(const std::string& key, bool fallback) const;

  // Entries of one section without the "section." prefix.
  std::map<std::string, std::string> Section(const std::string& section) const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

struct Paths {
  std::string out;
  std::string world_dir;
  std::string trips;
  std::string flows;
  std::string raster;
  std::string polygons;
  std::string gdp;
  std::string regions;
};

enum class MapSource { kTrain, kKrige };

struct PipelineConfig {
  Config raw;
  Paths paths;
  std::optional<uint64_t> seed;
  int threads = 0;
  int level = 12;
  IntervalScheme scheme;
  std::string dataset = "annual";
  PrivacyParams privacy;
  ModelSpec model;
  bool include_in_flow = false;
  FoldScheme folds;
  RegressionKrigingOptions kriging;
  std::size_t knn_k = 5;
  MapSource map_source = MapSource::kTrain;
  PValueMode p_value = PValueMode::kTApproximation;

  // Seed of a stochastic stage; throws ValidationError when none was given.
  uint64_t RequireSeed(std::string_view stage) const;
};

// Resolves defaults and validates every section. Throws ValidationError.
PipelineConfig Resolve(const Config& config);

// Paths written by a stage, as given to the writers.
using Artifacts = std::vector<std::string>;

Artifacts RunSimulate(const PipelineConfig& cfg);
Artifacts RunAggregate(const PipelineConfig& cfg);
Artifacts RunFeatures(const PipelineConfig& cfg);
Artifacts RunExtractLight(const PipelineConfig& cfg);
Artifacts RunAssignRegions(const PipelineConfig& cfg);
Artifacts RunTrain(const PipelineConfig& cfg);
Artifacts RunKrige(const PipelineConfig& cfg);
Artifacts RunPredictMap(const PipelineConfig& cfg);
Artifacts RunDiff(const PipelineConfig& cfg);
Artifacts RunEvalGdp(const PipelineConfig& cfg);
// All stages in order, then the manifest. Simulation runs unless
// paths.trips names an existing input.
Artifacts RunAll(const PipelineConfig& cfg);

// Lowercase hex SHA-256 of a file's bytes.
std::string Sha256File(const std::string& path);

// "artifact,sha256,bytes" rows sorted by artifact path (relative to the
// output directory), preceded by the configuration as "# key = value" lines.
// Settings that cannot change results (output directory, thread count) are
// left out so that equal runs give equal manifests.
void WriteManifest(const PipelineConfig& cfg, const Artifacts& artifacts,
                   const std::string& path);

// Entry point of the nightlights binary; returns the process exit code.
int Main(int argc, char** argv);

}  // namespace nightlights::cli

#endif  // NIGHTLIGHTS_TOOLS_PIPELINE_H_
