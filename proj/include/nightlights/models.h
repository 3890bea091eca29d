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

// Model selection, cross-validation and model files.

#ifndef NIGHTLIGHTS_MODELS_H_
#define NIGHTLIGHTS_MODELS_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "nightlights/forest.h"
#include "nightlights/linear.h"
#include "nightlights/sphere_grid.h"

namespace nightlights {

enum class ModelKind { kLinear, kForest };
std::string_view ModelKindName(ModelKind kind);
ModelKind ParseModelKind(std::string_view name);  // "linear" | "forest"

struct ModelSpec {
  ModelKind kind = ModelKind::kLinear;
  ForestParams forest;
  // Fit on log1p(y) and map predictions back with expm1.
  bool log_target = false;
};

// A fitted model of either kind.
struct TrainedModel {
  ModelKind kind = ModelKind::kLinear;
  bool log_target = false;
  std::vector<std::string> columns;
  LinearModel linear;
  ForestModel forest;

  Eigen::VectorXd Predict(const Eigen::MatrixXd& x) const;
};

TrainedModel TrainModel(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        const ModelSpec& spec, uint64_t seed,
                        std::span<const std::string> columns = {});

// Model file: magic "LFM1", u32 version, u8 kind, then the kind's payload,
// all little-endian.
void WriteModel(const TrainedModel& model, const std::string& path);
TrainedModel ReadModel(const std::string& path);

// Spatial blocks of block_size_deg on a side, keyed by floor(lat / size) and
// floor((lng + 180) / size); the longitude index wraps around.
struct BlockKey {
  int lat = 0;
  int lng = 0;
  friend auto operator<=>(const BlockKey&, const BlockKey&) = default;
};
BlockKey BlockOf(const LatLng& p, double block_size_deg);
int LngBlockCount(double block_size_deg);
// True when the blocks are equal or share an edge or corner.
bool BlocksAdjacent(const BlockKey& a, const BlockKey& b,
                    double block_size_deg);

struct FoldScheme {
  enum class Kind { kRandomK, kBlock, kBlockBuffered };
  Kind kind = Kind::kRandomK;
  int k = 5;
  double block_size_deg = 1.0;

  void Validate() const;
};
std::string_view FoldKindName(FoldScheme::Kind kind);
// "random" | "random-k" | "block" | "block-buffered"
FoldScheme::Kind ParseFoldKind(std::string_view name);

// Fold index per row. random_k shuffles rows with a seeded stream and deals
// them round-robin; the block schemes order populated blocks by a seeded hash
// and deal whole blocks round-robin. Throws InvalidArgumentError when a block
// scheme finds fewer than k populated blocks or coords are missing.
std::vector<int> AssignFolds(std::size_t n, std::span<const LatLng> coords,
                             const FoldScheme& scheme, uint64_t seed);

// Rows usable for training when `fold` is held out. The buffered scheme also
// drops every row whose block is adjacent to a held-out block.
std::vector<Eigen::Index> TrainingRows(std::span<const int> folds, int fold,
                                       std::span<const LatLng> coords,
                                       const FoldScheme& scheme);

struct CvReport {
  std::vector<std::size_t> fold_sizes;
  std::vector<double> fold_mae;
  std::vector<double> fold_mse;
  double mae = 0;  // row-weighted mean of fold MAEs
  double mse = 0;
  std::size_t rows = 0;
};

struct CvResult {
  CvReport report;
  Eigen::VectorXd predictions;  // held-out prediction per row
  std::vector<int> folds;
};

// MAE/MSE are measured on held-out rows only. Predictions are not clamped.
CvResult CrossValidate(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       std::span<const LatLng> coords, const ModelSpec& spec,
                       const FoldScheme& scheme, uint64_t seed);

// Builds a report from held-out predictions grouped by fold id; rows with a
// negative fold id are ignored.
CvReport MakeCvReport(const Eigen::VectorXd& y, const Eigen::VectorXd& pred,
                      std::span<const int> folds, int n_folds);

// CvReport CSV: "fold,rows,mae,mse" with a final "all" row.
void WriteCvReport(const CvReport& report, const std::string& path);
std::string FormatCvReport(const CvReport& report, std::string_view title);

struct RegionalFit {
  std::string region;
  std::size_t rows = 0;
  TrainedModel linear;
  TrainedModel forest;
  CvReport linear_cv;
  CvReport forest_cv;
};

struct RegionalResult {
  std::vector<RegionalFit> fits;  // sorted by region id
  std::vector<std::string> warnings;
};

// Independent linear and forest models per region, each evaluated with
// random k-fold CV under the same seed. A region with fewer than
// k * min_leaf rows is skipped and named in `warnings`. Throws
// InvalidArgumentError when `regions` is empty or misaligned with x.
RegionalResult FitRegional(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                           std::span<const std::string> regions,
                           const ForestParams& forest, int k, uint64_t seed,
                           std::span<const std::string> columns = {});

}  // namespace nightlights

#endif  // NIGHTLIGHTS_MODELS_H_
