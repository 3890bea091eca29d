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

// Variograms, ordinary kriging and regression-kriging cross-validation.

#ifndef NIGHTLIGHTS_KRIGING_H_
#define NIGHTLIGHTS_KRIGING_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "nightlights/models.h"
#include "nightlights/sphere_grid.h"

namespace nightlights {

struct EmpiricalVariogram {
  std::vector<double> edges_km;  // n_bins + 1 ascending edges from 0
  std::vector<double> mean_lag_km;
  std::vector<double> gamma;
  std::vector<uint64_t> pairs;

  std::size_t bins() const { return gamma.size(); }
  bool empty(std::size_t bin) const { return pairs[bin] == 0; }
  std::size_t nonempty_bins() const;
};

// Pairs at great-circle distance in [0, max_lag_km) are binned into n_bins
// equal-width bins; γ = Σ(zi − zj)² / (2·pairs). Requires at least 2 points.
EmpiricalVariogram ComputeEmpiricalVariogram(std::span<const LatLng> points,
                                             std::span<const double> values,
                                             double max_lag_km, int n_bins);

struct VariogramModel {
  enum class Kind { kSpherical, kExponential };
  Kind kind = Kind::kSpherical;
  double nugget = 0;
  double psill = 0;  // partial sill
  double range_km = 1;

  double sill() const { return nugget + psill; }
  // γ(h) for h >= 0 with γ(0) = nugget. The exponential model uses
  // psill·(1 − exp(−h / range)).
  double Gamma(double h_km) const;
  // Covariance used by the kriging system: sill at h = 0 and sill − γ(h)
  // elsewhere.
  double Covariance(double h_km) const;
  void Validate() const;
};
std::string_view VariogramKindName(VariogramModel::Kind kind);
VariogramModel::Kind ParseVariogramKind(std::string_view name);

// Weighted least-squares objective Σ w·(γ_i − γ_model(h_i))² over nonempty
// bins, with w = pairs / h². Lags below 1e-9 km are clamped to avoid
// infinite weights.
double VariogramObjective(const EmpiricalVariogram& ev,
                          const VariogramModel& model);

struct VariogramFit {
  VariogramModel model;
  double objective = 0;
  bool degenerate = false;  // all γ zero; pure-nugget model returned
};

// Requires at least 3 nonempty bins. Block coordinate descent: for a given
// range the optimal nonnegative (nugget, psill) pair is solved exactly; the
// range is scanned on a log grid and refined by golden-section search from
// the best grid points.
VariogramFit FitVariogram(const EmpiricalVariogram& ev,
                          VariogramModel::Kind kind);

struct KrigingConfig {
  double window_deg = 7.0;
  int max_neighbors = 64;
  double block_size_deg = 1.0;
  bool buffered = true;

  void Validate() const;
};

struct KrigingWeights {
  std::vector<std::size_t> samples;  // indices into the sample list
  std::vector<double> weights;
  double lagrange = 0;
  bool jittered = false;
  bool inverse_distance = false;  // fallback used
};

// Ordinary-kriging weights of `samples` for `target`. Solves the (m+1)
// bordered covariance system; a singular system is retried once with the
// diagonal raised by 1e-10·sill, then falls back to inverse-distance weights.
KrigingWeights SolveKrigingWeights(const Vec3& target,
                                   std::span<const Vec3> samples,
                                   const VariogramModel& model);

struct KrigingStats {
  std::size_t jittered = 0;
  std::size_t inverse_distance = 0;
};

// Kriged residual per target. A target's window is the window_deg square
// centered on its block; at most max_neighbors nearest in-window samples are
// used. Throws InvalidArgumentError when a window holds no sample.
std::vector<double> KrigeResiduals(std::span<const LatLng> targets,
                                   std::span<const LatLng> sample_points,
                                   std::span<const double> residuals,
                                   const VariogramModel& model,
                                   const KrigingConfig& cfg,
                                   KrigingStats* stats = nullptr);

struct RegressionKrigingOptions {
  KrigingConfig kriging;
  ModelSpec trend;  // linear by default
  VariogramModel::Kind variogram = VariogramModel::Kind::kSpherical;
  double max_lag_km = 300;
  int n_bins = 15;
  std::size_t max_variogram_points = 2000;
  // Keep per-block training row lists for inspection.
  bool record_training = false;
};

struct RkBlock {
  BlockKey block;
  std::vector<Eigen::Index> test_rows;
  std::vector<Eigen::Index> training_rows;  // only when recorded
  bool skipped = false;
  std::string note;
  VariogramModel variogram;
};

struct RkResult {
  CvReport rk;     // one "fold" per evaluated block
  CvReport trend;  // trend-only errors on the same rows
  Eigen::VectorXd rk_predictions;     // NaN for rows of skipped blocks
  Eigen::VectorXd trend_predictions;  // NaN for rows of skipped blocks
  std::vector<RkBlock> blocks;        // sorted by block key
  KrigingStats kriging_stats;
  std::size_t skipped_blocks = 0;
};

// Regression-kriging evaluated block by block: for each populated block the
// training set is every row in the window_deg square centered on the block,
// minus the block and its 8 neighbors when buffered. The trend is fit on the
// training rows, a variogram is fit to the training residuals and the kriged
// residual is added to the trend. Blocks whose training set cannot support a
// fit are skipped and reported.
RkResult RegressionKrigeCv(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                           std::span<const LatLng> coords,
                           const RegressionKrigingOptions& options,
                           uint64_t seed);

// Variogram CSV: "lag_km,gamma,pairs" (mean lag per nonempty bin).
void WriteVariogramCsv(const EmpiricalVariogram& ev, const std::string& path);
// Single-line record such as
// {"kind": "spherical", "nugget": 0.1, "psill": 1, "range_km": 50}.
std::string FormatVariogramModel(const VariogramModel& model);

// Predictions CSV: "cell,predicted_radiance", sorted by cell.
void WritePredictions(std::span<const CellId> cells,
                      std::span<const double> values, const std::string& path);
std::vector<std::pair<CellId, double>> ReadPredictions(const std::string& path);

}  // namespace nightlights

#endif  // NIGHTLIGHTS_KRIGING_H_
