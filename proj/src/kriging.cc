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

#include "nightlights/kriging.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <Eigen/LU>

#include "nightlights/csv.h"
#include "nightlights/errors.h"
#include "nightlights/parallel.h"
#include "nightlights/random.h"
#include "nightlights/spatial_index.h"

namespace nightlights {
namespace {

constexpr double kMinLagKm = 1e-9;

double Shape(VariogramModel::Kind kind, double h, double range) {
  if (h <= 0) return 0;
  const double r = h / range;
  if (kind == VariogramModel::Kind::kSpherical) {
    return r >= 1 ? 1.0 : 1.5 * r - 0.5 * r * r * r;
  }
  return -std::expm1(-r);
}

struct Bin {
  double h, g, w;
};

std::vector<Bin> NonemptyBins(const EmpiricalVariogram& ev) {
  std::vector<Bin> bins;
  for (std::size_t i = 0; i < ev.bins(); ++i) {
    if (ev.empty(i)) continue;
    const double h = std::max(ev.mean_lag_km[i], kMinLagKm);
    bins.push_back({h, ev.gamma[i], static_cast<double>(ev.pairs[i]) / (h * h)});
  }
  return bins;
}

double Objective(const std::vector<Bin>& bins, VariogramModel::Kind kind,
                 double nugget, double psill, double range) {
  double sum = 0;
  for (const Bin& b : bins) {
    const double d = b.g - (nugget + psill * Shape(kind, b.h, range));
    sum += b.w * d * d;
  }
  return sum;
}

// Optimal nonnegative (nugget, psill) for a fixed range.
struct Profile {
  double nugget, psill, objective;
};

Profile SolveSills(const std::vector<Bin>& bins, VariogramModel::Kind kind,
                   double range) {
  double sw = 0, swf = 0, swff = 0, swg = 0, swfg = 0;
  for (const Bin& b : bins) {
    const double f = Shape(kind, b.h, range);
    sw += b.w;
    swf += b.w * f;
    swff += b.w * f * f;
    swg += b.w * b.g;
    swfg += b.w * f * b.g;
  }
  std::vector<std::pair<double, double>> candidates = {{0.0, 0.0}};
  const double det = sw * swff - swf * swf;
  if (det > 1e-14 * sw * swff) {
    const double n = (swff * swg - swf * swfg) / det;
    const double s = (sw * swfg - swf * swg) / det;
    if (n >= 0 && s >= 0) candidates.emplace_back(n, s);
  }
  if (swff > 0) candidates.emplace_back(0.0, std::max(0.0, swfg / swff));
  if (sw > 0) candidates.emplace_back(std::max(0.0, swg / sw), 0.0);
  Profile best{0, 0, std::numeric_limits<double>::infinity()};
  for (const auto& [n, s] : candidates) {
    const double obj = Objective(bins, kind, n, s, range);
    if (obj < best.objective) best = {n, s, obj};
  }
  return best;
}

// Indices of samples whose block lies within `half` blocks of `center`,
// grouped by block for fast window queries.
class BlockGrid {
 public:
  BlockGrid(std::span<const LatLng> points, double block_size_deg)
      : size_(block_size_deg), n_lng_(LngBlockCount(block_size_deg)) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      cells_[BlockOf(points[i], size_)].push_back(i);
    }
  }

  const std::map<BlockKey, std::vector<std::size_t>>& blocks() const {
    return cells_;
  }

  // Rows in the (2·half+1)² window around `center`, excluding the
  // (2·exclude+1)² core when exclude >= 0. Sorted ascending.
  std::vector<std::size_t> Window(const BlockKey& center, int half,
                                  int exclude) const {
    std::vector<std::size_t> rows;
    const int span_lng = std::min(2 * half + 1, n_lng_);
    for (int dlat = -half; dlat <= half; ++dlat) {
      for (int k = 0; k < span_lng; ++k) {
        const int dlng = k - half;
        if (exclude >= 0 && std::abs(dlat) <= exclude &&
            std::abs(dlng) <= exclude) {
          continue;
        }
        const BlockKey key{center.lat + dlat,
                           ((center.lng + dlng) % n_lng_ + n_lng_) % n_lng_};
        auto it = cells_.find(key);
        if (it != cells_.end()) {
          rows.insert(rows.end(), it->second.begin(), it->second.end());
        }
      }
    }
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    return rows;
  }

 private:
  double size_;
  int n_lng_;
  std::map<BlockKey, std::vector<std::size_t>> cells_;
};

int HalfWindow(const KrigingConfig& cfg) {
  return static_cast<int>(
      std::floor(cfg.window_deg / cfg.block_size_deg / 2.0 + 1e-9));
}

double Predict(const KrigingWeights& w, std::span<const double> values) {
  double sum = 0;
  for (std::size_t k = 0; k < w.samples.size(); ++k) {
    sum += w.weights[k] * values[w.samples[k]];
  }
  return sum;
}

}  // namespace

std::size_t EmpiricalVariogram::nonempty_bins() const {
  return static_cast<std::size_t>(
      std::count_if(pairs.begin(), pairs.end(), [](uint64_t p) { return p > 0; }));
}

EmpiricalVariogram ComputeEmpiricalVariogram(std::span<const LatLng> points,
                                             std::span<const double> values,
                                             double max_lag_km, int n_bins) {
  if (points.size() != values.size()) {
    throw InvalidArgumentError("points and values differ in length");
  }
  if (points.size() < 2) {
    throw InvalidArgumentError("variogram needs at least 2 points");
  }
  if (!(max_lag_km > 0) || n_bins < 1) {
    throw InvalidArgumentError("variogram needs max_lag > 0 and n_bins >= 1");
  }
  const std::size_t n = points.size();
  const std::size_t nb = static_cast<std::size_t>(n_bins);
  const double width = max_lag_km / n_bins;
  std::vector<Vec3> unit(n);
  for (std::size_t i = 0; i < n; ++i) unit[i] = points[i].ToUnitVector();

  // Per-row partial sums, reduced in row order for a thread-independent
  // result.
  std::vector<double> sq(n * nb, 0.0), lag(n * nb, 0.0);
  std::vector<uint64_t> cnt(n * nb, 0);
  ParallelFor(n, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = GreatCircleKm(unit[i], unit[j]);
      if (!(d < max_lag_km)) continue;
      const std::size_t b =
          std::min(nb - 1, static_cast<std::size_t>(d / width));
      const double dz = values[i] - values[j];
      sq[i * nb + b] += dz * dz;
      lag[i * nb + b] += d;
      cnt[i * nb + b] += 1;
    }
  });
  EmpiricalVariogram ev;
  ev.edges_km.resize(nb + 1);
  for (std::size_t b = 0; b <= nb; ++b) ev.edges_km[b] = width * b;
  ev.edges_km[nb] = max_lag_km;
  ev.mean_lag_km.assign(nb, 0.0);
  ev.gamma.assign(nb, 0.0);
  ev.pairs.assign(nb, 0);
  std::vector<double> sq_total(nb, 0.0), lag_total(nb, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t b = 0; b < nb; ++b) {
      sq_total[b] += sq[i * nb + b];
      lag_total[b] += lag[i * nb + b];
      ev.pairs[b] += cnt[i * nb + b];
    }
  }
  for (std::size_t b = 0; b < nb; ++b) {
    if (ev.pairs[b] == 0) {
      ev.mean_lag_km[b] = (ev.edges_km[b] + ev.edges_km[b + 1]) / 2;
      continue;
    }
    const double p = static_cast<double>(ev.pairs[b]);
    ev.mean_lag_km[b] = lag_total[b] / p;
    ev.gamma[b] = sq_total[b] / (2 * p);
  }
  return ev;
}

double VariogramModel::Gamma(double h_km) const {
  return nugget + psill * Shape(kind, h_km, range_km);
}

double VariogramModel::Covariance(double h_km) const {
  if (h_km <= 0) return sill();
  return sill() - Gamma(h_km);
}

void VariogramModel::Validate() const {
  if (!(nugget >= 0) || !(psill >= 0) || !(range_km > 0) ||
      !std::isfinite(nugget + psill + range_km)) {
    throw InvalidArgumentError(
        "variogram needs nugget >= 0, psill >= 0, range > 0");
  }
}

std::string_view VariogramKindName(VariogramModel::Kind kind) {
  return kind == VariogramModel::Kind::kSpherical ? "spherical" : "exponential";
}

VariogramModel::Kind ParseVariogramKind(std::string_view name) {
  if (name == "spherical") return VariogramModel::Kind::kSpherical;
  if (name == "exponential") return VariogramModel::Kind::kExponential;
  throw InvalidArgumentError("unknown variogram model '" + std::string(name) +
                             "'");
}

double VariogramObjective(const EmpiricalVariogram& ev,
                          const VariogramModel& model) {
  return Objective(NonemptyBins(ev), model.kind, model.nugget, model.psill,
                   model.range_km);
}

VariogramFit FitVariogram(const EmpiricalVariogram& ev,
                          VariogramModel::Kind kind) {
  const std::vector<Bin> bins = NonemptyBins(ev);
  if (bins.size() < 3) {
    throw InvalidArgumentError("variogram fit needs at least 3 nonempty bins");
  }
  const double max_lag = ev.edges_km.back();
  VariogramFit fit;
  fit.model.kind = kind;
  if (std::all_of(bins.begin(), bins.end(),
                  [](const Bin& b) { return b.g == 0; })) {
    fit.model.range_km = max_lag / 2;
    fit.degenerate = true;
    return fit;
  }

  const double lo = std::log(std::max(ev.edges_km[1] * 0.05, kMinLagKm));
  const double hi = std::log(max_lag * 10);
  constexpr int kGrid = 160;
  std::vector<double> grid_obj(kGrid + 1);
  auto log_range = [&](int i) { return lo + (hi - lo) * i / kGrid; };
  for (int i = 0; i <= kGrid; ++i) {
    grid_obj[i] = SolveSills(bins, kind, std::exp(log_range(i))).objective;
  }
  // Multi-start: refine around the three best grid points.
  std::vector<int> order(kGrid + 1);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return grid_obj[a] < grid_obj[b]; });
  double best_range = std::exp(log_range(order[0]));
  Profile best = SolveSills(bins, kind, best_range);
  const double phi = (std::sqrt(5.0) - 1) / 2;
  for (int s = 0; s < 3; ++s) {
    const int i = order[s];
    double a = log_range(std::max(0, i - 1));
    double b = log_range(std::min(kGrid, i + 1));
    double c = b - phi * (b - a);
    double d = a + phi * (b - a);
    double fc = SolveSills(bins, kind, std::exp(c)).objective;
    double fd = SolveSills(bins, kind, std::exp(d)).objective;
    for (int it = 0; it < 100 && b - a > 1e-13; ++it) {
      if (fc <= fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - phi * (b - a);
        fc = SolveSills(bins, kind, std::exp(c)).objective;
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + phi * (b - a);
        fd = SolveSills(bins, kind, std::exp(d)).objective;
      }
    }
    const double r = std::exp(fc <= fd ? c : d);
    const Profile p = SolveSills(bins, kind, r);
    if (p.objective < best.objective) {
      best = p;
      best_range = r;
    }
  }
  fit.model.nugget = best.nugget;
  fit.model.psill = best.psill;
  fit.model.range_km = best_range;
  fit.objective = best.objective;
  return fit;
}

void KrigingConfig::Validate() const {
  if (!(block_size_deg > 0)) {
    throw InvalidArgumentError("block size must be positive");
  }
  if (!(window_deg >= 3 * block_size_deg)) {
    throw InvalidArgumentError("kriging window must be >= 3 block sizes");
  }
  if (max_neighbors < 1) {
    throw InvalidArgumentError("max_neighbors must be >= 1");
  }
}

KrigingWeights SolveKrigingWeights(const Vec3& target,
                                   std::span<const Vec3> samples,
                                   const VariogramModel& model) {
  const std::size_t m = samples.size();
  if (m == 0) throw InvalidArgumentError("kriging needs at least one sample");
  KrigingWeights out;
  out.samples.resize(m);
  std::iota(out.samples.begin(), out.samples.end(), 0);
  const Eigen::Index n = static_cast<Eigen::Index>(m) + 1;
  Eigen::MatrixXd a(n, n);
  Eigen::VectorXd rhs(n);
  for (std::size_t i = 0; i < m; ++i) {
    const Eigen::Index ii = static_cast<Eigen::Index>(i);
    a(ii, ii) = model.Covariance(0);
    for (std::size_t j = i + 1; j < m; ++j) {
      const double c = model.Covariance(GreatCircleKm(samples[i], samples[j]));
      a(ii, static_cast<Eigen::Index>(j)) = c;
      a(static_cast<Eigen::Index>(j), ii) = c;
    }
    a(ii, n - 1) = 1;
    a(n - 1, ii) = 1;
    rhs(ii) = model.Covariance(GreatCircleKm(target, samples[i]));
  }
  a(n - 1, n - 1) = 0;
  rhs(n - 1) = 1;

  for (int attempt = 0; attempt < 2; ++attempt) {
    if (attempt == 1) {
      const double jitter = 1e-10 * model.sill();
      if (!(jitter > 0)) break;
      for (Eigen::Index i = 0; i + 1 < n; ++i) a(i, i) += jitter;
      out.jittered = true;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    if (!sol.allFinite()) continue;
    out.weights.assign(sol.data(), sol.data() + m);
    out.lagrange = sol(n - 1);
    return out;
  }

  // Inverse-distance fallback; coincident samples share all the weight.
  out.inverse_distance = true;
  out.weights.assign(m, 0.0);
  std::vector<double> d(m);
  std::size_t coincident = 0;
  for (std::size_t i = 0; i < m; ++i) {
    d[i] = GreatCircleKm(target, samples[i]);
    if (d[i] == 0) ++coincident;
  }
  double total = 0;
  for (std::size_t i = 0; i < m; ++i) {
    out.weights[i] = coincident > 0 ? (d[i] == 0 ? 1.0 : 0.0) : 1 / (d[i] * d[i]);
    total += out.weights[i];
  }
  for (double& w : out.weights) w /= total;
  return out;
}

std::vector<double> KrigeResiduals(std::span<const LatLng> targets,
                                   std::span<const LatLng> sample_points,
                                   std::span<const double> residuals,
                                   const VariogramModel& model,
                                   const KrigingConfig& cfg,
                                   KrigingStats* stats) {
  cfg.Validate();
  model.Validate();
  if (sample_points.size() != residuals.size()) {
    throw InvalidArgumentError("sample points and residuals differ in length");
  }
  const BlockGrid grid(sample_points, cfg.block_size_deg);
  std::vector<Vec3> unit(sample_points.size());
  for (std::size_t i = 0; i < unit.size(); ++i) {
    unit[i] = sample_points[i].ToUnitVector();
  }
  const int half = HalfWindow(cfg);
  std::vector<double> out(targets.size());
  std::atomic<std::size_t> jittered{0}, idw{0};
  ParallelFor(targets.size(), [&](std::size_t t) {
    const Vec3 q = targets[t].ToUnitVector();
    std::vector<std::size_t> window =
        grid.Window(BlockOf(targets[t], cfg.block_size_deg), half, -1);
    if (window.empty()) {
      throw InvalidArgumentError("no kriging sample in the window of target " +
                                 std::to_string(t));
    }
    std::vector<std::pair<double, std::size_t>> by_dist;
    by_dist.reserve(window.size());
    for (std::size_t s : window) {
      const Vec3 d = unit[s] - q;
      by_dist.emplace_back(Dot(d, d), s);
    }
    const std::size_t keep =
        std::min(by_dist.size(), static_cast<std::size_t>(cfg.max_neighbors));
    std::partial_sort(by_dist.begin(), by_dist.begin() + keep, by_dist.end());
    std::vector<Vec3> pts(keep);
    std::vector<double> vals(keep);
    for (std::size_t k = 0; k < keep; ++k) {
      pts[k] = unit[by_dist[k].second];
      vals[k] = residuals[by_dist[k].second];
    }
    const KrigingWeights w = SolveKrigingWeights(q, pts, model);
    if (w.jittered) ++jittered;
    if (w.inverse_distance) ++idw;
    out[t] = Predict(w, vals);
  });
  if (stats != nullptr) {
    stats->jittered += jittered;
    stats->inverse_distance += idw;
  }
  return out;
}

RkResult RegressionKrigeCv(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                           std::span<const LatLng> coords,
                           const RegressionKrigingOptions& options,
                           uint64_t seed) {
  const KrigingConfig& cfg = options.kriging;
  cfg.Validate();
  const std::size_t n = static_cast<std::size_t>(x.rows());
  if (static_cast<std::size_t>(y.size()) != n || coords.size() != n) {
    throw InvalidArgumentError("design, target and coords differ in length");
  }
  if (n == 0) throw InvalidArgumentError("empty block partition");
  const BlockGrid grid(coords, cfg.block_size_deg);
  std::vector<Vec3> unit(n);
  for (std::size_t i = 0; i < n; ++i) unit[i] = coords[i].ToUnitVector();
  const int half = HalfWindow(cfg);

  RkResult result;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  result.rk_predictions = Eigen::VectorXd::Constant(x.rows(), nan);
  result.trend_predictions = Eigen::VectorXd::Constant(x.rows(), nan);
  for (const auto& [key, rows] : grid.blocks()) {
    RkBlock b;
    b.block = key;
    for (std::size_t r : rows) b.test_rows.push_back(static_cast<Eigen::Index>(r));
    result.blocks.push_back(std::move(b));
  }

  std::atomic<std::size_t> jittered{0}, idw{0};
  ParallelFor(result.blocks.size(), [&](std::size_t bi) {
    RkBlock& block = result.blocks[bi];
    const std::vector<std::size_t> train =
        grid.Window(block.block, half, cfg.buffered ? 1 : 0);
    if (options.record_training) {
      block.training_rows.assign(train.begin(), train.end());
    }
    if (train.empty()) {
      block.skipped = true;
      block.note = "empty training window";
      return;
    }
    Eigen::MatrixXd xt(static_cast<Eigen::Index>(train.size()), x.cols());
    Eigen::VectorXd yt(static_cast<Eigen::Index>(train.size()));
    for (std::size_t i = 0; i < train.size(); ++i) {
      xt.row(static_cast<Eigen::Index>(i)) =
          x.row(static_cast<Eigen::Index>(train[i]));
      yt(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(train[i]));
    }
    const uint64_t block_seed =
        HashWords({seed, static_cast<uint64_t>(block.block.lat),
                   static_cast<uint64_t>(block.block.lng)});
    TrainedModel trend;
    try {
      trend = TrainModel(xt, yt, options.trend, block_seed);
    } catch (const InvalidArgumentError& e) {
      block.skipped = true;
      block.note = std::string("trend fit failed: ") + e.what();
      return;
    }
    const Eigen::VectorXd resid = yt - trend.Predict(xt);

    // Variogram on a seeded subsample of the training residuals.
    std::vector<std::size_t> pick(train.size());
    std::iota(pick.begin(), pick.end(), 0);
    if (pick.size() > options.max_variogram_points) {
      CounterRng rng(block_seed);
      Shuffle(std::span<std::size_t>(pick), rng);
      pick.resize(options.max_variogram_points);
      std::sort(pick.begin(), pick.end());
    }
    VariogramModel vm;
    vm.kind = options.variogram;
    bool have_model = false;
    if (pick.size() >= 2) {
      std::vector<LatLng> vp;
      std::vector<double> vv;
      vp.reserve(pick.size());
      for (std::size_t k : pick) {
        vp.push_back(coords[train[k]]);
        vv.push_back(resid(static_cast<Eigen::Index>(k)));
      }
      const EmpiricalVariogram ev = ComputeEmpiricalVariogram(
          vp, vv, options.max_lag_km, options.n_bins);
      if (ev.nonempty_bins() >= 3) {
        vm = FitVariogram(ev, options.variogram).model;
        have_model = true;
      }
    }
    if (!have_model) {
      // Too few lags for a fit: treat the residuals as pure nugget.
      const double mean = resid.mean();
      vm.nugget = (resid.array() - mean).square().mean();
      vm.psill = 0;
      vm.range_km = options.max_lag_km;
      block.note = "variogram fit unavailable; pure nugget used";
    }
    block.variogram = vm;

    std::vector<Vec3> train_unit(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) train_unit[i] = unit[train[i]];
    const PointIndex index(train_unit);
    const std::size_t k_nn = std::min(
        train.size(), static_cast<std::size_t>(cfg.max_neighbors));
    Eigen::MatrixXd xtest(static_cast<Eigen::Index>(block.test_rows.size()),
                          x.cols());
    for (std::size_t i = 0; i < block.test_rows.size(); ++i) {
      xtest.row(static_cast<Eigen::Index>(i)) = x.row(block.test_rows[i]);
    }
    const Eigen::VectorXd trend_test = trend.Predict(xtest);
    for (std::size_t i = 0; i < block.test_rows.size(); ++i) {
      const Eigen::Index row = block.test_rows[i];
      const std::vector<std::size_t> nn =
          index.Nearest(unit[static_cast<std::size_t>(row)], k_nn);
      std::vector<Vec3> pts(nn.size());
      std::vector<double> vals(nn.size());
      for (std::size_t k = 0; k < nn.size(); ++k) {
        pts[k] = train_unit[nn[k]];
        vals[k] = resid(static_cast<Eigen::Index>(nn[k]));
      }
      const KrigingWeights w =
          SolveKrigingWeights(unit[static_cast<std::size_t>(row)], pts, vm);
      if (w.jittered) ++jittered;
      if (w.inverse_distance) ++idw;
      const double t = trend_test(static_cast<Eigen::Index>(i));
      result.trend_predictions(row) = t;
      result.rk_predictions(row) = t + Predict(w, vals);
    }
  });

  std::vector<int> fold(n, -1);
  for (std::size_t bi = 0; bi < result.blocks.size(); ++bi) {
    const RkBlock& b = result.blocks[bi];
    if (b.skipped) {
      ++result.skipped_blocks;
      continue;
    }
    for (Eigen::Index r : b.test_rows) {
      fold[static_cast<std::size_t>(r)] = static_cast<int>(bi);
    }
  }
  const int n_blocks = static_cast<int>(result.blocks.size());
  result.rk = MakeCvReport(y, result.rk_predictions, fold, n_blocks);
  result.trend = MakeCvReport(y, result.trend_predictions, fold, n_blocks);
  result.kriging_stats.jittered = jittered;
  result.kriging_stats.inverse_distance = idw;
  return result;
}

void WriteVariogramCsv(const EmpiricalVariogram& ev, const std::string& path) {
  TextWriter out(path);
  out.WriteLine("lag_km,gamma,pairs");
  for (std::size_t b = 0; b < ev.bins(); ++b) {
    if (ev.empty(b)) continue;
    out.WriteLine(FormatDouble(ev.mean_lag_km[b]) + "," +
                  FormatDouble(ev.gamma[b]) + "," + std::to_string(ev.pairs[b]));
  }
  out.Close();
}

std::string FormatVariogramModel(const VariogramModel& model) {
  return std::string("{\"kind\": \"") +
         std::string(VariogramKindName(model.kind)) +
         "\", \"nugget\": " + FormatDouble(model.nugget) +
         ", \"psill\": " + FormatDouble(model.psill) +
         ", \"range_km\": " + FormatDouble(model.range_km) + "}";
}

void WritePredictions(std::span<const CellId> cells,
                      std::span<const double> values, const std::string& path) {
  if (cells.size() != values.size()) {
    throw InvalidArgumentError("cells and values differ in length");
  }
  std::vector<std::size_t> order(cells.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return cells[a] < cells[b]; });
  TextWriter out(path);
  out.WriteLine("cell,predicted_radiance");
  for (std::size_t i : order) {
    out.WriteLine(cells[i].ToString() + "," + FormatDouble(values[i]));
  }
  out.Close();
}

std::vector<std::pair<CellId, double>> ReadPredictions(const std::string& path) {
  LineReader in(path);
  std::string line;
  std::vector<std::pair<CellId, double>> out;
  if (!in.Next(&line)) return out;
  if (Trim(line) != "cell,predicted_radiance") {
    throw FormatError(path, 1, "expected header 'cell,predicted_radiance'");
  }
  while (in.Next(&line)) {
    if (Trim(line).empty()) continue;
    const auto f = SplitFields(line);
    if (f.size() != 2) {
      throw FormatError(path, in.line_number(), "expected 2 fields");
    }
    CellId cell;
    try {
      cell = CellId::FromString(Trim(f[0]));
    } catch (const InvalidArgumentError& e) {
      throw FormatError(path, in.line_number(), e.what());
    }
    out.emplace_back(cell, ParseDouble(Trim(f[1]), path, in.line_number()));
  }
  return out;
}

}  // namespace nightlights
