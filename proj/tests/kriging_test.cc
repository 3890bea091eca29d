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

#include <cmath>
#include <numeric>
#include <set>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "nightlights/errors.h"
#include "nightlights/random.h"
#include "oracles.h"
#include "test_util.h"

namespace nightlights {
namespace {

std::vector<LatLng> RandomPoints(CounterRng& rng, int n, double lat0, double lng0,
                                 double span) {
  std::vector<LatLng> p;
  for (int i = 0; i < n; ++i) {
    p.push_back(LatLng(lat0 + rng.Uniform(0, span), lng0 + rng.Uniform(0, span)));
  }
  return p;
}

double SphericalRef(const VariogramModel& m, double h) {
  if (h >= m.range_km) return m.nugget + m.psill;
  const double r = h / m.range_km;
  return m.nugget + m.psill * (1.5 * r - 0.5 * r * r * r);
}

TEST(Variogram, EmpiricalMatchesPairEnumeration) {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    CounterRng rng({seed, 0x7a});
    const auto pts = RandomPoints(rng, 150, 20, 30, 3);
    std::vector<double> z;
    for (std::size_t i = 0; i < pts.size(); ++i) z.push_back(rng.Normal() + pts[i].lat());
    const auto got = ComputeEmpiricalVariogram(pts, z, 250, 12);
    const auto ref = oracle::EmpiricalVariogram(pts, z, 250, 12);
    ASSERT_EQ(got.bins(), 12u);
    EXPECT_EQ(got.edges_km.front(), 0);
    EXPECT_NEAR(got.edges_km.back(), 250, 1e-12);
    for (std::size_t k = 0; k < 12; ++k) {
      EXPECT_EQ(got.pairs[k], ref.pairs[k]);
      EXPECT_NEAR(got.gamma[k], ref.gamma[k], 1e-9 * (1 + ref.gamma[k]));
      if (ref.pairs[k] > 0) {
        EXPECT_NEAR(got.mean_lag_km[k], ref.mean_lag[k], 1e-6);
      }
    }
  }
  const std::vector<LatLng> one = {LatLng(0, 0)};
  const std::vector<double> z1 = {1};
  EXPECT_THROW(ComputeEmpiricalVariogram(one, z1, 10, 3), InvalidArgumentError);
}

TEST(Variogram, ModelShapes) {
  VariogramModel m{VariogramModel::Kind::kSpherical, 0.3, 2.0, 50};
  EXPECT_DOUBLE_EQ(m.Gamma(0), 0.3);
  EXPECT_DOUBLE_EQ(m.Covariance(0), 2.3);
  for (double h : {1.0, 10.0, 49.9, 50.0, 80.0}) {
    EXPECT_NEAR(m.Gamma(h), SphericalRef(m, h), 1e-12);
    EXPECT_NEAR(m.Covariance(h), 2.3 - SphericalRef(m, h), 1e-12);
  }
  VariogramModel e{VariogramModel::Kind::kExponential, 0.1, 1.0, 20};
  EXPECT_NEAR(e.Gamma(20), 0.1 + (1 - std::exp(-1.0)), 1e-12);
  EXPECT_THROW((VariogramModel{VariogramModel::Kind::kSpherical, -1, 1, 1}.Validate()),
               InvalidArgumentError);
  EXPECT_THROW((VariogramModel{VariogramModel::Kind::kSpherical, 0, 1, 0}.Validate()),
               InvalidArgumentError);
  EXPECT_THROW(ParseVariogramKind("gaussian"), InvalidArgumentError);
}

EmpiricalVariogram Synthetic(const VariogramModel& m, int bins, double max_lag) {
  EmpiricalVariogram ev;
  const double w = max_lag / bins;
  for (int k = 0; k <= bins; ++k) ev.edges_km.push_back(k * w);
  for (int k = 0; k < bins; ++k) {
    const double h = (k + 0.5) * w;
    ev.mean_lag_km.push_back(h);
    ev.gamma.push_back(m.Gamma(h));
    ev.pairs.push_back(100 + 10 * static_cast<uint64_t>(k));
  }
  return ev;
}

TEST(Variogram, FitRecoversGeneratingModel) {
  for (auto kind : {VariogramModel::Kind::kSpherical, VariogramModel::Kind::kExponential}) {
    for (double range : {40.0, 90.0, 160.0}) {
      const VariogramModel truth{kind, 0.25, 1.75, range};
      const auto ev = Synthetic(truth, 20, kind == VariogramModel::Kind::kSpherical ? 300 : 600);
      const VariogramFit fit = FitVariogram(ev, kind);
      EXPECT_FALSE(fit.degenerate);
      EXPECT_NEAR(fit.model.range_km, range, 1e-3 * range);
      EXPECT_NEAR(fit.model.nugget, 0.25, 1e-3);
      EXPECT_NEAR(fit.model.psill, 1.75, 1e-3);
      EXPECT_LT(fit.objective, 1e-8);
      EXPECT_NEAR(VariogramObjective(ev, fit.model), fit.objective, 1e-12);
    }
  }
}

TEST(Variogram, ObjectiveMatchesDefinition) {
  const VariogramModel truth{VariogramModel::Kind::kSpherical, 0.2, 1, 30};
  auto ev = Synthetic(truth, 8, 80);
  ev.pairs[3] = 0;
  const VariogramModel other{VariogramModel::Kind::kSpherical, 0.1, 1.3, 45};
  double ref = 0;
  for (std::size_t k = 0; k < ev.bins(); ++k) {
    if (ev.pairs[k] == 0) continue;
    const double h = ev.mean_lag_km[k];
    const double d = ev.gamma[k] - other.Gamma(h);
    ref += static_cast<double>(ev.pairs[k]) / (h * h) * d * d;
  }
  EXPECT_NEAR(VariogramObjective(ev, other), ref, 1e-12 * (1 + ref));
}

TEST(Variogram, DegenerateAndTooFewBins) {
  auto ev = Synthetic({VariogramModel::Kind::kSpherical, 0, 1, 30}, 6, 60);
  std::fill(ev.gamma.begin(), ev.gamma.end(), 0.0);
  EXPECT_TRUE(FitVariogram(ev, VariogramModel::Kind::kSpherical).degenerate);
  auto sparse = Synthetic({VariogramModel::Kind::kSpherical, 0, 1, 30}, 6, 60);
  for (std::size_t k = 2; k < 6; ++k) sparse.pairs[k] = 0;
  EXPECT_THROW(FitVariogram(sparse, VariogramModel::Kind::kSpherical), InvalidArgumentError);
}

// Bordered system solved densely with a full-pivot LU.
std::vector<double> ReferenceWeights(const LatLng& target, const std::vector<LatLng>& pts,
                                     const VariogramModel& m) {
  const auto n = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 1, n + 1);
  Eigen::VectorXd b(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double h = oracle::HaversineKm(pts[static_cast<std::size_t>(i)],
                                           pts[static_cast<std::size_t>(j)]);
      a(i, j) = i == j ? m.sill() : m.sill() - SphericalRef(m, h);
    }
    a(i, n) = a(n, i) = 1;
    const double h0 = oracle::HaversineKm(target, pts[static_cast<std::size_t>(i)]);
    b(i) = h0 == 0 ? m.sill() : m.sill() - SphericalRef(m, h0);
  }
  b(n) = 1;
  const Eigen::VectorXd w = a.fullPivLu().solve(b);
  return {w.data(), w.data() + n};
}

TEST(Kriging, WeightsMatchDenseSolveAndSumToOne) {
  const VariogramModel m{VariogramModel::Kind::kSpherical, 0.2, 1.5, 60};
  for (uint64_t seed = 0; seed < 25; ++seed) {
    CounterRng rng({seed, 0x4b});
    const auto pts = RandomPoints(rng, 5 + static_cast<int>(rng.Below(25)), -5, 100, 1);
    const LatLng target(-5 + rng.Uniform(0, 1), 100 + rng.Uniform(0, 1));
    std::vector<Vec3> vs;
    for (const LatLng& p : pts) vs.push_back(p.ToUnitVector());
    const KrigingWeights kw = SolveKrigingWeights(target.ToUnitVector(), vs, m);
    EXPECT_FALSE(kw.inverse_distance);
    const auto ref = ReferenceWeights(target, pts, m);
    std::vector<double> dense(pts.size(), 0.0);
    for (std::size_t i = 0; i < kw.samples.size(); ++i) dense[kw.samples[i]] = kw.weights[i];
    EXPECT_NEAR(std::accumulate(dense.begin(), dense.end(), 0.0), 1.0, 1e-9);
    for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_NEAR(dense[i], ref[i], 1e-6);
  }
}

TEST(Kriging, ExactAtSampleLocations) {
  const VariogramModel m{VariogramModel::Kind::kExponential, 0.5, 1.0, 30};
  CounterRng rng(4);
  const auto pts = RandomPoints(rng, 12, 45, 7, 0.5);
  std::vector<Vec3> vs;
  for (const LatLng& p : pts) vs.push_back(p.ToUnitVector());
  for (std::size_t t = 0; t < pts.size(); ++t) {
    const KrigingWeights kw = SolveKrigingWeights(vs[t], vs, m);
    for (std::size_t i = 0; i < kw.samples.size(); ++i) {
      EXPECT_NEAR(kw.weights[i], kw.samples[i] == t ? 1.0 : 0.0, 1e-8);
    }
  }
}

TEST(Kriging, InvariantUnderLongitudeShift) {
  const VariogramModel m{VariogramModel::Kind::kSpherical, 0.1, 1, 80};
  CounterRng rng(6);
  const auto pts = RandomPoints(rng, 15, 30, 10, 1);
  const LatLng target(30.4, 10.6);
  std::vector<Vec3> a, b;
  for (const LatLng& p : pts) {
    a.push_back(p.ToUnitVector());
    b.push_back(LatLng(p.lat(), p.lng() + 57.3).ToUnitVector());
  }
  const auto wa = SolveKrigingWeights(target.ToUnitVector(), a, m);
  const auto wb = SolveKrigingWeights(LatLng(30.4, 67.9).ToUnitVector(), b, m);
  ASSERT_EQ(wa.weights.size(), wb.weights.size());
  for (std::size_t i = 0; i < wa.weights.size(); ++i) {
    EXPECT_NEAR(wa.weights[i], wb.weights[i], 1e-8);
  }
}

TEST(Kriging, ResidualsAreWeightedSums) {
  const VariogramModel m{VariogramModel::Kind::kSpherical, 0.1, 1, 80};
  CounterRng rng(8);
  const auto pts = RandomPoints(rng, 30, 12.05, 20.05, 0.9);
  std::vector<double> r;
  for (std::size_t i = 0; i < pts.size(); ++i) r.push_back(rng.Normal());
  const std::vector<LatLng> targets = {LatLng(12.5, 20.5), LatLng(12.2, 20.9)};
  KrigingConfig cfg;
  cfg.max_neighbors = 100;
  const auto got = KrigeResiduals(targets, pts, r, m, cfg);
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const auto w = ReferenceWeights(targets[t], pts, m);
    double ref = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) ref += w[i] * r[i];
    EXPECT_NEAR(got[t], ref, 1e-6);
  }
  const std::vector<LatLng> far = {LatLng(-40, -40)};
  EXPECT_THROW(KrigeResiduals(far, pts, r, m, cfg), InvalidArgumentError);
}

TEST(RegressionKriging, TrainingSetsRespectBuffer) {
  CounterRng rng(12);
  const int n = 900;
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y(n);
  std::vector<LatLng> coords;
  for (int i = 0; i < n; ++i) {
    coords.push_back(LatLng(rng.Uniform(0, 6), rng.Uniform(0, 6)));
    x(i, 0) = rng.Uniform(0, 10);
    x(i, 1) = rng.Uniform(0, 10);
    y(i) = 1 + 2 * x(i, 0) - x(i, 1) + std::sin(coords.back().lat()) + 0.1 * rng.Normal();
  }
  RegressionKrigingOptions opt;
  opt.kriging.window_deg = 5;
  opt.record_training = true;
  opt.max_lag_km = 200;
  const RkResult res = RegressionKrigeCv(x, y, coords, opt, 1);
  ASSERT_FALSE(res.blocks.empty());
  std::size_t evaluated = 0;
  for (const RkBlock& b : res.blocks) {
    if (b.skipped) continue;
    ++evaluated;
    std::set<Eigen::Index> train(b.training_rows.begin(), b.training_rows.end());
    for (Eigen::Index i = 0; i < n; ++i) {
      const BlockKey k = BlockOf(coords[static_cast<std::size_t>(i)], 1.0);
      const bool in_window = std::abs(k.lat - b.block.lat) <= 2 && std::abs(k.lng - b.block.lng) <= 2;
      const bool buffer = std::abs(k.lat - b.block.lat) <= 1 && std::abs(k.lng - b.block.lng) <= 1;
      EXPECT_EQ(train.contains(i), in_window && !buffer);
    }
    for (Eigen::Index i : b.test_rows) {
      EXPECT_TRUE(std::isfinite(res.rk_predictions(i)));
      EXPECT_EQ(BlockOf(coords[static_cast<std::size_t>(i)], 1.0), b.block);
    }
  }
  EXPECT_EQ(evaluated + res.skipped_blocks, res.blocks.size());
  EXPECT_GT(evaluated, 0u);
  EXPECT_GT(res.rk.mae, 0);
  EXPECT_GT(res.trend.mae, 0);
}

TEST(Kriging, FilesAndFormatting) {
  TempDir dir;
  const std::vector<CellId> cells = {CellId::FromLatLng(LatLng(1, 1), 12),
                                     CellId::FromLatLng(LatLng(2, 2), 12)};
  const std::vector<double> v = {1.5, 2.25};
  WritePredictions(cells, v, dir.File("p.csv"));
  const auto back = ReadPredictions(dir.File("p.csv"));
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto it = std::find_if(back.begin(), back.end(),
                                 [&](const auto& p) { return p.first == cells[i]; });
    ASSERT_NE(it, back.end());
    EXPECT_EQ(it->second, v[i]);
  }
  const std::string s = FormatVariogramModel({VariogramModel::Kind::kSpherical, 0.1, 1, 50});
  EXPECT_NE(s.find("\"spherical\""), std::string::npos);
  EXPECT_NE(s.find("\"range_km\": 50"), std::string::npos);
  const auto ev = Synthetic({VariogramModel::Kind::kSpherical, 0, 1, 30}, 4, 40);
  WriteVariogramCsv(ev, dir.File("v.csv"));
  EXPECT_EQ(ReadFile(dir.File("v.csv")).rfind("lag_km,gamma,pairs\n", 0), 0u);
}

}  // namespace
}  // namespace nightlights
