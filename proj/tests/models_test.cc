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

#include "nightlights/models.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "nightlights/errors.h"
#include "nightlights/parallel.h"
#include "nightlights/random.h"
#include "oracles.h"
#include "test_util.h"

namespace nightlights {
namespace {

struct Data {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<LatLng> coords;
};

Data MakeData(uint64_t seed, int n, int p, double noise) {
  CounterRng rng({seed, 0xda7a});
  Data d{Eigen::MatrixXd(n, p), Eigen::VectorXd(n), {}};
  for (int i = 0; i < n; ++i) {
    double y = 3;
    for (int j = 0; j < p; ++j) {
      d.x(i, j) = rng.Uniform(-2, 2) * (j + 1);
      y += (j % 2 ? -1.5 : 2.0) * d.x(i, j);
    }
    d.y(i) = y + noise * rng.Normal();
    d.coords.push_back(LatLng(rng.Uniform(0, 10), rng.Uniform(-5, 5)));
  }
  return d;
}

TEST(Linear, MatchesNormalEquations) {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const Data d = MakeData(seed, 40 + static_cast<int>(seed), 4, 0.7);
    const LinearModel m = FitLinear(d.x, d.y);
    const Eigen::Index n = d.x.rows(), p = d.x.cols();
    Eigen::MatrixXd a(n, p + 1);
    a.col(0).setOnes();
    a.rightCols(p) = d.x;
    const Eigen::MatrixXd xtx_inv = (a.transpose() * a).inverse();
    const Eigen::VectorXd beta = xtx_inv * a.transpose() * d.y;
    const Eigen::VectorXd resid = d.y - a * beta;
    const double sigma2 = resid.squaredNorm() / static_cast<double>(n - p - 1);
    EXPECT_NEAR(m.intercept, beta(0), 1e-8);
    for (Eigen::Index j = 0; j < p; ++j) {
      EXPECT_NEAR(m.coefficients(j), beta(j + 1), 1e-8);
      const double t = beta(j + 1) / std::sqrt(sigma2 * xtx_inv(j + 1, j + 1));
      const double ref = oracle::StudentTwoSidedP(t, static_cast<double>(n - p - 1));
      EXPECT_NEAR(m.p_values(j), ref, 1e-6 + 1e-4 * ref);
    }
    const double t0 = beta(0) / std::sqrt(sigma2 * xtx_inv(0, 0));
    EXPECT_NEAR(m.intercept_p_value,
                oracle::StudentTwoSidedP(t0, static_cast<double>(n - p - 1)), 1e-6);
    EXPECT_NEAR(m.Predict(Eigen::MatrixXd(d.x.row(0)))(0), (a.row(0) * beta)(0), 1e-8);
  }
}

TEST(Linear, RankDeficientNamesColumns) {
  Data d = MakeData(1, 30, 3, 0.1);
  d.x.col(2) = 2 * d.x.col(0) - d.x.col(1);
  const std::vector<std::string> names = {"alpha", "beta", "gamma"};
  try {
    FitLinear(d.x, d.y, names);
    FAIL() << "expected rank deficiency";
  } catch (const InvalidArgumentError& e) {
    EXPECT_NE(std::string(e.what()).find("gamma"), std::string::npos) << e.what();
  }
  EXPECT_THROW(FitLinear(d.x.topRows(5), d.y.head(5)), InvalidArgumentError);
}

void CheckTree(const RegressionTree& t, const ForestParams& p) {
  EXPECT_LE(t.depth(), p.max_depth);
  for (std::size_t i = 0; i < t.feature.size(); ++i) {
    if (t.feature[i] < 0) {
      EXPECT_GE(t.count[i], p.min_leaf);
    } else {
      EXPECT_EQ(t.count[i], t.count[static_cast<std::size_t>(t.left[i])] +
                                t.count[static_cast<std::size_t>(t.right[i])]);
    }
  }
}

TEST(Forest, StructuralInvariants) {
  const Data d = MakeData(4, 300, 4, 1.0);
  ForestParams p;
  p.n_trees = 20;
  p.max_depth = 6;
  p.min_leaf = 7;
  const ForestModel f = FitForest(d.x, d.y, p, 9);
  ASSERT_EQ(f.trees.size(), 20u);
  for (const auto& t : f.trees) {
    CheckTree(t, p);
    EXPECT_EQ(t.count[0], 300);
  }
  const Eigen::VectorXd pred = f.Predict(d.x);
  EXPECT_GE(pred.minCoeff(), d.y.minCoeff());
  EXPECT_LE(pred.maxCoeff(), d.y.maxCoeff());
}

TEST(Forest, LeafValuesAreMeansWithoutBootstrap) {
  const Data d = MakeData(5, 200, 3, 1.0);
  ForestParams p;
  p.n_trees = 3;
  p.bootstrap = false;
  p.min_leaf = 4;
  const ForestModel f = FitForest(d.x, d.y, p, 2);
  for (const auto& t : f.trees) {
    std::map<int, std::pair<double, int>> leaf;
    for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
      int node = 0;
      while (t.feature[static_cast<std::size_t>(node)] >= 0) {
        const auto k = static_cast<std::size_t>(node);
        node = d.x(i, t.feature[k]) <= t.threshold[k] ? t.left[k] : t.right[k];
      }
      leaf[node].first += d.y(i);
      leaf[node].second += 1;
    }
    for (const auto& [node, sc] : leaf) {
      const auto k = static_cast<std::size_t>(node);
      EXPECT_EQ(t.count[k], sc.second);
      EXPECT_NEAR(t.value[k], sc.first / sc.second, 1e-9);
    }
  }
}

TEST(Forest, FullDepthInterpolatesTrainingData) {
  const Data d = MakeData(6, 80, 2, 1.0);
  ForestParams p;
  p.n_trees = 1;
  p.bootstrap = false;
  p.min_leaf = 1;
  p.max_depth = 64;
  p.features_per_split = 2;
  const ForestModel f = FitForest(d.x, d.y, p, 0);
  EXPECT_LT((f.Predict(d.x) - d.y).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Forest, DeterministicAcrossThreadCounts) {
  const Data d = MakeData(7, 150, 4, 1.0);
  ForestParams p;
  p.n_trees = 16;
  SetMaxThreads(1);
  const ForestModel a = FitForest(d.x, d.y, p, 42);
  SetMaxThreads(4);
  const ForestModel b = FitForest(d.x, d.y, p, 42);
  SetMaxThreads(0);
  EXPECT_EQ(a, b);
  EXPECT_NE(FitForest(d.x, d.y, p, 43), a);
}

TEST(Forest, ParamsValidated) {
  ForestParams p;
  p.n_trees = 0;
  EXPECT_THROW(p.Validate(), InvalidArgumentError);
  p = ForestParams{};
  p.min_leaf = 0;
  EXPECT_THROW(p.Validate(), InvalidArgumentError);
  const Data d = MakeData(1, 3, 2, 0);
  EXPECT_THROW(FitForest(d.x, d.y, ForestParams{}, 0), InvalidArgumentError);
}

TEST(Folds, BlocksAndAdjacency) {
  EXPECT_EQ(LngBlockCount(1.0), 360);
  const BlockKey a = BlockOf(LatLng(0.5, -179.5), 1.0);
  const BlockKey b = BlockOf(LatLng(0.5, 179.5), 1.0);
  EXPECT_EQ(a.lng, 0);
  EXPECT_EQ(b.lng, 359);
  EXPECT_TRUE(BlocksAdjacent(a, b, 1.0));
  EXPECT_TRUE(BlocksAdjacent(a, a, 1.0));
  EXPECT_TRUE(BlocksAdjacent(BlockOf(LatLng(-0.5, 0.5), 1), BlockOf(LatLng(0.5, 1.5), 1), 1));
  EXPECT_FALSE(BlocksAdjacent(BlockOf(LatLng(-0.5, 0.5), 1), BlockOf(LatLng(1.5, 0.5), 1), 1));
  EXPECT_EQ(BlockOf(LatLng(-0.5, 0), 1.0).lat, -1);
}

TEST(Folds, RandomFoldsAreBalanced) {
  for (int k : {2, 5, 7}) {
    const auto folds = AssignFolds(103, {}, {FoldScheme::Kind::kRandomK, k, 1.0}, 3);
    std::vector<int> sizes(static_cast<std::size_t>(k));
    for (int f : folds) {
      ASSERT_GE(f, 0);
      ASSERT_LT(f, k);
      ++sizes[static_cast<std::size_t>(f)];
    }
    EXPECT_LE(*std::max_element(sizes.begin(), sizes.end()) -
                  *std::min_element(sizes.begin(), sizes.end()),
              1);
    EXPECT_EQ(AssignFolds(103, {}, {FoldScheme::Kind::kRandomK, k, 1.0}, 3), folds);
  }
}

TEST(Folds, BufferedTrainingExcludesNeighbourBlocks) {
  const Data d = MakeData(8, 500, 2, 0);
  for (auto kind : {FoldScheme::Kind::kBlock, FoldScheme::Kind::kBlockBuffered}) {
    const FoldScheme scheme{kind, 5, 1.0};
    const auto folds = AssignFolds(500, d.coords, scheme, 11);
    std::map<std::pair<int, int>, int> block_fold;
    for (std::size_t i = 0; i < folds.size(); ++i) {
      const std::pair<int, int> key{static_cast<int>(std::floor(d.coords[i].lat())),
                                    static_cast<int>(std::floor(d.coords[i].lng() + 180))};
      auto [it, fresh] = block_fold.emplace(key, folds[i]);
      EXPECT_EQ(it->second, folds[i]);
    }
    for (int f = 0; f < 5; ++f) {
      const auto rows = TrainingRows(folds, f, d.coords, scheme);
      std::set<Eigen::Index> got(rows.begin(), rows.end());
      for (std::size_t i = 0; i < folds.size(); ++i) {
        bool expect = folds[i] != f;
        if (kind == FoldScheme::Kind::kBlockBuffered && expect) {
          const int bi = static_cast<int>(std::floor(d.coords[i].lat()));
          const int bj = static_cast<int>(std::floor(d.coords[i].lng() + 180));
          for (std::size_t h = 0; h < folds.size(); ++h) {
            if (folds[h] != f) continue;
            const int hi = static_cast<int>(std::floor(d.coords[h].lat()));
            const int hj = static_cast<int>(std::floor(d.coords[h].lng() + 180));
            if (std::abs(hi - bi) <= 1 && std::abs(hj - bj) <= 1) expect = false;
          }
        }
        EXPECT_EQ(got.contains(static_cast<Eigen::Index>(i)), expect);
      }
    }
  }
  const std::vector<LatLng> few = {LatLng(0.5, 0.5), LatLng(0.6, 0.6)};
  EXPECT_THROW(AssignFolds(2, few, {FoldScheme::Kind::kBlock, 2, 1.0}, 0),
               InvalidArgumentError);
}

TEST(CrossValidation, HeldOutPredictionsComeFromFoldModels) {
  const Data d = MakeData(9, 200, 3, 0.5);
  const ModelSpec spec{ModelKind::kLinear, {}, false};
  const FoldScheme scheme{FoldScheme::Kind::kBlockBuffered, 4, 1.0};
  const CvResult cv = CrossValidate(d.x, d.y, d.coords, spec, scheme, 5);
  for (int f = 0; f < 4; ++f) {
    const auto rows = TrainingRows(cv.folds, f, d.coords, scheme);
    Eigen::MatrixXd xt(static_cast<Eigen::Index>(rows.size()), d.x.cols());
    Eigen::VectorXd yt(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      xt.row(static_cast<Eigen::Index>(r)) = d.x.row(rows[r]);
      yt(static_cast<Eigen::Index>(r)) = d.y(rows[r]);
    }
    const LinearModel m = FitLinear(xt, yt);
    for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
      if (cv.folds[static_cast<std::size_t>(i)] == f) {
        EXPECT_NEAR(cv.predictions(i), m.Predict(Eigen::MatrixXd(d.x.row(i)))(0), 1e-9);
      }
    }
  }
  double abs_sum = 0, sq_sum = 0;
  for (Eigen::Index i = 0; i < d.y.rows(); ++i) {
    const double e = cv.predictions(i) - d.y(i);
    abs_sum += std::abs(e);
    sq_sum += e * e;
  }
  EXPECT_NEAR(cv.report.mae, abs_sum / 200, 1e-12);
  EXPECT_NEAR(cv.report.mse, sq_sum / 200, 1e-12);
  EXPECT_EQ(cv.report.rows, 200u);
}

TEST(CrossValidation, ReportIgnoresNegativeFolds) {
  const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(6, 0, 5);
  Eigen::VectorXd p = y;
  p(0) += 2;
  p(5) += 100;
  const std::vector<int> folds = {0, 0, 1, 1, 1, -1};
  const CvReport r = MakeCvReport(y, p, folds, 2);
  EXPECT_EQ(r.rows, 5u);
  EXPECT_EQ(r.fold_sizes, (std::vector<std::size_t>{2, 3}));
  EXPECT_DOUBLE_EQ(r.fold_mae[0], 1.0);
  EXPECT_DOUBLE_EQ(r.mae, 0.4);
  EXPECT_DOUBLE_EQ(r.mse, 0.8);
  TempDir dir;
  WriteCvReport(r, dir.File("cv.csv"));
  EXPECT_NE(ReadFile(dir.File("cv.csv")).find("all,5,"), std::string::npos);
  EXPECT_NE(FormatCvReport(r, "demo").find("demo"), std::string::npos);
}

TEST(Models, FileRoundTrip) {
  const Data d = MakeData(10, 120, 3, 0.5);
  const std::vector<std::string> cols = {"a", "b", "c"};
  TempDir dir;
  for (ModelKind kind : {ModelKind::kLinear, ModelKind::kForest}) {
    ModelSpec spec;
    spec.kind = kind;
    spec.forest.n_trees = 10;
    spec.log_target = kind == ModelKind::kForest;
    Eigen::VectorXd y = d.y.cwiseAbs();
    const TrainedModel m = TrainModel(d.x, y, spec, 3, cols);
    const std::string path = dir.File(std::string(ModelKindName(kind)) + ".lfm");
    WriteModel(m, path);
    const TrainedModel back = ReadModel(path);
    EXPECT_EQ(back.kind, kind);
    EXPECT_EQ(back.columns, cols);
    EXPECT_EQ(back.log_target, spec.log_target);
    EXPECT_EQ(back.Predict(d.x), m.Predict(d.x));
  }
  WriteFile(dir.File("junk.lfm"), "NOPE");
  EXPECT_THROW(ReadModel(dir.File("junk.lfm")), FormatError);
  EXPECT_THROW(ParseModelKind("svm"), InvalidArgumentError);
  EXPECT_THROW(ParseFoldKind("loo"), InvalidArgumentError);
}

TEST(Models, RegionalSkipsSmallRegions) {
  const Data d = MakeData(11, 130, 3, 0.5);
  std::vector<std::string> regions(130, "big");
  for (int i = 0; i < 10; ++i) regions[static_cast<std::size_t>(i)] = "tiny";
  ForestParams fp;
  fp.n_trees = 5;
  const RegionalResult r = FitRegional(d.x, d.y, regions, fp, 5, 1);
  ASSERT_EQ(r.fits.size(), 1u);
  EXPECT_EQ(r.fits[0].region, "big");
  EXPECT_EQ(r.fits[0].rows, 120u);
  EXPECT_EQ(r.fits[0].linear_cv.rows, 120u);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("tiny"), std::string::npos);
  EXPECT_THROW(FitRegional(d.x, d.y, {}, fp, 5, 1), InvalidArgumentError);
}

}  // namespace
}  // namespace nightlights
