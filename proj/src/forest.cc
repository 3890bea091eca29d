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

#include "nightlights/forest.h"

#include <algorithm>
#include <numeric>
#include <utility>

#include "nightlights/errors.h"
#include "nightlights/parallel.h"
#include "nightlights/random.h"

namespace nightlights {
namespace {

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
              const ForestParams& params, CounterRng rng)
      : x_(x), y_(y), params_(params), rng_(rng) {}

  RegressionTree Build(std::vector<Eigen::Index> rows) {
    rows_ = std::move(rows);
    features_.resize(x_.cols());
    std::iota(features_.begin(), features_.end(), 0);
    Grow(0, rows_.size(), 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0;
    double sse = 0;
  };

  int NewNode(double value, std::size_t count) {
    tree_.feature.push_back(-1);
    tree_.threshold.push_back(0);
    tree_.left.push_back(-1);
    tree_.right.push_back(-1);
    tree_.value.push_back(value);
    tree_.count.push_back(static_cast<int32_t>(count));
    return static_cast<int>(tree_.feature.size() - 1);
  }

  int Grow(std::size_t begin, std::size_t end, int depth) {
    const std::size_t n = end - begin;
    double sum = 0;
    for (std::size_t i = begin; i < end; ++i) sum += y_(rows_[i]);
    const double mean = sum / static_cast<double>(n);
    const int node = NewNode(mean, n);
    const std::size_t min_leaf = static_cast<std::size_t>(params_.min_leaf);
    if (depth >= params_.max_depth || n < 2 * min_leaf) return node;

    double parent_sse = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const double d = y_(rows_[i]) - mean;
      parent_sse += d * d;
    }
    if (parent_sse <= 0) return node;

    // Partial Fisher-Yates picks the candidate features for this node.
    const int p = static_cast<int>(features_.size());
    const int draws = std::min(params_.features_per_split, p);
    for (int k = 0; k < draws; ++k) {
      const int j = k + static_cast<int>(rng_.Below(p - k));
      std::swap(features_[k], features_[j]);
    }

    Split best;
    best.sse = parent_sse;
    std::vector<std::pair<double, Eigen::Index>> sorted(n);
    for (int k = 0; k < draws; ++k) {
      const int f = features_[k];
      for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Index r = rows_[begin + i];
        sorted[i] = {x_(r, f), r};
      }
      std::sort(sorted.begin(), sorted.end());
      double total = 0, total_sq = 0;
      for (const auto& [v, r] : sorted) {
        const double d = y_(r) - mean;
        total += d;
        total_sq += d * d;
      }
      double left = 0, left_sq = 0;
      for (std::size_t s = 1; s < n; ++s) {
        const double d = y_(sorted[s - 1].second) - mean;
        left += d;
        left_sq += d * d;
        if (s < min_leaf || n - s < min_leaf) continue;
        const double lo = sorted[s - 1].first;
        const double hi = sorted[s].first;
        if (!(lo < hi)) continue;
        const double nl = static_cast<double>(s);
        const double nr = static_cast<double>(n - s);
        const double right = total - left;
        const double right_sq = total_sq - left_sq;
        const double sse =
            (left_sq - left * left / nl) + (right_sq - right * right / nr);
        if (sse < best.sse) {
          double thr = lo + (hi - lo) / 2;
          if (!(thr < hi)) thr = lo;
          best = {f, thr, sse};
        }
      }
    }
    if (best.feature < 0 || !(best.sse < parent_sse * (1 - 1e-12))) {
      return node;
    }

    const auto mid_it = std::stable_partition(
        rows_.begin() + static_cast<std::ptrdiff_t>(begin),
        rows_.begin() + static_cast<std::ptrdiff_t>(end),
        [&](Eigen::Index r) { return x_(r, best.feature) <= best.threshold; });
    const std::size_t mid = static_cast<std::size_t>(mid_it - rows_.begin());
    tree_.feature[node] = best.feature;
    tree_.threshold[node] = best.threshold;
    const int l = Grow(begin, mid, depth + 1);
    const int r = Grow(mid, end, depth + 1);
    tree_.left[node] = l;
    tree_.right[node] = r;
    return node;
  }

  const Eigen::MatrixXd& x_;
  const Eigen::VectorXd& y_;
  const ForestParams& params_;
  CounterRng rng_;
  std::vector<Eigen::Index> rows_;
  std::vector<int> features_;
  RegressionTree tree_;
};

}  // namespace

void ForestParams::Validate() const {
  if (n_trees < 1) throw InvalidArgumentError("n_trees must be >= 1");
  if (max_depth < 0) throw InvalidArgumentError("max_depth must be >= 0");
  if (min_leaf < 1) throw InvalidArgumentError("min_leaf must be >= 1");
  if (features_per_split < 1) {
    throw InvalidArgumentError("features_per_split must be >= 1");
  }
}

double RegressionTree::Predict(const double* row, Eigen::Index stride) const {
  int node = 0;
  while (feature[node] >= 0) {
    node = row[feature[node] * stride] <= threshold[node] ? left[node]
                                                          : right[node];
  }
  return value[node];
}

int RegressionTree::depth() const {
  std::vector<int> d(feature.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < feature.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (feature[i] >= 0) {
      d[left[i]] = d[i] + 1;
      d[right[i]] = d[i] + 1;
    }
  }
  return deepest;
}

double ForestModel::Predict(
    const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  const Eigen::RowVectorXd r = row;
  std::vector<double> out(trees.size());
  for (std::size_t t = 0; t < trees.size(); ++t) {
    out[t] = trees[t].Predict(r.data(), 1);
  }
  std::sort(out.begin(), out.end());
  double sum = 0;
  for (double v : out) sum += v;
  return sum / static_cast<double>(out.size());
}

Eigen::VectorXd ForestModel::Predict(const Eigen::MatrixXd& x) const {
  if (x.cols() != n_features) {
    throw InvalidArgumentError("forest expects " + std::to_string(n_features) +
                               " features, got " + std::to_string(x.cols()));
  }
  Eigen::VectorXd out(x.rows());
  constexpr Eigen::Index kBand = 256;
  const Eigen::Index bands = (x.rows() + kBand - 1) / kBand;
  ParallelFor(static_cast<std::size_t>(bands), [&](std::size_t b) {
    const Eigen::Index lo = static_cast<Eigen::Index>(b) * kBand;
    const Eigen::Index hi = std::min(x.rows(), lo + kBand);
    std::vector<double> per_tree(trees.size());
    for (Eigen::Index i = lo; i < hi; ++i) {
      for (std::size_t t = 0; t < trees.size(); ++t) {
        per_tree[t] = trees[t].Predict(x.data() + i, x.rows());
      }
      std::sort(per_tree.begin(), per_tree.end());
      double sum = 0;
      for (double v : per_tree) sum += v;
      out(i) = sum / static_cast<double>(per_tree.size());
    }
  });
  return out;
}

ForestModel FitForest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      const ForestParams& params, uint64_t seed) {
  params.Validate();
  if (y.size() != x.rows()) {
    throw InvalidArgumentError("design and target row counts differ");
  }
  if (x.rows() < params.min_leaf || x.rows() == 0) {
    throw InvalidArgumentError("forest needs at least min_leaf rows");
  }
  if (!x.allFinite() || !y.allFinite()) {
    throw InvalidArgumentError("non-finite value in forest input");
  }
  ForestModel model;
  model.params = params;
  model.seed = seed;
  model.n_features = static_cast<int>(x.cols());
  model.trees.resize(static_cast<std::size_t>(params.n_trees));
  const Eigen::Index n = x.rows();
  ParallelFor(model.trees.size(), [&](std::size_t t) {
    CounterRng rng({seed, 0x666f72657374ULL, t});
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
    if (params.bootstrap) {
      for (auto& r : rows) {
        r = static_cast<Eigen::Index>(rng.Below(static_cast<uint64_t>(n)));
      }
      std::sort(rows.begin(), rows.end());
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    TreeBuilder builder(x, y, params, rng);
    model.trees[t] = builder.Build(std::move(rows));
  });
  return model;
}

}  // namespace nightlights
