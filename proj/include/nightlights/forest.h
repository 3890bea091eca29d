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

// CART regression forest.

#ifndef NIGHTLIGHTS_FOREST_H_
#define NIGHTLIGHTS_FOREST_H_

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace nightlights {

struct ForestParams {
  int n_trees = 100;
  int max_depth = 16;
  int min_leaf = 5;
  int features_per_split = 2;
  // Draw a bootstrap sample per tree; when false every tree sees all rows.
  bool bootstrap = true;

  void Validate() const;
  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

// Flattened binary tree. Node 0 is the root; a node with feature < 0 is a
// leaf holding `value`. Rows with x[feature] <= threshold go left.
struct RegressionTree {
  std::vector<int32_t> feature;
  std::vector<double> threshold;
  std::vector<int32_t> left;
  std::vector<int32_t> right;
  std::vector<double> value;
  std::vector<int32_t> count;  // training rows reaching the node

  double Predict(const double* row, Eigen::Index stride) const;
  int depth() const;
  friend bool operator==(const RegressionTree&,
                         const RegressionTree&) = default;
};

struct ForestModel {
  ForestParams params;
  uint64_t seed = 0;
  int n_features = 0;
  std::vector<RegressionTree> trees;

  // Mean of tree outputs, summed in sorted order so that the result does not
  // depend on tree order.
  double Predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  Eigen::VectorXd Predict(const Eigen::MatrixXd& x) const;
  friend bool operator==(const ForestModel&, const ForestModel&) = default;
};

// Trees are grown in parallel, each from its own stream keyed by (seed,
// tree index). Each split draws features_per_split distinct features and
// picks the threshold minimizing the summed squared error of the children,
// subject to both children holding at least min_leaf rows. Requires at least
// min_leaf rows.
ForestModel FitForest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      const ForestParams& params, uint64_t seed);

}  // namespace nightlights

#endif  // NIGHTLIGHTS_FOREST_H_
