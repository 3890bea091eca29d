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

#ifndef NIGHTLIGHTS_LINEAR_H_
#define NIGHTLIGHTS_LINEAR_H_

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace nightlights {

struct LinearModel {
  double intercept = 0;
  Eigen::VectorXd coefficients;
  double intercept_p_value = 1;
  Eigen::VectorXd p_values;  // two-sided, one per coefficient

  double Predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  Eigen::VectorXd Predict(const Eigen::MatrixXd& x) const;
};

// Ordinary least squares with an intercept, solved by column-pivoted QR on
// the norm-scaled design. Requires at least 6 rows. A rank-deficient design
// raises InvalidArgumentError naming the dependent columns; `column_names`
// supplies those names (defaults to x0, x1, ...).
LinearModel FitLinear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      std::span<const std::string> column_names = {});

}  // namespace nightlights

#endif  // NIGHTLIGHTS_LINEAR_H_
