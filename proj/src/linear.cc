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

#include "nightlights/linear.h"

#include <algorithm>
#include <cmath>

#include <Eigen/QR>
#include <boost/math/distributions/students_t.hpp>

#include "nightlights/errors.h"

namespace nightlights {
namespace {

constexpr double kRankThreshold = 1e-10;

double TwoSidedP(double t, double dof) {
  if (!std::isfinite(t)) return 0.0;
  boost::math::students_t dist(dof);
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(
                              dist, std::abs(t))),
                    0.0, 1.0);
}

}  // namespace

double LinearModel::Predict(
    const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  return intercept + row.dot(coefficients.transpose());
}

Eigen::VectorXd LinearModel::Predict(const Eigen::MatrixXd& x) const {
  return (x * coefficients).array() + intercept;
}

LinearModel FitLinear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      std::span<const std::string> column_names) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols() + 1;
  if (y.size() != n) {
    throw InvalidArgumentError("design and target row counts differ");
  }
  if (n < 6) throw InvalidArgumentError("linear fit needs at least 6 rows");
  if (!x.allFinite() || !y.allFinite()) {
    throw InvalidArgumentError("non-finite value in linear fit input");
  }

  Eigen::MatrixXd design(n, p);
  design.col(0).setOnes();
  design.rightCols(p - 1) = x;
  Eigen::VectorXd scale(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double norm = design.col(j).norm();
    scale(j) = norm > 0 ? norm : 1.0;
    design.col(j) /= scale(j);
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(kRankThreshold);
  if (qr.rank() < p) {
    std::string names;
    const auto& perm = qr.colsPermutation().indices();
    std::vector<Eigen::Index> dependent;
    for (Eigen::Index k = qr.rank(); k < p; ++k) dependent.push_back(perm(k));
    std::sort(dependent.begin(), dependent.end());
    for (Eigen::Index j : dependent) {
      if (!names.empty()) names += ", ";
      if (j == 0) {
        names += "intercept";
      } else if (static_cast<std::size_t>(j - 1) < column_names.size()) {
        names += column_names[j - 1];
      } else {
        names += "x" + std::to_string(j - 1);
      }
    }
    throw InvalidArgumentError("rank-deficient design; dependent columns: " +
                               names);
  }

  const Eigen::VectorXd beta_scaled = qr.solve(y);
  const Eigen::VectorXd residual = y - design * beta_scaled;
  const double dof = static_cast<double>(n - p);
  const double sigma2 = dof > 0 ? residual.squaredNorm() / dof : 0.0;

  // (DᵀD)⁻¹ = P R⁻¹ R⁻ᵀ Pᵀ.
  const Eigen::MatrixXd r =
      qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv = r.triangularView<Eigen::Upper>().solve(
      Eigen::MatrixXd::Identity(p, p));
  const Eigen::VectorXd diag_pivoted = (r_inv * r_inv.transpose()).diagonal();
  Eigen::VectorXd var_scaled(p);
  const auto& perm = qr.colsPermutation().indices();
  for (Eigen::Index k = 0; k < p; ++k) var_scaled(perm(k)) = diag_pivoted(k);

  LinearModel m;
  m.coefficients.resize(p - 1);
  m.p_values.resize(p - 1);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double coef = beta_scaled(j) / scale(j);
    double pv = 1.0;
    if (dof > 0) {
      const double se = std::sqrt(sigma2 * var_scaled(j)) / scale(j);
      if (se > 0) {
        pv = TwoSidedP(coef / se, dof);
      } else {
        pv = coef == 0 ? 1.0 : 0.0;
      }
    }
    if (j == 0) {
      m.intercept = coef;
      m.intercept_p_value = pv;
    } else {
      m.coefficients(j - 1) = coef;
      m.p_values(j - 1) = pv;
    }
  }
  return m;
}

}  // namespace nightlights
