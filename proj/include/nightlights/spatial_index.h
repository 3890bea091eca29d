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

#ifndef NIGHTLIGHTS_SPATIAL_INDEX_H_
#define NIGHTLIGHTS_SPATIAL_INDEX_H_

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "nightlights/sphere_grid.h"

namespace nightlights {

// Static k-d tree over unit vectors. Chord length is monotone in great-circle
// distance, so nearest-by-chord is nearest on the sphere.
class PointIndex {
 public:
  explicit PointIndex(std::vector<Vec3> points);

  std::size_t size() const { return points_.size(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }

  // Indices of the min(k, size()) nearest points, ordered by (squared chord
  // distance, index).
  std::vector<std::size_t> Nearest(const Vec3& q, std::size_t k) const;

 private:
  struct Node {
    std::size_t begin, end;  // range in order_
    int axis;                // -1 for a leaf
    double split;
    int left = -1, right = -1;
  };

  int Build(std::size_t begin, std::size_t end, int depth);
  void Search(int node, const Vec3& q, std::size_t k,
              std::vector<std::pair<double, std::size_t>>& heap) const;

  std::vector<Vec3> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace nightlights

#endif  // NIGHTLIGHTS_SPATIAL_INDEX_H_
