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

#include "nightlights/spatial_index.h"

#include <algorithm>
#include <numeric>

namespace nightlights {
namespace {

constexpr std::size_t kLeafSize = 16;

double Coord(const Vec3& p, int axis) {
  return axis == 0 ? p.x : (axis == 1 ? p.y : p.z);
}

double SquaredChord(const Vec3& a, const Vec3& b) {
  const Vec3 d = a - b;
  return Dot(d, d);
}

}  // namespace

PointIndex::PointIndex(std::vector<Vec3> points) : points_(std::move(points)) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0);
  if (!points_.empty()) Build(0, points_.size(), 0);
}

int PointIndex::Build(std::size_t begin, std::size_t end, int depth) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({begin, end, -1, 0.0});
  if (end - begin <= kLeafSize) return id;
  // Split on the axis of largest spread.
  double lo[3] = {1e300, 1e300, 1e300}, hi[3] = {-1e300, -1e300, -1e300};
  for (std::size_t i = begin; i < end; ++i) {
    for (int a = 0; a < 3; ++a) {
      const double c = Coord(points_[order_[i]], a);
      lo[a] = std::min(lo[a], c);
      hi[a] = std::max(hi[a], c);
    }
  }
  int axis = 0;
  for (int a = 1; a < 3; ++a) {
    if (hi[a] - lo[a] > hi[axis] - lo[axis]) axis = a;
  }
  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                   order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](std::size_t x, std::size_t y) {
                     const double cx = Coord(points_[x], axis);
                     const double cy = Coord(points_[y], axis);
                     return cx < cy || (cx == cy && x < y);
                   });
  nodes_[id].axis = axis;
  nodes_[id].split = Coord(points_[order_[mid]], axis);
  const int left = Build(begin, mid, depth + 1);
  const int right = Build(mid, end, depth + 1);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void PointIndex::Search(
    int node_id, const Vec3& q, std::size_t k,
    std::vector<std::pair<double, std::size_t>>& heap) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    for (std::size_t i = node.begin; i < node.end; ++i) {
      const std::size_t idx = order_[i];
      const std::pair<double, std::size_t> cand{SquaredChord(q, points_[idx]),
                                                idx};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end());
      } else if (cand < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end());
      }
    }
    return;
  }
  const double diff = Coord(q, node.axis) - node.split;
  const int near = diff < 0 ? node.left : node.right;
  const int far = diff < 0 ? node.right : node.left;
  Search(near, q, k, heap);
  if (heap.size() < k || diff * diff <= heap.front().first) {
    Search(far, q, k, heap);
  }
}

std::vector<std::size_t> PointIndex::Nearest(const Vec3& q,
                                             std::size_t k) const {
  std::vector<std::size_t> out;
  if (points_.empty() || k == 0) return out;
  std::vector<std::pair<double, std::size_t>> heap;
  heap.reserve(k + 1);
  Search(0, q, std::min(k, points_.size()), heap);
  std::sort_heap(heap.begin(), heap.end());
  out.reserve(heap.size());
  for (const auto& [d, idx] : heap) out.push_back(idx);
  return out;
}

}  // namespace nightlights
