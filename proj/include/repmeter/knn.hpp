/*
 * Copyright 2026 The repmeter Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef REPMETER_KNN_HPP_
#define REPMETER_KNN_HPP_

#include <algorithm>
#include <numeric>
#include <queue>
#include <vector>

#include "repmeter/common.hpp"

namespace repmeter {

/// Static kd-tree over the rows of a matrix, Euclidean metric.
/// The tree keeps a reference-free copy of the points.
class KdTree {
 public:
  struct Neighbor {
    double squared_distance;
    Index index;
    bool operator<(const Neighbor& o) const {
      return squared_distance < o.squared_distance ||
             (squared_distance == o.squared_distance && index < o.index);
    }
  };

  explicit KdTree(Matrix points, Index leaf_size = 12)
      : points_(std::move(points)), leaf_size_(std::max<Index>(1, leaf_size)) {
    require_arg(points_.rows() >= 1 && points_.cols() >= 1, "kd-tree needs at least one point");
    order_.resize(static_cast<std::size_t>(points_.rows()));
    std::iota(order_.begin(), order_.end(), Index{0});
    nodes_.reserve(static_cast<std::size_t>(2 * points_.rows() / leaf_size_ + 2));
    build(0, points_.rows());
  }

  Index size() const { return points_.rows(); }
  Index dim() const { return points_.cols(); }

  /// The k nearest points to `query`, nearest first. `exclude` (a point
  /// index) is skipped, which is how leave-one-out queries are made.
  std::vector<Neighbor> nearest(const Eigen::Ref<const RowVector>& query, Index k, Index exclude = -1) const {
    require_arg(query.size() == dim(), "query dimension does not match tree");
    require_arg(k >= 1, "k must be positive");
    std::priority_queue<Neighbor> heap;
    search(0, query, k, exclude, heap);
    std::vector<Neighbor> out;
    out.reserve(heap.size());
    while (!heap.empty()) {
      out.push_back(heap.top());
      heap.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

 private:
  struct Node {
    Index begin, end;  // range in order_
    Index axis = -1;   // -1 for leaves
    double split = 0.0;
    Index left = -1, right = -1;
  };

  Index build(Index begin, Index end) {
    const auto id = static_cast<Index>(nodes_.size());
    nodes_.push_back(Node{begin, end});
    if (end - begin <= leaf_size_) return id;

    // split on the widest axis of the bounding box
    RowVector lo = points_.row(order_[static_cast<std::size_t>(begin)]);
    RowVector hi = lo;
    for (Index i = begin + 1; i < end; ++i) {
      lo = lo.cwiseMin(points_.row(order_[static_cast<std::size_t>(i)]));
      hi = hi.cwiseMax(points_.row(order_[static_cast<std::size_t>(i)]));
    }
    Index axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi(axis) == lo(axis)) return id;  // all points coincide

    const Index mid = begin + (end - begin) / 2;
    auto first = order_.begin() + begin;
    std::nth_element(first, order_.begin() + mid, order_.begin() + end, [&](Index a, Index b) {
      return points_(a, axis) < points_(b, axis) || (points_(a, axis) == points_(b, axis) && a < b);
    });
    const double split = points_(order_[static_cast<std::size_t>(mid)], axis);
    const Index left = build(begin, mid);
    const Index right = build(mid, end);
    Node& node = nodes_[static_cast<std::size_t>(id)];
    node.axis = axis;
    node.split = split;
    node.left = left;
    node.right = right;
    return id;
  }

  void search(Index node_id, const Eigen::Ref<const RowVector>& q, Index k, Index exclude,
              std::priority_queue<Neighbor>& heap) const {
    const Node& node = nodes_[static_cast<std::size_t>(node_id)];
    if (node.axis < 0) {
      for (Index i = node.begin; i < node.end; ++i) {
        const Index p = order_[static_cast<std::size_t>(i)];
        if (p == exclude) continue;
        const double d2 = (points_.row(p) - q).squaredNorm();
        const Neighbor cand{d2, p};
        if (static_cast<Index>(heap.size()) < k) {
          heap.push(cand);
        } else if (cand < heap.top()) {
          heap.pop();
          heap.push(cand);
        }
      }
      return;
    }
    const double diff = q(node.axis) - node.split;
    const Index near = diff < 0.0 ? node.left : node.right;
    const Index far = diff < 0.0 ? node.right : node.left;
    search(near, q, k, exclude, heap);
    if (static_cast<Index>(heap.size()) < k || diff * diff <= heap.top().squared_distance)
      search(far, q, k, exclude, heap);
  }

  Matrix points_;
  Index leaf_size_;
  std::vector<Index> order_;
  std::vector<Node> nodes_;
};

}  // namespace repmeter

#endif  // REPMETER_KNN_HPP_
