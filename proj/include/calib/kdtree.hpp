// Copyright 2026 the calib authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "calib/lie.hpp"

namespace calib {

/// Static kd-tree over 3D points with exact nearest-neighbor queries: the
/// returned distance always equals what an exhaustive scan would find.
class KdTree3 {
 public:
  struct Hit {
    int index = -1;
    double dist_sq = std::numeric_limits<double>::infinity();
  };

  explicit KdTree3(std::vector<Vec3> points) : pts_(std::move(points)) {
    if (pts_.empty()) {
      throw std::invalid_argument("KdTree3: empty point set");
    }
    idx_.resize(pts_.size());
    std::iota(idx_.begin(), idx_.end(), 0);
    nodes_.reserve(2 * pts_.size() / kLeafSize + 2);
    root_ = build(0, int(pts_.size()));
  }

  Hit nearest(const Vec3& q) const {
    Hit best;
    search(root_, q, best);
    return best;
  }

  std::size_t size() const { return pts_.size(); }

 private:
  static constexpr int kLeafSize = 12;

  struct Node {
    double split = 0;
    int axis = -1;  // -1 marks a leaf
    int left = -1, right = -1;
    int begin = 0, end = 0;
  };

  int build(int b, int e) {
    Node n;
    n.begin = b;
    n.end = e;
    if (e - b <= kLeafSize) {
      nodes_.push_back(n);
      return int(nodes_.size()) - 1;
    }
    Vec3 lo = pts_[idx_[b]], hi = lo;
    for (int i = b + 1; i < e; ++i) {
      lo = lo.cwiseMin(pts_[idx_[i]]);
      hi = hi.cwiseMax(pts_[idx_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const int mid = (b + e) / 2;
    std::nth_element(idx_.begin() + b, idx_.begin() + mid, idx_.begin() + e,
                     [&](int a, int bb) { return pts_[a][axis] < pts_[bb][axis]; });
    n.axis = axis;
    n.split = pts_[idx_[mid]][axis];
    const int self = int(nodes_.size());
    nodes_.push_back(n);
    const int left = build(b, mid);
    const int right = build(mid, e);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return self;
  }

  void search(int id, const Vec3& q, Hit& best) const {
    const Node& n = nodes_[id];
    if (n.axis < 0) {
      for (int i = n.begin; i < n.end; ++i) {
        const double d = (pts_[idx_[i]] - q).squaredNorm();
        if (d < best.dist_sq) best = {idx_[i], d};
      }
      return;
    }
    const double diff = q[n.axis] - n.split;
    const int near = diff < 0 ? n.left : n.right;
    const int far = diff < 0 ? n.right : n.left;
    search(near, q, best);
    if (diff * diff < best.dist_sq) search(far, q, best);
  }

  std::vector<Vec3> pts_;
  std::vector<int> idx_;
  std::vector<Node> nodes_;
  int root_ = 0;
};

}  // namespace calib
