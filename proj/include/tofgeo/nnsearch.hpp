#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "tofgeo/pointcloud.hpp"

namespace tofgeo {

inline double squared_distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

struct NearestResult {
  std::int64_t id = -1;
  double squared_dist = std::numeric_limits<double>::infinity();
};

/// Exact nearest-neighbor index over an immutable point set.
/// Median-split kd-tree, largest-spread axis, leaf size 16. Ties between
/// equidistant points resolve to the smallest point id, so results are
/// deterministic and match a brute-force scan.
class PointIndex {
 public:
  explicit PointIndex(const PointCloud& cloud) : points_(cloud.points) {
    require(!points_.empty(), "point index: cloud must be non-empty");
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::int64_t{0});
    nodes_.reserve(points_.size() / kLeafSize * 2 + 1);
    root_ = build(0, static_cast<std::int64_t>(points_.size()));
  }

  std::size_t size() const { return points_.size(); }

  NearestResult nearest(const Eigen::Vector3d& query) const {
    NearestResult best;
    search(root_, query, &best);
    return best;
  }

 private:
  static constexpr int kLeafSize = 16;

  struct Node {
    double split = 0.0;
    std::int32_t axis = -1;  // -1 marks a leaf
    std::int64_t left = -1;
    std::int64_t right = -1;
    std::int64_t begin = 0;
    std::int64_t end = 0;
  };

  std::int64_t build(std::int64_t begin, std::int64_t end) {
    Node node;
    node.begin = begin;
    node.end = end;
    const std::int64_t count = end - begin;
    if (count <= kLeafSize) {
      nodes_.push_back(node);
      return static_cast<std::int64_t>(nodes_.size()) - 1;
    }

    Eigen::Vector3d lo = points_[order_[begin]];
    Eigen::Vector3d hi = lo;
    for (std::int64_t i = begin + 1; i < end; ++i) {
      lo = lo.cwiseMin(points_[order_[i]]);
      hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi[axis] == lo[axis]) {  // all points coincide on every axis
      nodes_.push_back(node);
      return static_cast<std::int64_t>(nodes_.size()) - 1;
    }

    const std::int64_t mid = begin + count / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::int64_t a, std::int64_t b) {
                       return points_[a][axis] < points_[b][axis];
                     });
    node.axis = axis;
    node.split = points_[order_[mid]][axis];
    const std::int64_t self = static_cast<std::int64_t>(nodes_.size());
    nodes_.push_back(node);
    const std::int64_t left = build(begin, mid);
    const std::int64_t right = build(mid, end);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return self;
  }

  void scan_leaf(const Node& node, const Eigen::Vector3d& query, NearestResult* best) const {
    for (std::int64_t i = node.begin; i < node.end; ++i) {
      const std::int64_t id = order_[i];
      const double d2 = squared_distance(query, points_[id]);
      if (d2 < best->squared_dist ||
          (d2 == best->squared_dist && id < best->id)) {
        best->squared_dist = d2;
        best->id = id;
      }
    }
  }

  void search(std::int64_t node_id, const Eigen::Vector3d& query, NearestResult* best) const {
    const Node& node = nodes_[node_id];
    if (node.axis < 0) {
      scan_leaf(node, query, best);
      return;
    }
    const double diff = query[node.axis] - node.split;
    const std::int64_t near = diff < 0.0 ? node.left : node.right;
    const std::int64_t far = diff < 0.0 ? node.right : node.left;
    search(near, query, best);
    // Non-strict compare: an equidistant point with smaller id may sit
    // exactly on the far side of the splitting plane.
    if (diff * diff <= best->squared_dist) search(far, query, best);
  }

  std::vector<Eigen::Vector3d> points_;
  std::vector<std::int64_t> order_;
  std::vector<Node> nodes_;
  std::int64_t root_ = 0;
};

}  // namespace tofgeo
