#pragma once

#include "ssmchaos/trajectory.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <queue>
#include <vector>

namespace ssm {

/// Static kd-tree over the rows of a point matrix. Supports k-nearest queries
/// with an optional index-exclusion window (Theiler correction for time
/// series, where temporal neighbors are not genuine spatial neighbors).
class KdTree {
 public:
  KdTree() = default;

  explicit KdTree(const Matrix& points) : pts_(points) {
    const auto n = static_cast<std::int64_t>(pts_.rows());
    perm_.resize(n);
    std::iota(perm_.begin(), perm_.end(), 0);
    nodes_.reserve(2 * n);
    if (n > 0) root_ = build(0, n);
  }

  struct Neighbor {
    std::int64_t index;
    double dist2;
  };

  /// k nearest rows to `query`, ascending by distance. Rows with
  /// |index - exclude_center| <= exclude_radius are skipped when
  /// exclude_radius >= 0.
  std::vector<Neighbor> nearest(const Vector& query, int k,
                                std::int64_t exclude_center = -1,
                                std::int64_t exclude_radius = -1) const {
    Heap heap;
    if (root_ >= 0) search(root_, query, k, exclude_center, exclude_radius, heap);
    std::vector<Neighbor> out(heap.size());
    for (auto i = static_cast<std::int64_t>(out.size()) - 1; i >= 0; --i) {
      out[static_cast<std::size_t>(i)] = heap.top();
      heap.pop();
    }
    return out;
  }

  std::int64_t size() const { return pts_.rows(); }
  const Matrix& points() const { return pts_; }

 private:
  struct Node {
    std::int64_t left = -1, right = -1;
    std::int64_t begin = 0, end = 0;  // leaf range into perm_
    int axis = -1;
    double split = 0.0;
  };

  struct Cmp {
    bool operator()(const Neighbor& a, const Neighbor& b) const { return a.dist2 < b.dist2; }
  };
  using Heap = std::priority_queue<Neighbor, std::vector<Neighbor>, Cmp>;

  static constexpr std::int64_t kLeafSize = 16;

  std::int64_t build(std::int64_t begin, std::int64_t end) {
    Node node;
    if (end - begin <= kLeafSize) {
      node.begin = begin;
      node.end = end;
      nodes_.push_back(node);
      return static_cast<std::int64_t>(nodes_.size()) - 1;
    }
    // split on the axis with the largest spread
    const int dim = static_cast<int>(pts_.cols());
    int best_axis = 0;
    double best_spread = -1.0;
    for (int a = 0; a < dim; ++a) {
      double lo = pts_(perm_[begin], a), hi = lo;
      for (std::int64_t i = begin + 1; i < end; ++i) {
        const double v = pts_(perm_[i], a);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi - lo > best_spread) {
        best_spread = hi - lo;
        best_axis = a;
      }
    }
    const std::int64_t mid = (begin + end) / 2;
    std::nth_element(perm_.begin() + begin, perm_.begin() + mid, perm_.begin() + end,
                     [&](std::int64_t a, std::int64_t b) {
                       return pts_(a, best_axis) < pts_(b, best_axis);
                     });
    node.axis = best_axis;
    node.split = pts_(perm_[mid], best_axis);
    const auto self = static_cast<std::int64_t>(nodes_.size());
    nodes_.push_back(node);
    const auto left = build(begin, mid);
    const auto right = build(mid, end);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return self;
  }

  void search(std::int64_t ni, const Vector& q, int k, std::int64_t ex_c, std::int64_t ex_r,
              Heap& heap) const {
    const Node& node = nodes_[ni];
    if (node.axis < 0) {
      for (std::int64_t i = node.begin; i < node.end; ++i) {
        const std::int64_t idx = perm_[i];
        if (ex_r >= 0 && std::abs(idx - ex_c) <= ex_r) continue;
        const double d2 = (pts_.row(idx).transpose() - q).squaredNorm();
        if (static_cast<int>(heap.size()) < k) {
          heap.push({idx, d2});
        } else if (d2 < heap.top().dist2) {
          heap.pop();
          heap.push({idx, d2});
        }
      }
      return;
    }
    const double delta = q[node.axis] - node.split;
    const std::int64_t near = delta < 0.0 ? node.left : node.right;
    const std::int64_t far = delta < 0.0 ? node.right : node.left;
    search(near, q, k, ex_c, ex_r, heap);
    if (static_cast<int>(heap.size()) < k || delta * delta < heap.top().dist2)
      search(far, q, k, ex_c, ex_r, heap);
  }

  Matrix pts_;
  std::vector<std::int64_t> perm_;
  std::vector<Node> nodes_;
  std::int64_t root_ = -1;
};

}  // namespace ssm
