#include "osclab/kdtree.hpp"

#include <algorithm>
#include <cmath>

namespace osclab {

namespace {
constexpr std::uint32_t kLeafSize = 16;
}

KdTree::KdTree(const double* coords, std::size_t count, int dim)
    : coords_(coords), dim_(dim) {
  order_.resize(count);
  for (std::size_t i = 0; i < count; ++i) order_[i] = static_cast<std::uint32_t>(i);
  nodes_.reserve(count / kLeafSize * 2 + 4);
  if (count > 0) build(0, static_cast<std::uint32_t>(count));
}

int KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({});
  Node node;
  node.begin = begin;
  node.end = end;
  node.box = static_cast<std::uint32_t>(boxes_.size());
  boxes_.resize(boxes_.size() + 2 * static_cast<std::size_t>(dim_));
  double* lo = &boxes_[node.box];
  double* hi = lo + dim_;
  for (int k = 0; k < dim_; ++k) {
    lo[k] = coords_[static_cast<std::size_t>(order_[begin]) * dim_ + k];
    hi[k] = lo[k];
  }
  for (std::uint32_t i = begin + 1; i < end; ++i) {
    const double* p = coords_ + static_cast<std::size_t>(order_[i]) * dim_;
    for (int k = 0; k < dim_; ++k) {
      lo[k] = std::min(lo[k], p[k]);
      hi[k] = std::max(hi[k], p[k]);
    }
  }
  if (end - begin > kLeafSize) {
    int axis = 0;
    double extent = hi[0] - lo[0];
    for (int k = 1; k < dim_; ++k) {
      const double e = hi[k] - lo[k];
      if (e > extent) { extent = e; axis = k; }
    }
    if (extent > 0.0) {
      const std::uint32_t mid = begin + (end - begin) / 2;
      const auto key = [&](std::uint32_t idx) {
        return coords_[static_cast<std::size_t>(idx) * dim_ + axis];
      };
      std::nth_element(order_.begin() + begin, order_.begin() + mid,
                       order_.begin() + end,
                       [&](std::uint32_t a, std::uint32_t b) {
                         const double ka = key(a), kb = key(b);
                         return ka < kb || (ka == kb && a < b);
                       });
      node.left = build(begin, mid);
      node.right = build(mid, end);
      // boxes_ may have been reallocated by the recursive calls
    }
  }
  nodes_[id] = node;
  return id;
}

void KdTree::query(int id, const double* center, double r2,
                   std::vector<std::uint32_t>& out) const {
  const Node& node = nodes_[id];
  const double* lo = &boxes_[node.box];
  const double* hi = lo + dim_;
  // Lower bound on dist2 from center to the box. Each term is computed with
  // the same subtract/square/accumulate shape as dist2 itself, and every
  // rounding step is monotone, so mind2 <= dist2(center, p) for all boxed p.
  double mind2 = 0.0;
  for (int k = 0; k < dim_; ++k) {
    double d = 0.0;
    if (center[k] < lo[k]) d = lo[k] - center[k];
    else if (center[k] > hi[k]) d = center[k] - hi[k];
    mind2 += d * d;
  }
  if (mind2 > r2) return;
  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const std::uint32_t idx = order_[i];
      if (dist2(coords_ + static_cast<std::size_t>(idx) * dim_, center, dim_) <= r2) {
        out.push_back(idx);
      }
    }
    return;
  }
  query(node.left, center, r2, out);
  query(node.right, center, r2, out);
}

void KdTree::query_ball(const double* center, double radius,
                        std::vector<std::uint32_t>& out) const {
  out.clear();
  if (nodes_.empty() || radius < 0.0) return;
  query(0, center, radius * radius, out);
  std::sort(out.begin(), out.end());
}

}  // namespace osclab
