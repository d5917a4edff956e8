#pragma once

#include <cstdint>
#include <vector>

namespace osclab {

/// Static kd-tree over a fixed point set. Range queries return exactly the
/// same index set as a linear scan with the predicate dist2(p, q) <= r*r,
/// where dist2 sums squared coordinate differences in coordinate order.
/// Pruning only uses bounds that round monotonically, and candidate leaves
/// re-test every point with that same predicate, so no boundary point is
/// ever dropped or added relative to the scan.
class KdTree {
 public:
  KdTree() = default;
  KdTree(const double* coords, std::size_t count, int dim);

  /// Indices of points with dist2(point, center) <= radius*radius, ascending.
  void query_ball(const double* center, double radius,
                  std::vector<std::uint32_t>& out) const;

  static double dist2(const double* a, const double* b, int dim) {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) {
      const double d = a[k] - b[k];
      s += d * d;
    }
    return s;
  }

  bool empty() const { return nodes_.empty(); }

 private:
  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint32_t box = 0;  // offset into boxes_ (2 * dim doubles: lo then hi)
  };

  int build(std::uint32_t begin, std::uint32_t end);
  void query(int node, const double* center, double r2,
             std::vector<std::uint32_t>& out) const;

  const double* coords_ = nullptr;
  int dim_ = 0;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::vector<double> boxes_;
};

}  // namespace osclab
