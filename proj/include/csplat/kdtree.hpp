#pragma once

#include <limits>
#include <vector>

#include "csplat/math_utils.hpp"

namespace csplat {

/// Static 3D kd-tree for nearest-neighbor queries. Built once over a point
/// set; queries are const and thread-safe.
class KdTree3 {
public:
  KdTree3() = default;
  explicit KdTree3(std::vector<Vec3d> points) { build(std::move(points)); }

  void build(std::vector<Vec3d> points);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const std::vector<Vec3d>& points() const { return points_; }

  struct Result {
    int index = -1;
    double dist_sq = std::numeric_limits<double>::infinity();
  };

  /// Index and squared distance of the closest point; index -1 when empty.
  Result nearest(const Vec3d& query) const;

  /// Squared distances of the k closest points (ascending), for neighbor
  /// statistics. `exclude` skips one index (typically the query point
  /// itself when querying tree members).
  std::vector<Result> k_nearest(const Vec3d& query, int k,
                                int exclude = -1) const;

private:
  struct Node {
    int point = -1;
    int left = -1, right = -1;
    int axis = 0;
  };

  int build_range(std::vector<int>& order, int lo, int hi);
  void search(int node, const Vec3d& q, Result& best) const;
  void search_k(int node, const Vec3d& q, int k, int exclude,
                std::vector<Result>& heap) const;

  std::vector<Vec3d> points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

} // namespace csplat
