#include "csplat/kdtree.hpp"

#include <algorithm>
#include <numeric>

namespace csplat {

void KdTree3::build(std::vector<Vec3d> points) {
  points_ = std::move(points);
  nodes_.clear();
  nodes_.reserve(points_.size());
  std::vector<int> order(points_.size());
  std::iota(order.begin(), order.end(), 0);
  root_ = build_range(order, 0, int(order.size()));
}

int KdTree3::build_range(std::vector<int>& order, int lo, int hi) {
  if (lo >= hi) return -1;
  // Split on the widest axis of the range's bounding box.
  Vec3d mn = points_[order[lo]], mx = mn;
  for (int i = lo + 1; i < hi; ++i) {
    mn = mn.cwiseMin(points_[order[i]]);
    mx = mx.cwiseMax(points_[order[i]]);
  }
  int axis = 0;
  (mx - mn).maxCoeff(&axis);
  const int mid = (lo + hi) / 2;
  std::nth_element(order.begin() + lo, order.begin() + mid,
                   order.begin() + hi, [&](int a, int b) {
                     if (points_[a][axis] != points_[b][axis])
                       return points_[a][axis] < points_[b][axis];
                     return a < b; // deterministic ties
                   });
  const int node_idx = int(nodes_.size());
  nodes_.push_back(Node{order[mid], -1, -1, axis});
  const int left = build_range(order, lo, mid);
  const int right = build_range(order, mid + 1, hi);
  nodes_[node_idx].left = left;
  nodes_[node_idx].right = right;
  return node_idx;
}

KdTree3::Result KdTree3::nearest(const Vec3d& query) const {
  Result best;
  search(root_, query, best);
  return best;
}

void KdTree3::search(int node, const Vec3d& q, Result& best) const {
  if (node < 0) return;
  const Node& n = nodes_[node];
  const Vec3d& p = points_[n.point];
  const double d2 = (p - q).squaredNorm();
  if (d2 < best.dist_sq || (d2 == best.dist_sq && n.point < best.index)) {
    best.dist_sq = d2;
    best.index = n.point;
  }
  const double delta = q[n.axis] - p[n.axis];
  const int first = delta < 0 ? n.left : n.right;
  const int second = delta < 0 ? n.right : n.left;
  search(first, q, best);
  if (delta * delta <= best.dist_sq) search(second, q, best);
}

std::vector<KdTree3::Result> KdTree3::k_nearest(const Vec3d& query, int k,
                                                int exclude) const {
  std::vector<Result> heap; // max-heap on dist_sq
  heap.reserve(k + 1);
  search_k(root_, query, k, exclude, heap);
  std::sort(heap.begin(), heap.end(), [](const Result& a, const Result& b) {
    if (a.dist_sq != b.dist_sq) return a.dist_sq < b.dist_sq;
    return a.index < b.index;
  });
  return heap;
}

void KdTree3::search_k(int node, const Vec3d& q, int k, int exclude,
                       std::vector<Result>& heap) const {
  if (node < 0) return;
  const Node& n = nodes_[node];
  const auto cmp = [](const Result& a, const Result& b) {
    return a.dist_sq < b.dist_sq;
  };
  if (n.point != exclude) {
    const double d2 = (points_[n.point] - q).squaredNorm();
    if (int(heap.size()) < k) {
      heap.push_back(Result{n.point, d2});
      std::push_heap(heap.begin(), heap.end(), cmp);
    } else if (d2 < heap.front().dist_sq) {
      std::pop_heap(heap.begin(), heap.end(), cmp);
      heap.back() = Result{n.point, d2};
      std::push_heap(heap.begin(), heap.end(), cmp);
    }
  }
  const double delta = q[n.axis] - points_[n.point][n.axis];
  const int first = delta < 0 ? n.left : n.right;
  const int second = delta < 0 ? n.right : n.left;
  search_k(first, q, k, exclude, heap);
  if (int(heap.size()) < k || delta * delta <= heap.front().dist_sq)
    search_k(second, q, k, exclude, heap);
}

} // namespace csplat
