#include "csplat/bins.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "csplat/errors.hpp"

namespace csplat {

BinSchedule partition_bins(const std::vector<int>& frame_timesteps,
                           int n_bins, int overlap) {
  if (n_bins < 1) throw std::invalid_argument("n_bins must be >= 1");
  if (n_bins > 1 && overlap < 1)
    throw std::invalid_argument("overlap must be >= 1 for multiple bins");
  std::set<int> unique(frame_timesteps.begin(), frame_timesteps.end());
  const std::vector<int> ts(unique.begin(), unique.end());
  const int m = int(ts.size());
  if (m < n_bins)
    throw InsufficientFramesError("fewer distinct timesteps than bins");

  BinSchedule schedule;
  for (int b = 0; b < n_bins; ++b) {
    const int lo = b * m / n_bins;
    const int hi = (b + 1) * m / n_bins - 1; // inclusive
    int start = lo;
    if (b > 0) {
      start = lo - overlap;
      if (start < 0 || (b > 1 && start < (b - 1) * m / n_bins))
        throw InsufficientFramesError(
            "overlap too large for the bin length");
    }
    BinSchedule::Bin bin;
    bin.t_start = ts[start];
    bin.t_end = ts[hi];
    bin.overlap_with_previous = b > 0 ? overlap : 0;
    for (std::size_t f = 0; f < frame_timesteps.size(); ++f)
      if (frame_timesteps[f] >= bin.t_start && frame_timesteps[f] <= bin.t_end)
        bin.frame_indices.push_back(int(f));
    schedule.bins.push_back(std::move(bin));
  }
  return schedule;
}

int derive_bin_count(const PointCloud& prior) {
  if (prior.empty()) return 1;
  Vec3d mn = prior.points[0].position, mx = mn;
  for (const auto& p : prior.points) {
    mn = mn.cwiseMin(p.position);
    mx = mx.cwiseMax(p.position);
  }
  const double diameter = (mx - mn).norm();
  return std::max(1, int(std::ceil(diameter / 30.0)));
}

GaussianField fuse_bin(const GaussianField& accumulated,
                       const GaussianField& bin_init, int freeze_iterations) {
  GaussianField fused = accumulated;
  fused.ensure_freeze();
  for (auto& f : fused.position_freeze) f = freeze_iterations;
  fused.append(bin_init); // appended Gaussians start unfrozen
  return fused;
}

std::vector<double> view_weights(const Vec3d& position,
                                 const std::vector<Camera>& cameras) {
  std::vector<double> weights(cameras.size(), 0.0);
  double sum = 0;
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    const Camera& cam = cameras[i];
    const Vec3d t = cam.world_to_cam(position);
    if (t.z() <= kDefaultZNear) continue;
    const Vec3d h = cam.intrinsics() * t;
    const double px = h.x() / h.z(), py = h.y() / h.z();
    if (px < 0 || px > cam.width() - 1 || py < 0 || py > cam.height() - 1)
      continue;
    const Vec3d to_point = position - cam.center();
    const double dist = to_point.norm();
    if (dist <= 0) continue;
    const double cos_angle = cam.forward().dot(to_point / dist);
    weights[i] = std::max(cos_angle, 0.0) / (dist * dist);
    sum += weights[i];
  }
  if (sum <= 0) throw NoVisibilityError("no camera sees the position");
  for (double& w : weights) w /= sum;
  return weights;
}

} // namespace csplat
