#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "csplat/gaussian.hpp"
#include "csplat/image.hpp"
#include "csplat/math_utils.hpp"

namespace csplat {

/// World- or sweep-frame point cloud with optional per-point color.
struct PointCloud {
  struct Point {
    Vec3d position = Vec3d::Zero();
    std::optional<Vec3f> color; // channels in [0,1]
    int source_timestep = 0;
  };
  std::vector<Point> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Transforms every sweep into the common world frame and concatenates.
/// Throws NonRigidPoseError when a pose rotation block is off by > 1e-4.
PointCloud merge_sweeps(
    const std::vector<std::pair<PointCloud, Mat4d>>& sweeps);

/// Assigns each point the bilinear sample of the in-bounds camera whose
/// center is closest to it. Cameras sharing the point's source timestep take
/// priority; with no timestep match all views are considered. Points visible
/// nowhere keep an absent color.
PointCloud colorize(const PointCloud& cloud,
                    const std::vector<std::pair<Image, Camera>>& views);

/// One centroid point per occupied voxel; colors averaged over members that
/// have one. Output is in sorted voxel-key order, independent of input
/// order.
PointCloud voxel_filter(const PointCloud& cloud, double voxel);

/// Statistical outlier removal: drops points whose mean distance to their
/// k nearest neighbors exceeds mean + std_mult * std of that statistic.
PointCloud remove_outliers(const PointCloud& cloud, int k = 8,
                           double std_mult = 2.0);

/// One Gaussian per point: isotropic scale ln(mean distance to 3 nearest
/// neighbors), DC color from the point color (mid-gray when absent),
/// identity rotation, opacity 0.1. Throws TooFewPointsError below 4 points.
GaussianField init_field(const PointCloud& cloud);

} // namespace csplat
