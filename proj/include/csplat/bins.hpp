#pragma once

#include <vector>

#include "csplat/gaussian.hpp"
#include "csplat/point_cloud.hpp"

namespace csplat {

/// Chronological partition of the sequence for incremental static training.
/// Consecutive bins share `overlap` timesteps; those frames supervise both.
struct BinSchedule {
  struct Bin {
    int t_start = 0, t_end = 0;          // inclusive timestep range
    std::vector<int> frame_indices;      // indices into the input frame list
    int overlap_with_previous = 0;       // shared timesteps with bin - 1
  };
  std::vector<Bin> bins;
};

/// Splits the frames' timesteps into n_bins near-equal contiguous runs; each
/// bin after the first is extended backward by `overlap` timesteps. Throws
/// InsufficientFramesError when there are fewer distinct timesteps than bins
/// or the overlap would make a frame member of three bins.
BinSchedule partition_bins(const std::vector<int>& frame_timesteps,
                           int n_bins, int overlap);

/// Bin count heuristic from the point prior's spatial extent: one bin per
/// 30 m of scene diameter, at least one.
int derive_bin_count(const PointCloud& prior);

/// Set union of the accumulated field with a freshly initialized bin field.
/// Accumulated Gaussians get a position warm-up freeze for the next training
/// pass; values are never mutated, only concatenated and flagged.
GaussianField fuse_bin(const GaussianField& accumulated,
                       const GaussianField& bin_init,
                       int freeze_iterations = 500);

/// Per-camera supervision weights for a point: cos(angle to the camera
/// forward axis) / distance^2 over cameras that see it, normalized to sum 1;
/// invisible cameras get 0. Throws NoVisibilityError when nothing sees it.
std::vector<double> view_weights(const Vec3d& position,
                                 const std::vector<Camera>& cameras);

} // namespace csplat
