#pragma once

#include <map>
#include <string>
#include <vector>

#include "csplat/gaussian.hpp"

namespace csplat {

/// One annotated box pose: center, yaw/pitch orientation and extent at a
/// timestep.
struct BoxPose {
  int timestep = 0;
  Vec3d center = Vec3d::Zero();
  double yaw = 0.0;   // about +y (vertical), radians
  double pitch = 0.0; // about the box x axis after yaw, radians
  Vec3d extent = Vec3d::Ones(); // full box size, meters
};

/// Time-indexed box track of one object. Timesteps strictly increase.
struct BBoxTrack {
  std::string object_id;
  std::vector<BoxPose> poses;

  int first_timestep() const { return poses.front().timestep; }
  int last_timestep() const { return poses.back().timestep; }
  bool contains(double t) const {
    return !poses.empty() && t >= first_timestep() && t <= last_timestep();
  }

  /// Linear interpolation for the center and extent, shortest-path angular
  /// interpolation for yaw/pitch. Throws OutsideLifespanError.
  BoxPose interpolate(double t) const;

  void validate() const;
};

/// Box orientation as a rotation matrix: yaw about +y, then pitch.
Mat3d box_rotation(double yaw, double pitch);

/// One dynamic object: Gaussians in the canonical (box-local) frame plus the
/// pose track. Multiple frames form a cyclic 4D asset; single-frame nodes
/// are rigid.
struct DynamicNode {
  std::string object_id;
  std::vector<GaussianField> frames; // >= 1, canonical frame
  BBoxTrack track;

  const GaussianField& frame_at(double t) const;
  GaussianField& base_frame() { return frames.front(); }
  const GaussianField& base_frame() const { return frames.front(); }
};

/// The composite dynamic object graph: unique object ids to nodes.
struct GaussianGraph {
  std::map<std::string, DynamicNode> nodes;

  bool empty() const { return nodes.empty(); }

  /// Stores a node whose canonical frame is the box frame at the track's
  /// first timestep. Throws DuplicateObjectIdError; validates that the
  /// Gaussians lie inside the extent box within 10% slack.
  void add_node(const std::string& object_id,
                std::vector<GaussianField> frames, BBoxTrack track);
  void add_node(const std::string& object_id, GaussianField gaussians,
                BBoxTrack track);
};

/// Canonical-frame Gaussians mapped rigidly into the world at time t:
/// positions transformed, covariances conjugated, SH rotated for bands >= 1.
/// Throws OutsideLifespanError (no extrapolation).
std::vector<Gaussian> node_to_world(const DynamicNode& node, double t);

/// Distance-based opacity multiplier min(1, (r_ref / dist)^2) between the
/// box center at t and the camera center; nearer objects stay more opaque.
double occlusion_opacity(const DynamicNode& node, const Camera& cam, double t,
                         double reference_distance);

/// Static field plus every in-lifespan node at time t, with provenance tags
/// and (when a camera is given) the occlusion multiplier folded into the
/// node opacities. Static Gaussians are copied bit-identically.
GaussianField compose(const GaussianField& static_field,
                      const GaussianGraph& graph, double t,
                      const Camera* cam = nullptr,
                      double reference_distance = 10.0);

} // namespace csplat
