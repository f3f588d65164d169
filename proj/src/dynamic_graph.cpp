#include "csplat/dynamic_graph.hpp"

#include <algorithm>
#include <cmath>

#include "csplat/errors.hpp"
#include "csplat/parallel.hpp"
#include "csplat/sh_rotation.hpp"

namespace csplat {

namespace {

double lerp_angle(double a, double b, double f) {
  double diff = std::fmod(b - a, 2.0 * M_PI);
  if (diff > M_PI) diff -= 2.0 * M_PI;
  if (diff < -M_PI) diff += 2.0 * M_PI;
  return a + f * diff;
}

} // namespace

Mat3d box_rotation(double yaw, double pitch) {
  return (Eigen::AngleAxisd(yaw, Vec3d::UnitY()) *
          Eigen::AngleAxisd(pitch, Vec3d::UnitX()))
      .toRotationMatrix();
}

void BBoxTrack::validate() const {
  if (poses.empty()) throw std::invalid_argument("track has no poses");
  for (std::size_t i = 0; i < poses.size(); ++i) {
    if (i > 0 && poses[i].timestep <= poses[i - 1].timestep)
      throw std::invalid_argument("track timesteps must strictly increase");
    if ((poses[i].extent.array() <= 0).any())
      throw std::invalid_argument("box extents must be positive");
  }
}

BoxPose BBoxTrack::interpolate(double t) const {
  if (!contains(t))
    throw OutsideLifespanError("t=" + std::to_string(t) +
                               " outside the track of " + object_id);
  auto hi = std::lower_bound(
      poses.begin(), poses.end(), t,
      [](const BoxPose& p, double v) { return p.timestep < v; });
  if (hi == poses.begin()) return *hi;
  if (hi == poses.end()) return poses.back();
  const BoxPose& a = *(hi - 1);
  const BoxPose& b = *hi;
  if (double(a.timestep) == t) return a;
  const double f = (t - a.timestep) / double(b.timestep - a.timestep);
  BoxPose out;
  out.timestep = int(std::lround(t));
  out.center = (1 - f) * a.center + f * b.center;
  out.extent = (1 - f) * a.extent + f * b.extent;
  out.yaw = lerp_angle(a.yaw, b.yaw, f);
  out.pitch = lerp_angle(a.pitch, b.pitch, f);
  return out;
}

const GaussianField& DynamicNode::frame_at(double t) const {
  if (frames.size() == 1) return frames.front();
  const int offset = int(std::lround(t)) - track.first_timestep();
  const int n = int(frames.size());
  return frames[std::size_t(((offset % n) + n) % n)];
}

void GaussianGraph::add_node(const std::string& object_id,
                             std::vector<GaussianField> node_frames,
                             BBoxTrack track) {
  if (nodes.count(object_id))
    throw DuplicateObjectIdError("object id already present: " + object_id);
  if (node_frames.empty())
    throw std::invalid_argument("node needs at least one Gaussian frame");
  track.object_id = object_id;
  track.validate();
  const Vec3d half = track.poses.front().extent * 0.5 * 1.1; // 10% slack
  for (const auto& frame : node_frames)
    for (const auto& g : frame.gaussians) {
      const Vec3d p = g.position.cast<double>();
      if ((p.cwiseAbs().array() > half.array()).any())
        throw std::invalid_argument(
            "canonical Gaussians exceed the extent box of " + object_id);
    }
  DynamicNode node;
  node.object_id = object_id;
  node.frames = std::move(node_frames);
  node.track = std::move(track);
  nodes.emplace(object_id, std::move(node));
}

void GaussianGraph::add_node(const std::string& object_id,
                             GaussianField gaussians, BBoxTrack track) {
  std::vector<GaussianField> frames;
  frames.push_back(std::move(gaussians));
  add_node(object_id, std::move(frames), std::move(track));
}

std::vector<Gaussian> node_to_world(const DynamicNode& node, double t) {
  const BoxPose pose = node.track.interpolate(t);
  const Mat3d r = box_rotation(pose.yaw, pose.pitch);
  const bool is_identity =
      (r - Mat3d::Identity()).cwiseAbs().maxCoeff() < 1e-15;
  ShRotation sh_rot;
  if (!is_identity) sh_rot = ShRotation::from_rotation(r);
  const Eigen::Quaterniond rq(r);

  const GaussianField& frame = node.frame_at(t);
  std::vector<Gaussian> out(frame.gaussians.size());
  parallel_for(frame.gaussians.size(), [&](std::size_t i) {
    const Gaussian& src = frame.gaussians[i];
    Gaussian g = src;
    g.position = (r * src.position.cast<double>() + pose.center).cast<float>();
    if (!is_identity) {
      const Eigen::Quaterniond q0(src.rotation[0], src.rotation[1],
                                  src.rotation[2], src.rotation[3]);
      const Eigen::Quaterniond q = (rq * q0).normalized();
      g.rotation = Eigen::Vector4f(float(q.w()), float(q.x()), float(q.y()),
                                   float(q.z()));
      g.sh_coeffs = sh_rot.apply(src.sh_coeffs);
    }
    out[i] = g;
  });
  return out;
}

double occlusion_opacity(const DynamicNode& node, const Camera& cam, double t,
                         double reference_distance) {
  const BoxPose pose = node.track.interpolate(t);
  const double dist = (pose.center - cam.center()).norm();
  if (dist <= reference_distance) return 1.0;
  const double ratio = reference_distance / dist;
  return ratio * ratio;
}

GaussianField compose(const GaussianField& static_field,
                      const GaussianGraph& graph, double t, const Camera* cam,
                      double reference_distance) {
  GaussianField out = static_field;
  bool any = false;
  for (const auto& [id, node] : graph.nodes)
    if (node.track.contains(t)) any = true;
  if (!any) return out;

  out.ensure_tags();
  for (const auto& [id, node] : graph.nodes) {
    if (!node.track.contains(t)) continue;
    double mult = 1.0;
    if (cam) mult = occlusion_opacity(node, *cam, t, reference_distance);
    auto world = node_to_world(node, t);
    if (mult < 1.0) {
      for (auto& g : world) {
        const double adjusted = mult * sigmoid(double(g.opacity_logit));
        g.opacity_logit = float(logit(std::clamp(adjusted, 1e-9, 1.0 - 1e-9)));
      }
    }
    for (auto& g : world) {
      out.gaussians.push_back(std::move(g));
      out.tags.push_back(id);
    }
  }
  return out;
}

} // namespace csplat
