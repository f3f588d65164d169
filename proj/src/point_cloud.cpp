#include "csplat/point_cloud.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "csplat/errors.hpp"
#include "csplat/kdtree.hpp"
#include "csplat/parallel.hpp"

namespace csplat {

PointCloud merge_sweeps(
    const std::vector<std::pair<PointCloud, Mat4d>>& sweeps) {
  PointCloud out;
  std::size_t total = 0;
  for (const auto& [cloud, pose] : sweeps) total += cloud.size();
  out.points.reserve(total);
  for (const auto& [cloud, pose] : sweeps) {
    if (!is_rigid_transform(pose, 1e-4))
      throw NonRigidPoseError("sweep pose rotation is not orthonormal");
    const Mat3d r = pose.topLeftCorner<3, 3>();
    const Vec3d t = pose.topRightCorner<3, 1>();
    for (const auto& p : cloud.points) {
      PointCloud::Point q = p;
      q.position = r * p.position + t;
      out.points.push_back(std::move(q));
    }
  }
  return out;
}

/// Bilinear sample of an image channel at continuous pixel coordinates.
static float bilinear(const Image& img, double x, double y, int c) {
  const int x0 = std::clamp(int(std::floor(x)), 0, img.width() - 1);
  const int y0 = std::clamp(int(std::floor(y)), 0, img.height() - 1);
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double fx = std::clamp(x - x0, 0.0, 1.0);
  const double fy = std::clamp(y - y0, 0.0, 1.0);
  const double v = (1 - fy) * ((1 - fx) * img.at(y0, x0, c) +
                               fx * img.at(y0, x1, c)) +
                   fy * ((1 - fx) * img.at(y1, x0, c) +
                         fx * img.at(y1, x1, c));
  return float(v);
}

PointCloud colorize(const PointCloud& cloud,
                    const std::vector<std::pair<Image, Camera>>& views) {
  PointCloud out = cloud;
  parallel_for(out.points.size(), [&](std::size_t i) {
    auto& pt = out.points[i];
    bool any_timestep_match = false;
    for (const auto& [img, cam] : views)
      if (cam.timestep() == pt.source_timestep) any_timestep_match = true;

    double best_dist = std::numeric_limits<double>::infinity();
    Vec3f best_color = Vec3f::Zero();
    bool found = false;
    for (const auto& [img, cam] : views) {
      if (any_timestep_match && cam.timestep() != pt.source_timestep)
        continue;
      const Vec3d t = cam.world_to_cam(pt.position);
      if (t.z() <= kDefaultZNear) continue;
      const Vec3d h = cam.intrinsics() * t;
      const double px = h.x() / h.z(), py = h.y() / h.z();
      if (px < 0 || px > cam.width() - 1 || py < 0 || py > cam.height() - 1)
        continue;
      const double dist = (pt.position - cam.center()).norm();
      if (dist < best_dist) {
        best_dist = dist;
        best_color = Vec3f(bilinear(img, px, py, 0), bilinear(img, px, py, 1),
                           bilinear(img, px, py, 2));
        found = true;
      }
    }
    if (found) pt.color = best_color;
  });
  return out;
}

PointCloud voxel_filter(const PointCloud& cloud, double voxel) {
  if (voxel <= 0) throw std::invalid_argument("voxel size must be positive");
  using Key = std::tuple<int64_t, int64_t, int64_t>;
  struct Cell {
    Vec3d pos_sum = Vec3d::Zero();
    Vec3d color_sum = Vec3d::Zero();
    int count = 0, color_count = 0;
    int timestep = std::numeric_limits<int>::max();
  };
  std::map<Key, Cell> cells; // ordered: output independent of input order
  for (const auto& p : cloud.points) {
    const Key key{int64_t(std::floor(p.position.x() / voxel)),
                  int64_t(std::floor(p.position.y() / voxel)),
                  int64_t(std::floor(p.position.z() / voxel))};
    Cell& c = cells[key];
    c.pos_sum += p.position;
    c.count++;
    if (p.color) {
      c.color_sum += p.color->cast<double>();
      c.color_count++;
    }
    c.timestep = std::min(c.timestep, p.source_timestep);
  }
  PointCloud out;
  out.points.reserve(cells.size());
  for (const auto& [key, c] : cells) {
    PointCloud::Point p;
    p.position = c.pos_sum / c.count;
    if (c.color_count > 0)
      p.color = (c.color_sum / c.color_count).cast<float>();
    p.source_timestep = c.timestep;
    out.points.push_back(std::move(p));
  }
  return out;
}

PointCloud remove_outliers(const PointCloud& cloud, int k, double std_mult) {
  if (int(cloud.size()) <= k + 1) return cloud;
  std::vector<Vec3d> pos(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    pos[i] = cloud.points[i].position;
  KdTree3 tree(pos);
  std::vector<double> mean_dist(cloud.size());
  parallel_for(cloud.size(), [&](std::size_t i) {
    const auto nn = tree.k_nearest(pos[i], k, int(i));
    double sum = 0;
    for (const auto& r : nn) sum += std::sqrt(r.dist_sq);
    mean_dist[i] = nn.empty() ? 0.0 : sum / nn.size();
  });
  double mu = 0;
  for (double d : mean_dist) mu += d;
  mu /= mean_dist.size();
  double var = 0;
  for (double d : mean_dist) var += (d - mu) * (d - mu);
  const double sd = std::sqrt(var / mean_dist.size());
  const double cutoff = mu + std_mult * sd;
  PointCloud out;
  out.points.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (mean_dist[i] <= cutoff) out.points.push_back(cloud.points[i]);
  return out;
}

GaussianField init_field(const PointCloud& cloud) {
  if (cloud.size() < 4)
    throw TooFewPointsError("need at least 4 points for neighbor statistics");
  std::vector<Vec3d> pos(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    pos[i] = cloud.points[i].position;
  KdTree3 tree(pos);

  GaussianField field;
  field.sh_degree_active = 0;
  field.gaussians.resize(cloud.size());
  parallel_for(cloud.size(), [&](std::size_t i) {
    const auto& pt = cloud.points[i];
    Gaussian& g = field.gaussians[i];
    g.position = pt.position.cast<float>();
    const auto nn = tree.k_nearest(pos[i], 3, int(i));
    double mean = 0;
    for (const auto& r : nn) mean += std::sqrt(r.dist_sq);
    mean = nn.empty() ? 1.0 : mean / nn.size();
    mean = std::max(mean, 1e-7);
    g.log_scale.setConstant(float(std::log(mean)));
    g.rotation = Eigen::Vector4f(1, 0, 0, 0);
    const Vec3f color = pt.color.value_or(Vec3f(0.5f, 0.5f, 0.5f));
    for (int c = 0; c < 3; ++c)
      g.sh_coeffs(0, c) = float(sh::dc_from_color(color[c]));
    g.opacity_logit = float(logit(0.1));
  });
  return field;
}

} // namespace csplat
