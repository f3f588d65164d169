#include "csplat/gaussian.hpp"

#include <stdexcept>

#include "csplat/errors.hpp"

namespace csplat {

Mat3d Gaussian::covariance() const {
  return build_covariance(log_scale.cast<double>(),
                          rotation.cast<double>());
}

Camera::Camera(const Mat3d& intrinsics, const Mat4d& world_to_camera,
               int width, int height, int timestep)
    : intrinsics_(intrinsics), world_to_camera_(world_to_camera),
      width_(width), height_(height), timestep_(timestep) {
  if (!is_rigid_transform(world_to_camera_))
    throw NonRigidPoseError("camera world_to_camera is not a rigid transform");
  if (fx() <= 0 || fy() <= 0)
    throw std::invalid_argument("camera focal lengths must be positive");
  if (cx() < 0 || cx() >= width || cy() < 0 || cy() >= height)
    throw std::invalid_argument("camera principal point outside image");
}

Camera Camera::from_fov(double fx, double fy, double cx, double cy,
                        const Mat4d& world_to_camera, int width, int height,
                        int timestep) {
  Mat3d k = Mat3d::Identity();
  k(0, 0) = fx;
  k(1, 1) = fy;
  k(0, 2) = cx;
  k(1, 2) = cy;
  return Camera(k, world_to_camera, width, height, timestep);
}

void GaussianField::ensure_tags() {
  if (tags.size() != gaussians.size()) tags.assign(gaussians.size(), "static");
}

void GaussianField::ensure_freeze() {
  if (position_freeze.size() != gaussians.size())
    position_freeze.assign(gaussians.size(), 0);
}

std::size_t GaussianField::append(const GaussianField& other,
                                  const std::string& tag) {
  const std::size_t first = gaussians.size();
  const bool need_tags = !tags.empty() || !tag.empty() || !other.tags.empty();
  if (need_tags) ensure_tags();
  if (!position_freeze.empty()) ensure_freeze();
  gaussians.insert(gaussians.end(), other.gaussians.begin(),
                   other.gaussians.end());
  if (need_tags) {
    for (std::size_t i = 0; i < other.gaussians.size(); ++i)
      tags.push_back(!tag.empty() ? tag
                                  : (other.tags.empty() ? std::string("static")
                                                        : other.tags[i]));
  }
  if (!position_freeze.empty()) position_freeze.resize(gaussians.size(), 0);
  return first;
}

Mat3d build_covariance(const Vec3d& log_scale, const Vec4d& rotation_wxyz) {
  const Mat3d r = quat_to_rotation(rotation_wxyz);
  const Vec3d s = log_scale.array().exp();
  Mat3d m = r * s.asDiagonal();
  return m * m.transpose();
}

ProjectedPoint project_point(const Vec3d& p, const Camera& cam,
                             double z_near) {
  const Vec3d t = cam.world_to_cam(p);
  if (t.z() <= z_near)
    throw BehindCameraError("point at depth " + std::to_string(t.z()) +
                            " is behind the near plane");
  const Vec3d h = cam.intrinsics() * t;
  return {Vec2d(h.x() / h.z(), h.y() / h.z()), t.z()};
}

Eigen::Matrix<double, 2, 3> projection_jacobian_cam(const Vec3d& t,
                                                    const Camera& cam) {
  const double z = t.z();
  const double fx = cam.fx(), fy = cam.fy();
  Eigen::Matrix<double, 2, 3> j;
  j << fx / z, 0, -fx * t.x() / (z * z), //
      0, fy / z, -fy * t.y() / (z * z);
  return j;
}

Mat2d project_covariance(const Mat3d& sigma, const Vec3d& p, const Camera& cam,
                         double z_near) {
  const Vec3d t = cam.world_to_cam(p);
  if (t.z() <= z_near)
    throw BehindCameraError("covariance projection behind the near plane");
  const Eigen::Matrix<double, 2, 3> j = projection_jacobian_cam(t, cam);
  const Mat3d w = cam.rotation();
  Mat2d out = j * w * sigma * w.transpose() * j.transpose();
  out(0, 0) += kCovarianceFloor;
  out(1, 1) += kCovarianceFloor;
  // Symmetrize against round-off.
  const double off = 0.5 * (out(0, 1) + out(1, 0));
  out(0, 1) = out(1, 0) = off;
  return out;
}

namespace sh {

namespace {
// Community constant table (degree <= 3).
constexpr double kC1 = 0.4886025119029199;
constexpr double kC2[5] = {1.0925484305920792, -1.0925484305920792,
                           0.31539156525252005, -1.0925484305920792,
                           0.5462742152960396};
constexpr double kC3[7] = {-0.5900435899266435, 2.890611442640554,
                           -0.4570457994644658, 0.3731763325901154,
                           -0.4570457994644658, 1.445305721320277,
                           -0.5900435899266435};
} // namespace

std::array<double, kNumCoeffs> basis(const Vec3d& dir) {
  const double x = dir.x(), y = dir.y(), z = dir.z();
  const double xx = x * x, yy = y * y, zz = z * z;
  const double xy = x * y, yz = y * z, xz = x * z;
  std::array<double, kNumCoeffs> b;
  b[0] = kC0;
  b[1] = -kC1 * y;
  b[2] = kC1 * z;
  b[3] = -kC1 * x;
  b[4] = kC2[0] * xy;
  b[5] = kC2[1] * yz;
  b[6] = kC2[2] * (2 * zz - xx - yy);
  b[7] = kC2[3] * xz;
  b[8] = kC2[4] * (xx - yy);
  b[9] = kC3[0] * y * (3 * xx - yy);
  b[10] = kC3[1] * xy * z;
  b[11] = kC3[2] * y * (4 * zz - xx - yy);
  b[12] = kC3[3] * z * (2 * zz - 3 * xx - 3 * yy);
  b[13] = kC3[4] * x * (4 * zz - xx - yy);
  b[14] = kC3[5] * z * (xx - yy);
  b[15] = kC3[6] * x * (xx - 3 * yy);
  return b;
}

std::array<Vec3d, kNumCoeffs> basis_grad(const Vec3d& dir) {
  const double x = dir.x(), y = dir.y(), z = dir.z();
  const double xx = x * x, yy = y * y, zz = z * z;
  std::array<Vec3d, kNumCoeffs> g;
  g[0] = Vec3d::Zero();
  g[1] = Vec3d(0, -kC1, 0);
  g[2] = Vec3d(0, 0, kC1);
  g[3] = Vec3d(-kC1, 0, 0);
  g[4] = kC2[0] * Vec3d(y, x, 0);
  g[5] = kC2[1] * Vec3d(0, z, y);
  g[6] = kC2[2] * Vec3d(-2 * x, -2 * y, 4 * z);
  g[7] = kC2[3] * Vec3d(z, 0, x);
  g[8] = kC2[4] * Vec3d(2 * x, -2 * y, 0);
  g[9] = kC3[0] * Vec3d(6 * x * y, 3 * xx - 3 * yy, 0);
  g[10] = kC3[1] * Vec3d(y * z, x * z, x * y);
  g[11] = kC3[2] * Vec3d(-2 * x * y, 4 * zz - xx - 3 * yy, 8 * y * z);
  g[12] = kC3[3] * Vec3d(-6 * x * z, -6 * y * z, 6 * zz - 3 * xx - 3 * yy);
  g[13] = kC3[4] * Vec3d(4 * zz - 3 * xx - yy, -2 * x * y, 8 * x * z);
  g[14] = kC3[5] * Vec3d(2 * x * z, -2 * y * z, xx - yy);
  g[15] = kC3[6] * Vec3d(3 * xx - 3 * yy, -6 * x * y, 0);
  return g;
}

} // namespace sh

Vec3d eval_sh(const Eigen::Matrix<float, 16, 3>& coeffs, const Vec3d& dir,
              int degree) {
  const auto b = sh::basis(dir);
  const int n = sh::coeff_count(degree);
  Vec3d rgb = Vec3d::Zero();
  for (int k = 0; k < n; ++k)
    rgb += b[k] * coeffs.row(k).transpose().cast<double>();
  return rgb;
}

} // namespace csplat
