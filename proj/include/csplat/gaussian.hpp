#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "csplat/math_utils.hpp"

namespace csplat {

/// One anisotropic 3D Gaussian primitive. Scales are stored in log space and
/// opacity as a logit so that the SPD / (0,1) invariants hold under any
/// gradient step. SH coefficients are row k = coefficient k, columns = rgb.
struct Gaussian {
  Vec3f position = Vec3f::Zero();
  Vec3f log_scale = Vec3f::Zero();
  Eigen::Vector4f rotation{1.f, 0.f, 0.f, 0.f}; // (w,x,y,z), unit norm
  Eigen::Matrix<float, 16, 3> sh_coeffs = Eigen::Matrix<float, 16, 3>::Zero();
  float opacity_logit = 0.f;

  void normalize_rotation() { rotation.normalize(); }

  double opacity() const { return sigmoid(double(opacity_logit)); }

  Mat3d rotation_matrix() const {
    return quat_to_rotation(rotation.cast<double>());
  }

  /// World-frame covariance R * diag(exp(log_scale))^2 * R^T.
  Mat3d covariance() const;
};

/// Pinhole camera: intrinsics K, rigid world-to-camera transform E, image
/// size in pixels and the capture timestep.
class Camera {
public:
  Camera() = default;
  Camera(const Mat3d& intrinsics, const Mat4d& world_to_camera, int width,
         int height, int timestep = 0);

  static Camera from_fov(double fx, double fy, double cx, double cy,
                         const Mat4d& world_to_camera, int width, int height,
                         int timestep = 0);

  const Mat3d& intrinsics() const { return intrinsics_; }
  const Mat4d& world_to_camera() const { return world_to_camera_; }
  double fx() const { return intrinsics_(0, 0); }
  double fy() const { return intrinsics_(1, 1); }
  double cx() const { return intrinsics_(0, 2); }
  double cy() const { return intrinsics_(1, 2); }
  int width() const { return width_; }
  int height() const { return height_; }
  int timestep() const { return timestep_; }

  Mat3d rotation() const { return world_to_camera_.topLeftCorner<3, 3>(); }
  Vec3d translation() const { return world_to_camera_.topRightCorner<3, 1>(); }

  /// Camera center in world coordinates.
  Vec3d center() const { return -rotation().transpose() * translation(); }

  /// Camera forward axis (+z of the camera frame) in world coordinates.
  Vec3d forward() const { return rotation().row(2).transpose(); }

  Vec3d world_to_cam(const Vec3d& p) const {
    return rotation() * p + translation();
  }
  Vec3d cam_to_world(const Vec3d& p) const {
    return rotation().transpose() * (p - translation());
  }

private:
  Mat3d intrinsics_ = Mat3d::Identity();
  Mat4d world_to_camera_ = Mat4d::Identity();
  int width_ = 0, height_ = 0, timestep_ = 0;
};

/// A flat collection of Gaussians; the unit of rendering and training.
/// Indices are stable: mutating operations report index mappings instead of
/// reordering silently.
struct GaussianField {
  std::vector<Gaussian> gaussians;
  int sh_degree_active = 3;
  Vec3f background = Vec3f::Zero();

  /// Optional per-Gaussian provenance ("static", object ids, edit tags).
  /// Either empty or sized like gaussians.
  std::vector<std::string> tags;

  /// Optional per-Gaussian warm-up counters: positions are held fixed for
  /// this many further training iterations. Either empty or sized like
  /// gaussians.
  std::vector<int> position_freeze;

  std::size_t size() const { return gaussians.size(); }
  bool empty() const { return gaussians.empty(); }

  const std::string& tag(std::size_t i) const {
    static const std::string kStatic = "static";
    return tags.empty() ? kStatic : tags[i];
  }

  void ensure_tags();
  void ensure_freeze();

  /// Appends all Gaussians of `other`, tagging them with `tag` (or keeping
  /// `other`'s tags when empty). Returns the index of the first appended one.
  std::size_t append(const GaussianField& other, const std::string& tag = "");
};

inline constexpr double kDefaultZNear = 0.01;   // meters
inline constexpr double kCovarianceFloor = 0.3; // px^2, anti-aliasing floor

/// R * diag(exp(log_scale))^2 * R^T; always symmetric positive definite.
Mat3d build_covariance(const Vec3d& log_scale, const Vec4d& rotation_wxyz);

struct ProjectedPoint {
  Vec2d pixel;
  double depth; // camera-space z, meters
};

/// Perspective projection of a world point. Throws BehindCameraError when the
/// camera-space depth is <= z_near.
ProjectedPoint project_point(const Vec3d& p, const Camera& cam,
                             double z_near = kDefaultZNear);

/// Jacobian of the pixel w.r.t. camera-space coordinates at camera point t.
Eigen::Matrix<double, 2, 3> projection_jacobian_cam(const Vec3d& t,
                                                    const Camera& cam);

/// Affine approximation of the projected footprint: J E_rot Sigma E_rot^T J^T
/// plus the anti-aliasing floor on the diagonal.
Mat2d project_covariance(const Mat3d& sigma, const Vec3d& p, const Camera& cam,
                         double z_near = kDefaultZNear);

namespace sh {

inline constexpr int kMaxDegree = 3;
inline constexpr int kNumCoeffs = 16; // (kMaxDegree + 1)^2
inline constexpr double kC0 = 0.28209479177387814;

inline int coeff_count(int degree) { return (degree + 1) * (degree + 1); }

/// Real spherical-harmonic basis values at a unit direction, community
/// constant table, degrees 0..3.
std::array<double, kNumCoeffs> basis(const Vec3d& dir);

/// Per-basis gradients w.r.t. the (unnormalized-agnostic) direction
/// components; callers chain through dir normalization themselves.
std::array<Vec3d, kNumCoeffs> basis_grad(const Vec3d& dir);

/// DC coefficient reproducing rgb `c` after the render-time +0.5 offset.
inline double dc_from_color(double c) { return (c - 0.5) / kC0; }
inline double color_from_dc(double dc) { return dc * kC0 + 0.5; }

} // namespace sh

/// Raw SH color (no offset, no clamp) for a unit view direction, using bands
/// l <= degree only.
Vec3d eval_sh(const Eigen::Matrix<float, 16, 3>& coeffs, const Vec3d& dir,
              int degree);

} // namespace csplat
