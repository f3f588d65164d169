#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>

namespace csplat {

using Vec2d = Eigen::Vector2d;
using Vec3d = Eigen::Vector3d;
using Vec4d = Eigen::Vector4d;
using Vec3f = Eigen::Vector3f;
using Mat2d = Eigen::Matrix2d;
using Mat3d = Eigen::Matrix3d;
using Mat4d = Eigen::Matrix4d;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double logit(double p) { return std::log(p / (1.0 - p)); }

/// Rotation matrix from a (w,x,y,z) quaternion; input is renormalized.
inline Mat3d quat_to_rotation(const Vec4d& q_raw) {
  const Vec4d q = q_raw.normalized();
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

/// (w,x,y,z) quaternion from a rotation matrix.
inline Vec4d rotation_to_quat(const Mat3d& r) {
  Eigen::Quaterniond q(r);
  q.normalize();
  return Vec4d(q.w(), q.x(), q.y(), q.z());
}

inline bool is_rotation_matrix(const Mat3d& r, double tol = 1e-6) {
  return (r.transpose() * r - Mat3d::Identity()).cwiseAbs().maxCoeff() <= tol &&
         r.determinant() > 0;
}

/// Checks the rotation block of a 4x4 rigid transform.
inline bool is_rigid_transform(const Mat4d& m, double tol = 1e-6) {
  if (std::abs(m(3, 0)) > tol || std::abs(m(3, 1)) > tol ||
      std::abs(m(3, 2)) > tol || std::abs(m(3, 3) - 1.0) > tol)
    return false;
  return is_rotation_matrix(m.topLeftCorner<3, 3>(), tol);
}

/// Deterministic 64-bit generator (splitmix64) used everywhere randomness is
/// needed. Unlike std distributions, the stream is fixed by the seed alone,
/// so outputs are identical across platforms and standard libraries.
class Rng {
public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Integer in [0, n).
  uint64_t uniform_index(uint64_t n) { return n ? next_u64() % n : 0; }

  /// Standard normal via Box-Muller.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    u1 = std::max(u1, 1e-300);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

} // namespace csplat
