#include "csplat/sh_rotation.hpp"

#include <array>
#include <cmath>

#include "csplat/gaussian.hpp"

namespace csplat {

namespace {

constexpr int kSamples = 32;

// Fixed, well-spread unit directions (spherical Fibonacci lattice).
std::array<Vec3d, kSamples> sample_directions() {
  std::array<Vec3d, kSamples> dirs;
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < kSamples; ++i) {
    const double y = 1.0 - 2.0 * (i + 0.5) / kSamples;
    const double r = std::sqrt(std::max(0.0, 1.0 - y * y));
    const double phi = golden * i;
    dirs[i] = Vec3d(r * std::cos(phi), y, r * std::sin(phi));
  }
  return dirs;
}

// Solves A * M = B in the least-squares sense for one band; exact because
// the rotated basis functions lie in the band's span.
template <int N>
Eigen::Matrix<double, N, N> solve_band(const Mat3d& rot_inv, int first) {
  const auto dirs = sample_directions();
  Eigen::Matrix<double, kSamples, N> a, b;
  for (int i = 0; i < kSamples; ++i) {
    const auto basis_d = sh::basis(dirs[i]);
    const auto basis_r = sh::basis(rot_inv * dirs[i]);
    for (int m = 0; m < N; ++m) {
      a(i, m) = basis_d[first + m];
      b(i, m) = basis_r[first + m];
    }
  }
  return a.colPivHouseholderQr().solve(b);
}

} // namespace

ShRotation ShRotation::from_rotation(const Mat3d& rotation) {
  ShRotation out;
  const Mat3d rot_inv = rotation.transpose();
  out.band1_ = solve_band<3>(rot_inv, 1);
  out.band2_ = solve_band<5>(rot_inv, 4);
  out.band3_ = solve_band<7>(rot_inv, 9);
  return out;
}

Eigen::Matrix<float, 16, 3>
ShRotation::apply(const Eigen::Matrix<float, 16, 3>& coeffs) const {
  Eigen::Matrix<double, 16, 3> c = coeffs.cast<double>();
  c.block<3, 3>(1, 0) = band1_ * c.block<3, 3>(1, 0);
  c.block<5, 3>(4, 0) = band2_ * c.block<5, 3>(4, 0);
  c.block<7, 3>(9, 0) = band3_ * c.block<7, 3>(9, 0);
  return c.cast<float>();
}

} // namespace csplat
