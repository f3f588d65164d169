#pragma once

#include <Eigen/Dense>

#include "csplat/math_utils.hpp"

namespace csplat {

/// Per-band rotation of real spherical-harmonic coefficients, degrees 1..3.
/// Each band is a rotation-invariant subspace, so the band matrix is
/// recovered exactly by projecting the rotated basis onto the basis over a
/// fixed direction sample set; applying it to coefficients reproduces
/// f'(d) = f(R^-1 d).
class ShRotation {
public:
  static ShRotation from_rotation(const Mat3d& rotation);

  /// Rotates a full 16 x 3 coefficient block (DC untouched).
  Eigen::Matrix<float, 16, 3>
  apply(const Eigen::Matrix<float, 16, 3>& coeffs) const;

  const Mat3d& band1() const { return band1_; }

private:
  Mat3d band1_ = Mat3d::Identity();
  Eigen::Matrix<double, 5, 5> band2_ = Eigen::Matrix<double, 5, 5>::Identity();
  Eigen::Matrix<double, 7, 7> band3_ = Eigen::Matrix<double, 7, 7>::Identity();
};

} // namespace csplat
