#pragma once

#include <utility>
#include <vector>

#include "csplat/gaussian.hpp"
#include "csplat/image.hpp"
#include "csplat/point_cloud.hpp"

namespace csplat {

/// Tile-wise structural dissimilarity: 1 - mean over a tiles_y x tiles_x
/// grid of per-tile SSIM (11x11 Gaussian window, sigma 1.5, C1=0.01^2,
/// C2=0.03^2, valid-region mean). Edge tiles may be smaller when the image
/// does not divide evenly.
double tssim_loss(const Image& rendered, const Image& target, int tiles_y,
                  int tiles_x);

/// Analytic d(tssim_loss)/d(rendered).
Image tssim_loss_backward(const Image& rendered, const Image& target,
                          int tiles_y, int tiles_x);

/// Charbonnier-style power-law kernel: mean over pixels of
/// (|drgb|^2 + eps^2)^(kappa/2) - eps^kappa with eps = 1e-3.
double robust_loss(const Image& rendered, const Image& target, double kappa);

Image robust_loss_backward(const Image& rendered, const Image& target,
                           double kappa);

/// Mean squared distance from each (sampled) prior point to its nearest
/// Gaussian center. `sample` optionally restricts to a point subset.
double lidar_loss(const GaussianField& field, const PointCloud& prior,
                  const std::vector<int>* sample = nullptr);

/// Loss plus d/d(position) of every Gaussian center.
std::pair<double, std::vector<Vec3d>>
lidar_loss_with_grad(const GaussianField& field, const PointCloud& prior,
                     const std::vector<int>* sample = nullptr);

} // namespace csplat
