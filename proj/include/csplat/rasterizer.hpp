#pragma once

#include <vector>

#include "csplat/gaussian.hpp"
#include "csplat/image.hpp"

namespace csplat {

struct RasterConfig {
  int tile_size = 16;
  double alpha_cull_threshold = 1.0 / 255.0;
  double gaussian_extent_sigmas = 3.0;
  Vec3f background = Vec3f::Zero();
  double z_near = kDefaultZNear;
  double termination_transmittance = 1e-4;
  double max_alpha = 0.99;
};

/// Per-Gaussian observation counters from one forward/backward pass.
struct PerGaussianStats {
  std::vector<double> pos_grad_mag;     // ndc-scaled |dL/dmean2d|
  std::vector<uint32_t> touched_pixels; // pixels this Gaussian blended into
};

struct RenderOutput {
  Image color; // H x W x 3, in [0,1]
  Image depth; // H x W, alpha-weighted expected depth; 0 where alpha == 0
  Image alpha; // H x W, 1 - final transmittance
  PerGaussianStats per_gaussian_stats;
};

/// Gradients of a scalar loss w.r.t. every Gaussian parameter. Untouched
/// Gaussians hold exact zeros.
struct ParamGrads {
  std::vector<Vec3d> d_position;
  std::vector<Vec3d> d_log_scale;
  std::vector<Vec4d> d_rotation; // (w,x,y,z)
  std::vector<Eigen::Matrix<double, 16, 3>> d_sh;
  std::vector<double> d_opacity_logit;
  std::vector<double> densify_grad;
  std::vector<uint32_t> touched;

  void resize(std::size_t n);
  void set_zero();
  /// this += scale * other (shapes must match).
  void add_scaled(const ParamGrads& other, double scale);
};

/// Tile-based forward renderer. Gaussians are depth-sorted globally per
/// camera (ties by original index) and alpha-composited front to back.
RenderOutput render(const GaussianField& field, const Camera& cam,
                    const RasterConfig& cfg);

/// Brute-force per-pixel reference with a full global sort and no
/// tile/extent culling except the alpha threshold. Same contract as render;
/// intended for small scenes.
RenderOutput render_oracle(const GaussianField& field, const Camera& cam,
                           const RasterConfig& cfg);

/// Analytic backward pass: given dLoss/dColor, produces gradients for all
/// Gaussian parameters. Intermediates are recomputed internally; results are
/// bit-identical across thread counts.
ParamGrads backward(const GaussianField& field, const Camera& cam,
                    const RasterConfig& cfg, const Image& upstream);

} // namespace csplat
