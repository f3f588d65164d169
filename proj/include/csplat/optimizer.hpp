#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "csplat/gaussian.hpp"
#include "csplat/image.hpp"
#include "csplat/point_cloud.hpp"
#include "csplat/rasterizer.hpp"

namespace csplat {

struct TrainConfig {
  int total_iterations = 50000;

  // Densification / pruning
  double densify_grad_threshold = 0.001;
  int densify_interval = 100;
  int densify_from_iter = 500;
  int densify_until_iter = 0; // 0 -> total_iterations / 2
  double prune_opacity_threshold = 0.005;
  double percent_dense = 0.01; // split size cap relative to scene extent
  int max_gaussians = 500000;

  // Opacity resets
  int opacity_reset_interval = 900;
  double opacity_reset_value = 0.01;

  // Learning rates (static field; position scaled by scene extent)
  double position_lr_init = 1.6e-4;
  double position_lr_final = 1.6e-6;
  double feature_dc_lr = 2.5e-3;
  double feature_rest_lr = 2.5e-3 / 20.0;
  double opacity_lr = 0.05;
  double scaling_lr = 5e-3;
  double rotation_lr = 1e-3;

  // Dynamic-node position schedule (unscaled): 1.6e-3 -> 1.6e-6.
  double dynamic_position_lr_init = 1.6e-3;
  double dynamic_position_lr_final = 1.6e-6;

  // Loss suite
  double lambda_tssim = 0.2;
  double lambda_robust = 0.8;
  double lambda_lidar = 0.1;
  double robust_kappa = 0.9;
  int tssim_tiles_x = 4;
  int tssim_tiles_y = 4;
  int lidar_samples = 4096;

  // SH ramp: +1 active degree every interval, up to 3.
  int sh_degree_interval = 1000;
  int max_sh_degree = 3;

  uint64_t seed = 0;

  void validate() const;
};

/// Exponential learning-rate interpolation from init to final over
/// total iterations.
double exponential_lr(double init, double final_value, int iteration,
                      int total_iterations);

/// Bias-corrected first/second-moment update; returns the step to subtract
/// from the parameter. t is the 1-based update count.
inline double adam_update(double& m, double& v, double grad, int t, double lr,
                          double beta1 = 0.9, double beta2 = 0.999,
                          double eps = 1e-15) {
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad * grad;
  const double m_hat = m / (1.0 - std::pow(beta1, t));
  const double v_hat = v / (1.0 - std::pow(beta2, t));
  return lr * m_hat / (std::sqrt(v_hat) + eps);
}

/// Per-Gaussian Adam moments for every parameter group.
struct OptimizerState {
  struct Moments {
    Vec3d m_pos = Vec3d::Zero(), v_pos = Vec3d::Zero();
    Vec3d m_scale = Vec3d::Zero(), v_scale = Vec3d::Zero();
    Vec4d m_rot = Vec4d::Zero(), v_rot = Vec4d::Zero();
    Eigen::Matrix<double, 16, 3> m_sh = Eigen::Matrix<double, 16, 3>::Zero();
    Eigen::Matrix<double, 16, 3> v_sh = Eigen::Matrix<double, 16, 3>::Zero();
    double m_op = 0, v_op = 0;
  };
  std::vector<Moments> moments;
  int step_count = 0;

  void resize(std::size_t n) { moments.resize(n); }
  /// Keeps survivors' moments through an index remap; new entries start at
  /// zero.
  void remap(const std::vector<int>& old_to_new, std::size_t new_size);
};

struct StepOptions {
  double scene_extent = 1.0;
  bool dynamic_schedule = false; // use the dynamic-node position lr schedule
  std::size_t trainable_from = 0; // Gaussians before this index are frozen
};

/// One optimizer step over the whole field. Honors per-Gaussian position
/// freezes (decremented by the caller) and renormalizes quaternions.
void step(GaussianField& field, const ParamGrads& grads, int iteration,
          const TrainConfig& cfg, OptimizerState& state,
          const StepOptions& opts = {});

/// Clone / split / prune pass. `avg_grad` is the densification statistic per
/// Gaussian (mean screen-space position-gradient magnitude over the renders
/// that touched it). Returns old-index -> new-index (-1 = removed); children
/// are appended.
std::vector<int> densify_and_prune(GaussianField& field,
                                   const std::vector<double>& avg_grad,
                                   const TrainConfig& cfg, double scene_extent,
                                   Rng& rng, std::size_t trainable_from = 0);

/// One supervision view: target image, camera, scalar weight, and an
/// optional binary mask (1 = supervise; empty = everywhere).
struct SupervisionView {
  Image image;
  Camera camera;
  double weight = 1.0;
  Image mask;
};

struct LossRecord {
  int iteration;
  double tssim, robust, lidar, total;
  std::size_t gaussian_count;
};

struct TrainOptions {
  std::size_t trainable_from = 0; // freeze prefix (e.g. static scene)
  bool densify = true;
  const GaussianGraphHook* unused = nullptr; // reserved
};

struct TrainResult {
  std::vector<LossRecord> history;
};

/// Full training loop: per iteration renders one (seeded) supervision view,
/// applies the weighted loss suite, steps, densifies and resets opacities on
/// schedule. Deterministic given cfg.seed; independent of thread count.
TrainResult train(GaussianField& field,
                  const std::vector<SupervisionView>& supervision,
                  const PointCloud& prior, const TrainConfig& cfg,
                  const TrainOptions& opts = {});

void save_loss_history(const std::vector<LossRecord>& history,
                       const std::string& path);

} // namespace csplat
