#include "csplat/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "csplat/parallel.hpp"

namespace csplat {

namespace {

struct Projected {
  bool visible = false;
  Vec2d mean2d = Vec2d::Zero();
  double depth = 0;
  Mat2d cov2d = Mat2d::Zero();
  Mat2d conic = Mat2d::Zero();
  Vec3d color = Vec3d::Zero();     // render color (offset + clamp applied)
  Vec3d color_raw = Vec3d::Zero(); // pre-clamp, for the backward mask
  double alpha_base = 0;
  double radius = 0; // pixel extent covering every alpha >= threshold
  Vec3d t = Vec3d::Zero(); // camera-space position
  Vec3d view_dir = Vec3d::Zero();
  double view_dist = 0;
};

std::vector<Projected> project_all(const GaussianField& field,
                                   const Camera& cam,
                                   const RasterConfig& cfg) {
  const Vec3d cam_center = cam.center();
  const Mat3d w = cam.rotation();
  std::vector<Projected> proj(field.size());
  parallel_for(field.size(), [&](std::size_t i) {
    const Gaussian& g = field.gaussians[i];
    Projected& p = proj[i];
    const Vec3d pos = g.position.cast<double>();
    const Vec3d t = w * pos + cam.translation();
    if (t.z() <= cfg.z_near) return;
    p.alpha_base = g.opacity();
    if (p.alpha_base < cfg.alpha_cull_threshold) return;

    p.t = t;
    const Vec3d h = cam.intrinsics() * t;
    p.mean2d = Vec2d(h.x() / h.z(), h.y() / h.z());
    p.depth = t.z();

    const Mat3d sigma = g.covariance();
    const Eigen::Matrix<double, 2, 3> j = projection_jacobian_cam(t, cam);
    Mat2d cov2d = j * (w * sigma * w.transpose()) * j.transpose();
    cov2d(0, 0) += kCovarianceFloor;
    cov2d(1, 1) += kCovarianceFloor;
    const double off = 0.5 * (cov2d(0, 1) + cov2d(1, 0));
    cov2d(0, 1) = cov2d(1, 0) = off;
    const double det = cov2d.determinant();
    if (!(det > 0) || !std::isfinite(det)) return;
    p.cov2d = cov2d;
    p.conic << cov2d(1, 1) / det, -cov2d(0, 1) / det, //
        -cov2d(0, 1) / det, cov2d(0, 0) / det;

    // Largest eigenvalue of the 2x2 footprint.
    const double mid = 0.5 * (cov2d(0, 0) + cov2d(1, 1));
    const double lambda_max =
        mid + std::sqrt(std::max(0.0, mid * mid - det));
    // Enlarge the extent beyond the configured sigma count whenever the
    // base opacity could still clear the alpha threshold outside it, so the
    // tiled pass blends exactly the contributions the oracle blends.
    const double needed = std::sqrt(
        2.0 * std::max(0.0, std::log(p.alpha_base /
                                     cfg.alpha_cull_threshold)));
    const double mult = std::max(cfg.gaussian_extent_sigmas, needed);
    p.radius = mult * std::sqrt(lambda_max) + 1.0;

    const Vec3d to_g = pos - cam_center;
    p.view_dist = to_g.norm();
    p.view_dir = p.view_dist > 0 ? Vec3d(to_g / p.view_dist) : Vec3d(0, 0, 1);
    const Vec3d raw = eval_sh(g.sh_coeffs, p.view_dir, field.sh_degree_active);
    p.color_raw = raw;
    p.color = (raw.array() + 0.5).cwiseMax(0.0).cwiseMin(1.0);
    p.visible = true;
  });
  return proj;
}

std::vector<int> depth_sorted(const std::vector<Projected>& proj) {
  std::vector<int> order;
  order.reserve(proj.size());
  for (int i = 0; i < int(proj.size()); ++i)
    if (proj[i].visible) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (proj[a].depth != proj[b].depth) return proj[a].depth < proj[b].depth;
    return a < b; // stable tie-break on original index
  });
  return order;
}

struct Contribution {
  int list_pos; // position within the per-pixel candidate list
  double alpha;
  double g; // exp(power)
  Vec2d d;  // pixel - mean2d
  double t_at; // transmittance before this blend
};

// Front-to-back composite of one pixel over a depth-ordered candidate list.
// When `contribs` is non-null the blended entries are recorded for the
// backward pass.
inline void composite_pixel(
    double px, double py, const std::vector<int>& order,
    const std::vector<Projected>& proj, const RasterConfig& cfg,
    Vec3d& color_out, double& depth_out, double& alpha_out,
    std::vector<Contribution>* contribs = nullptr,
    std::vector<uint32_t>* touched = nullptr) {
  double transmittance = 1.0;
  Vec3d acc = Vec3d::Zero();
  double depth_acc = 0.0;
  for (int k = 0; k < int(order.size()); ++k) {
    const Projected& p = proj[order[k]];
    const Vec2d d(px - p.mean2d.x(), py - p.mean2d.y());
    const double power =
        -0.5 * (p.conic(0, 0) * d.x() * d.x() + p.conic(1, 1) * d.y() * d.y()) -
        p.conic(0, 1) * d.x() * d.y();
    if (power > 0.0) continue;
    const double g = std::exp(power);
    double alpha = p.alpha_base * g;
    if (alpha < cfg.alpha_cull_threshold) continue;
    alpha = std::min(alpha, cfg.max_alpha);
    const double next_t = transmittance * (1.0 - alpha);
    if (next_t < cfg.termination_transmittance) break;
    acc += transmittance * alpha * p.color;
    depth_acc += transmittance * alpha * p.depth;
    if (contribs)
      contribs->push_back({k, alpha, g, d, transmittance});
    if (touched) (*touched)[k]++;
    transmittance = next_t;
  }
  const double alpha_total = 1.0 - transmittance;
  color_out = acc + transmittance * cfg.background.cast<double>();
  alpha_out = alpha_total;
  depth_out = alpha_total > 0.0 ? depth_acc / alpha_total : 0.0;
}

struct TileGrid {
  int tiles_x = 0, tiles_y = 0;
  std::vector<std::vector<int>> lists; // depth-ordered candidates per tile
};

TileGrid bin_tiles(const std::vector<int>& order,
                   const std::vector<Projected>& proj, int width, int height,
                   int tile_size) {
  TileGrid grid;
  grid.tiles_x = (width + tile_size - 1) / tile_size;
  grid.tiles_y = (height + tile_size - 1) / tile_size;
  grid.lists.resize(std::size_t(grid.tiles_x) * grid.tiles_y);
  for (int idx : order) {
    const Projected& p = proj[idx];
    const int x0 = std::max(0, int(std::floor((p.mean2d.x() - p.radius) /
                                              tile_size)));
    const int x1 = std::min(grid.tiles_x - 1,
                            int(std::floor((p.mean2d.x() + p.radius) /
                                           tile_size)));
    const int y0 = std::max(0, int(std::floor((p.mean2d.y() - p.radius) /
                                              tile_size)));
    const int y1 = std::min(grid.tiles_y - 1,
                            int(std::floor((p.mean2d.y() + p.radius) /
                                           tile_size)));
    for (int ty = y0; ty <= y1; ++ty)
      for (int tx = x0; tx <= x1; ++tx)
        grid.lists[std::size_t(ty) * grid.tiles_x + tx].push_back(idx);
  }
  return grid;
}

} // namespace

void ParamGrads::resize(std::size_t n) {
  d_position.resize(n);
  d_log_scale.resize(n);
  d_rotation.resize(n);
  d_sh.resize(n);
  d_opacity_logit.resize(n);
  densify_grad.resize(n);
  touched.resize(n);
  set_zero();
}

void ParamGrads::set_zero() {
  std::fill(d_position.begin(), d_position.end(), Vec3d::Zero());
  std::fill(d_log_scale.begin(), d_log_scale.end(), Vec3d::Zero());
  std::fill(d_rotation.begin(), d_rotation.end(), Vec4d::Zero());
  for (auto& m : d_sh) m.setZero();
  std::fill(d_opacity_logit.begin(), d_opacity_logit.end(), 0.0);
  std::fill(densify_grad.begin(), densify_grad.end(), 0.0);
  std::fill(touched.begin(), touched.end(), 0u);
}

void ParamGrads::add_scaled(const ParamGrads& other, double scale) {
  for (std::size_t i = 0; i < d_position.size(); ++i) {
    d_position[i] += scale * other.d_position[i];
    d_log_scale[i] += scale * other.d_log_scale[i];
    d_rotation[i] += scale * other.d_rotation[i];
    d_sh[i] += scale * other.d_sh[i];
    d_opacity_logit[i] += scale * other.d_opacity_logit[i];
    densify_grad[i] += std::abs(scale) * other.densify_grad[i];
    touched[i] += other.touched[i];
  }
}

RenderOutput render(const GaussianField& field, const Camera& cam,
                    const RasterConfig& cfg) {
  const int h = cam.height(), w = cam.width();
  RenderOutput out;
  out.color = Image(h, w, 3);
  out.depth = Image(h, w, 1);
  out.alpha = Image(h, w, 1);
  out.per_gaussian_stats.pos_grad_mag.assign(field.size(), 0.0);
  out.per_gaussian_stats.touched_pixels.assign(field.size(), 0u);

  const auto proj = project_all(field, cam, cfg);
  const auto order = depth_sorted(proj);
  TileGrid grid = bin_tiles(order, proj, w, h, cfg.tile_size);

  std::vector<std::vector<uint32_t>> tile_touch(grid.lists.size());
  parallel_chunks(grid.lists.size(), [&](std::size_t tile) {
    const auto& list = grid.lists[tile];
    auto& touch = tile_touch[tile];
    touch.assign(list.size(), 0u);
    const int tx = int(tile % grid.tiles_x), ty = int(tile / grid.tiles_x);
    const int x0 = tx * cfg.tile_size, y0 = ty * cfg.tile_size;
    const int x1 = std::min(w, x0 + cfg.tile_size);
    const int y1 = std::min(h, y0 + cfg.tile_size);
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        Vec3d c;
        double d, a;
        composite_pixel(double(x), double(y), list, proj, cfg, c, d, a,
                        nullptr, &touch);
        out.color.at(y, x, 0) = float(c.x());
        out.color.at(y, x, 1) = float(c.y());
        out.color.at(y, x, 2) = float(c.z());
        out.depth.at(y, x) = float(d);
        out.alpha.at(y, x) = float(a);
      }
    }
  });
  // Fixed-order reduction keeps counts independent of thread count.
  for (std::size_t tile = 0; tile < grid.lists.size(); ++tile) {
    const auto& list = grid.lists[tile];
    for (std::size_t k = 0; k < list.size(); ++k)
      out.per_gaussian_stats.touched_pixels[list[k]] += tile_touch[tile][k];
  }
  return out;
}

RenderOutput render_oracle(const GaussianField& field, const Camera& cam,
                           const RasterConfig& cfg) {
  const int h = cam.height(), w = cam.width();
  RenderOutput out;
  out.color = Image(h, w, 3);
  out.depth = Image(h, w, 1);
  out.alpha = Image(h, w, 1);
  out.per_gaussian_stats.pos_grad_mag.assign(field.size(), 0.0);
  out.per_gaussian_stats.touched_pixels.assign(field.size(), 0u);

  const auto proj = project_all(field, cam, cfg);
  const auto order = depth_sorted(proj);
  std::vector<std::vector<uint32_t>> row_touch(h);
  parallel_chunks(std::size_t(h), [&](std::size_t y) {
    auto& touch = row_touch[y];
    touch.assign(order.size(), 0u);
    for (int x = 0; x < w; ++x) {
      Vec3d c;
      double d, a;
      composite_pixel(double(x), double(y), order, proj, cfg, c, d, a,
                      nullptr, &touch);
      out.color.at(int(y), x, 0) = float(c.x());
      out.color.at(int(y), x, 1) = float(c.y());
      out.color.at(int(y), x, 2) = float(c.z());
      out.depth.at(int(y), x) = float(d);
      out.alpha.at(int(y), x) = float(a);
    }
  });
  for (int y = 0; y < h; ++y)
    for (std::size_t k = 0; k < order.size(); ++k)
      out.per_gaussian_stats.touched_pixels[order[k]] += row_touch[y][k];
  return out;
}

namespace {

// Per-Gaussian gradients in image space, accumulated over pixels.
struct ImageSpaceGrad {
  Vec2d d_mean2d = Vec2d::Zero();
  Mat2d d_cov2d = Mat2d::Zero();
  Vec3d d_color = Vec3d::Zero();
  double d_alpha_base = 0.0;
  uint32_t touched = 0;
};

} // namespace

ParamGrads backward(const GaussianField& field, const Camera& cam,
                    const RasterConfig& cfg, const Image& upstream) {
  const int h = cam.height(), w = cam.width();
  ParamGrads grads;
  grads.resize(field.size());
  if (field.empty()) return grads;

  const auto proj = project_all(field, cam, cfg);
  const auto order = depth_sorted(proj);
  TileGrid grid = bin_tiles(order, proj, w, h, cfg.tile_size);

  std::vector<std::vector<ImageSpaceGrad>> tile_grads(grid.lists.size());
  const Vec3d bg = cfg.background.cast<double>();

  parallel_chunks(grid.lists.size(), [&](std::size_t tile) {
    const auto& list = grid.lists[tile];
    auto& local = tile_grads[tile];
    local.assign(list.size(), ImageSpaceGrad{});
    if (list.empty()) return;
    const int tx = int(tile % grid.tiles_x), ty = int(tile / grid.tiles_x);
    const int x0 = tx * cfg.tile_size, y0 = ty * cfg.tile_size;
    const int x1 = std::min(w, x0 + cfg.tile_size);
    const int y1 = std::min(h, y0 + cfg.tile_size);
    std::vector<Contribution> contribs;
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        const Vec3d up(upstream.at(y, x, 0), upstream.at(y, x, 1),
                       upstream.at(y, x, 2));
        contribs.clear();
        Vec3d c;
        double d, a;
        composite_pixel(double(x), double(y), list, proj, cfg, c, d, a,
                        &contribs);
        if (contribs.empty()) continue;
        double t_end = 1.0;
        for (const auto& cb : contribs) t_end = cb.t_at * (1.0 - cb.alpha);
        // Walk back to front, maintaining the color contributed behind i.
        Vec3d rest = t_end * bg;
        for (int ci = int(contribs.size()) - 1; ci >= 0; --ci) {
          const Contribution& cb = contribs[ci];
          const Projected& p = proj[list[cb.list_pos]];
          ImageSpaceGrad& ig = local[cb.list_pos];
          ig.touched++;
          const double ta = cb.t_at * cb.alpha;
          ig.d_color += up * ta;
          // dC/dalpha_i = T_i c_i - rest/(1 - alpha_i)
          const double d_alpha =
              up.dot(cb.t_at * p.color - rest / (1.0 - cb.alpha));
          rest += ta * p.color;
          if (cb.alpha >= cfg.max_alpha) continue; // clamped: zero gradient
          const double d_g = d_alpha * p.alpha_base;
          ig.d_alpha_base += d_alpha * cb.g;
          // dG/dmean2d = G * conic * d ; dG/dcov2d = G/2 (conic d)(conic d)^T
          const Vec2d cd = p.conic * cb.d;
          ig.d_mean2d += d_g * cb.g * cd;
          ig.d_cov2d += (0.5 * d_g * cb.g) * (cd * cd.transpose());
        }
      }
    }
  });

  // Reduce tile-local gradients in fixed tile order.
  std::vector<ImageSpaceGrad> img(field.size());
  for (std::size_t tile = 0; tile < grid.lists.size(); ++tile) {
    const auto& list = grid.lists[tile];
    const auto& local = tile_grads[tile];
    for (std::size_t k = 0; k < list.size(); ++k) {
      if (local[k].touched == 0) continue;
      ImageSpaceGrad& dst = img[list[k]];
      dst.d_mean2d += local[k].d_mean2d;
      dst.d_cov2d += local[k].d_cov2d;
      dst.d_color += local[k].d_color;
      dst.d_alpha_base += local[k].d_alpha_base;
      dst.touched += local[k].touched;
    }
  }

  // Chain image-space gradients to the 3D parameters (independent per
  // Gaussian).
  const Mat3d wmat = cam.rotation();
  const Vec3d cam_center = cam.center();
  const int active_coeffs = sh::coeff_count(field.sh_degree_active);
  parallel_for(field.size(), [&](std::size_t i) {
    if (img[i].touched == 0 || !proj[i].visible) return;
    const Gaussian& g = field.gaussians[i];
    const Projected& p = proj[i];
    const ImageSpaceGrad& ig = img[i];

    Vec3d d_pos = Vec3d::Zero();

    // Color chain: clamp mask, SH coefficients, and view direction.
    Vec3d d_raw = Vec3d::Zero();
    for (int ch = 0; ch < 3; ++ch) {
      const double v = p.color_raw[ch] + 0.5;
      if (v > 0.0 && v < 1.0) d_raw[ch] = ig.d_color[ch];
    }
    if (!d_raw.isZero(0.0)) {
      const auto basis = sh::basis(p.view_dir);
      const auto bgrad = sh::basis_grad(p.view_dir);
      Vec3d d_dir = Vec3d::Zero();
      for (int k = 0; k < active_coeffs; ++k) {
        for (int ch = 0; ch < 3; ++ch) {
          grads.d_sh[i](k, ch) = d_raw[ch] * basis[k];
          d_dir += d_raw[ch] * double(g.sh_coeffs(k, ch)) * bgrad[k];
        }
      }
      // dir = (pos - c)/r : project out the radial component.
      const Vec3d dir = p.view_dir;
      d_pos += (d_dir - dir * dir.dot(d_dir)) / p.view_dist;
    }

    // Opacity chain.
    const double act = p.alpha_base;
    grads.d_opacity_logit[i] = ig.d_alpha_base * act * (1.0 - act);

    // Footprint chain.
    Mat2d d_cov2d = ig.d_cov2d;
    d_cov2d = 0.5 * (d_cov2d + d_cov2d.transpose().eval());
    const Mat3d sigma = g.covariance();
    const Mat3d v_cam = wmat * sigma * wmat.transpose();
    const Eigen::Matrix<double, 2, 3> j = projection_jacobian_cam(p.t, cam);

    const Mat3d d_vcam = j.transpose() * d_cov2d * j;
    const Mat3d d_sigma = wmat.transpose() * d_vcam * wmat;

    // dL/dJ = 2 sym(dcov2d) J V
    const Eigen::Matrix<double, 2, 3> d_j = 2.0 * d_cov2d * j * v_cam;
    const double z = p.t.z(), zz = z * z, zzz = zz * z;
    const double fx = cam.fx(), fy = cam.fy();
    Vec3d d_t = Vec3d::Zero();
    d_t.x() += d_j(0, 2) * (-fx / zz);
    d_t.y() += d_j(1, 2) * (-fy / zz);
    d_t.z() += d_j(0, 0) * (-fx / zz) + d_j(1, 1) * (-fy / zz) +
               d_j(0, 2) * (2.0 * fx * p.t.x() / zzz) +
               d_j(1, 2) * (2.0 * fy * p.t.y() / zzz);

    // Projection chain for the 2D mean.
    d_t += j.transpose() * ig.d_mean2d;
    d_pos += wmat.transpose() * d_t;
    grads.d_position[i] = d_pos;

    // Covariance chain to scale and rotation: Sigma = M M^T with M = R S.
    const Mat3d r = g.rotation_matrix();
    const Vec3d s = g.log_scale.cast<double>().array().exp();
    const Mat3d m = r * s.asDiagonal();
    const Mat3d d_m = 2.0 * d_sigma * m; // d_sigma symmetric
    const Mat3d rt_dm = r.transpose() * d_m;
    for (int k = 0; k < 3; ++k)
      grads.d_log_scale[i][k] = rt_dm(k, k) * s[k];

    const Mat3d d_r = d_m * s.asDiagonal();
    const Vec4d q = g.rotation.cast<double>().normalized();
    const double qw = q[0], qx = q[1], qy = q[2], qz = q[3];
    Mat3d d_rot_dq[4];
    d_rot_dq[0] << 0, -qz, qy, qz, 0, -qx, -qy, qx, 0;          // d/dw
    d_rot_dq[1] << 0, qy, qz, qy, -2 * qx, -qw, qz, qw, -2 * qx; // d/dx
    d_rot_dq[2] << -2 * qy, qx, qw, qx, 0, qz, -qw, qz, -2 * qy; // d/dy
    d_rot_dq[3] << -2 * qz, -qw, qx, qw, -2 * qz, qy, qx, qy, 0; // d/dz
    Vec4d d_q;
    for (int k = 0; k < 4; ++k)
      d_q[k] = 2.0 * (d_r.cwiseProduct(d_rot_dq[k])).sum();
    // Through the renormalization q / |q| at |q| = 1.
    grads.d_rotation[i] = d_q - q * q.dot(d_q);

    // Densification statistic: ndc-scaled screen gradient magnitude.
    const Vec2d ndc(ig.d_mean2d.x() * 0.5 * w, ig.d_mean2d.y() * 0.5 * h);
    grads.densify_grad[i] = ndc.norm();
    grads.touched[i] = ig.touched;
  });
  return grads;
}

} // namespace csplat
