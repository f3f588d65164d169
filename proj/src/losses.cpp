#include "csplat/losses.hpp"

#include <array>
#include <cmath>

#include "csplat/errors.hpp"
#include "csplat/kdtree.hpp"

namespace csplat {

namespace {

constexpr double kSsimC1 = 0.01 * 0.01;
constexpr double kSsimC2 = 0.03 * 0.03;
constexpr double kRobustEps = 1e-3;

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(size);
  const double c = (size - 1) / 2.0;
  double sum = 0;
  for (int i = 0; i < size; ++i) {
    w[i] = std::exp(-0.5 * (i - c) * (i - c) / (sigma * sigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Dense h x w double plane.
struct Plane {
  int h = 0, w = 0;
  std::vector<double> v;
  Plane() = default;
  Plane(int h_, int w_) : h(h_), w(w_), v(std::size_t(h_) * w_, 0.0) {}
  double& at(int y, int x) { return v[std::size_t(y) * w + x]; }
  double at(int y, int x) const { return v[std::size_t(y) * w + x]; }
};

// Separable window correlation; only the valid region (margin r on every
// side) holds defined values.
Plane conv_valid(const Plane& p, const std::vector<double>& win) {
  const int r = int(win.size()) / 2;
  Plane tmp(p.h, p.w), out(p.h, p.w);
  for (int y = 0; y < p.h; ++y)
    for (int x = r; x < p.w - r; ++x) {
      double acc = 0;
      for (int o = -r; o <= r; ++o) acc += win[o + r] * p.at(y, x + o);
      tmp.at(y, x) = acc;
    }
  for (int y = r; y < p.h - r; ++y)
    for (int x = r; x < p.w - r; ++x) {
      double acc = 0;
      for (int o = -r; o <= r; ++o) acc += win[o + r] * tmp.at(y + o, x);
      out.at(y, x) = acc;
    }
  return out;
}

// Adjoint of conv_valid: spreads a valid-region field back over the full
// plane through the (symmetric) window, zero-padded.
Plane spread_valid(const Plane& p, const std::vector<double>& win) {
  const int r = int(win.size()) / 2;
  Plane tmp(p.h, p.w), out(p.h, p.w);
  for (int y = 0; y < p.h; ++y)
    for (int x = 0; x < p.w; ++x) {
      double acc = 0;
      const int lo = std::max(r, y - r), hi = std::min(p.h - r - 1, y + r);
      for (int src = lo; src <= hi; ++src)
        acc += win[src - y + r] * p.at(src, x);
      tmp.at(y, x) = acc;
    }
  // tmp rows now span [0, h); spread horizontally from valid columns.
  for (int y = 0; y < p.h; ++y)
    for (int x = 0; x < p.w; ++x) {
      double acc = 0;
      const int lo = std::max(r, x - r), hi = std::min(p.w - r - 1, x + r);
      for (int src = lo; src <= hi; ++src)
        acc += win[src - x + r] * tmp.at(y, src);
      out.at(y, x) = acc;
    }
  return out;
}

struct Region {
  int y0, x0, h, w;
};

Plane extract(const Image& img, const Region& rg, int channel) {
  Plane p(rg.h, rg.w);
  for (int y = 0; y < rg.h; ++y)
    for (int x = 0; x < rg.w; ++x)
      p.at(y, x) = img.at(rg.y0 + y, rg.x0 + x, channel);
  return p;
}

// Window for a region, shrunk for regions smaller than the standard 11x11.
std::vector<double> region_window(const Region& rg) {
  int size = std::min(11, std::min(rg.h, rg.w));
  if (size % 2 == 0) size -= 1;
  size = std::max(1, size);
  return gaussian_window(size, 1.5 * size / 11.0);
}

struct SsimMoments {
  Plane mu_x, mu_y, var_x, var_y, cov_xy;
  int r;
};

SsimMoments ssim_moments(const Plane& x, const Plane& y,
                         const std::vector<double>& win) {
  SsimMoments m;
  m.r = int(win.size()) / 2;
  m.mu_x = conv_valid(x, win);
  m.mu_y = conv_valid(y, win);
  Plane xx(x.h, x.w), yy(x.h, x.w), xy(x.h, x.w);
  for (std::size_t i = 0; i < x.v.size(); ++i) {
    xx.v[i] = x.v[i] * x.v[i];
    yy.v[i] = y.v[i] * y.v[i];
    xy.v[i] = x.v[i] * y.v[i];
  }
  m.var_x = conv_valid(xx, win);
  m.var_y = conv_valid(yy, win);
  m.cov_xy = conv_valid(xy, win);
  for (int py = m.r; py < x.h - m.r; ++py)
    for (int px = m.r; px < x.w - m.r; ++px) {
      m.var_x.at(py, px) -= m.mu_x.at(py, px) * m.mu_x.at(py, px);
      m.var_y.at(py, px) -= m.mu_y.at(py, px) * m.mu_y.at(py, px);
      m.cov_xy.at(py, px) -= m.mu_x.at(py, px) * m.mu_y.at(py, px);
    }
  return m;
}

// Mean SSIM of one channel plane pair over the valid region.
double ssim_plane(const SsimMoments& m) {
  const int r = m.r;
  double sum = 0;
  int count = 0;
  for (int y = r; y < m.mu_x.h - r; ++y)
    for (int x = r; x < m.mu_x.w - r; ++x) {
      const double mx = m.mu_x.at(y, x), my = m.mu_y.at(y, x);
      const double a1 = 2 * mx * my + kSsimC1;
      const double a2 = 2 * m.cov_xy.at(y, x) + kSsimC2;
      const double b1 = mx * mx + my * my + kSsimC1;
      const double b2 = m.var_x.at(y, x) + m.var_y.at(y, x) + kSsimC2;
      sum += (a1 * a2) / (b1 * b2);
      ++count;
    }
  return count ? sum / count : 1.0;
}

// d(mean SSIM)/dx for one channel, scaled by `upstream`.
void ssim_plane_backward(const Plane& x, const Plane& y,
                         const SsimMoments& m,
                         const std::vector<double>& win, double upstream,
                         Plane& d_x) {
  const int r = m.r;
  const int valid_h = x.h - 2 * r, valid_w = x.w - 2 * r;
  if (valid_h <= 0 || valid_w <= 0) return;
  const double scale = upstream / (double(valid_h) * valid_w);
  Plane p_mu(x.h, x.w), p_var(x.h, x.w), p_cov(x.h, x.w);
  for (int py = r; py < x.h - r; ++py)
    for (int px = r; px < x.w - r; ++px) {
      const double mx = m.mu_x.at(py, px), my = m.mu_y.at(py, px);
      const double a1 = 2 * mx * my + kSsimC1;
      const double a2 = 2 * m.cov_xy.at(py, px) + kSsimC2;
      const double b1 = mx * mx + my * my + kSsimC1;
      const double b2 = m.var_x.at(py, px) + m.var_y.at(py, px) + kSsimC2;
      const double s = (a1 * a2) / (b1 * b2);
      const double ds_dmux = 2 * my * a2 / (b1 * b2) - 2 * mx * s / b1;
      const double ds_dvarx = -s / b2;
      const double ds_dcov = 2 * a1 / (b1 * b2);
      // Central-moment chain: var_x = E[x^2]-mu_x^2, cov = E[xy]-mu_x mu_y.
      p_mu.at(py, px) =
          scale * (ds_dmux - 2 * mx * ds_dvarx - my * ds_dcov);
      p_var.at(py, px) = scale * ds_dvarx;
      p_cov.at(py, px) = scale * ds_dcov;
    }
  const Plane s_mu = spread_valid(p_mu, win);
  const Plane s_var = spread_valid(p_var, win);
  const Plane s_cov = spread_valid(p_cov, win);
  for (int py = 0; py < x.h; ++py)
    for (int px = 0; px < x.w; ++px) {
      d_x.at(py, px) += s_mu.at(py, px) +
                        2 * x.at(py, px) * s_var.at(py, px) +
                        y.at(py, px) * s_cov.at(py, px);
    }
}

std::vector<Region> tile_regions(int h, int w, int tiles_y, int tiles_x) {
  std::vector<Region> out;
  out.reserve(std::size_t(tiles_y) * tiles_x);
  for (int ty = 0; ty < tiles_y; ++ty) {
    const int y0 = ty * h / tiles_y;
    const int y1 = (ty + 1) * h / tiles_y;
    for (int tx = 0; tx < tiles_x; ++tx) {
      const int x0 = tx * w / tiles_x;
      const int x1 = (tx + 1) * w / tiles_x;
      out.push_back({y0, x0, y1 - y0, x1 - x0});
    }
  }
  return out;
}

void check_pair(const Image& a, const Image& b) {
  if (!a.same_shape(b))
    throw DimensionMismatchError("image shapes differ");
  if (a.empty()) throw DimensionMismatchError("empty images");
}

} // namespace

double tssim_loss(const Image& rendered, const Image& target, int tiles_y,
                  int tiles_x) {
  check_pair(rendered, target);
  const auto regions =
      tile_regions(rendered.height(), rendered.width(), tiles_y, tiles_x);
  double total = 0;
  for (const Region& rg : regions) {
    const auto win = region_window(rg);
    double tile_sum = 0;
    for (int c = 0; c < rendered.channels(); ++c) {
      const Plane x = extract(rendered, rg, c);
      const Plane y = extract(target, rg, c);
      tile_sum += ssim_plane(ssim_moments(x, y, win));
    }
    total += tile_sum / rendered.channels();
  }
  return 1.0 - total / double(regions.size());
}

Image tssim_loss_backward(const Image& rendered, const Image& target,
                          int tiles_y, int tiles_x) {
  check_pair(rendered, target);
  Image grad(rendered.height(), rendered.width(), rendered.channels());
  const auto regions =
      tile_regions(rendered.height(), rendered.width(), tiles_y, tiles_x);
  const double up = -1.0 / (double(regions.size()) * rendered.channels());
  for (const Region& rg : regions) {
    const auto win = region_window(rg);
    for (int c = 0; c < rendered.channels(); ++c) {
      const Plane x = extract(rendered, rg, c);
      const Plane y = extract(target, rg, c);
      const SsimMoments m = ssim_moments(x, y, win);
      Plane d_x(rg.h, rg.w);
      ssim_plane_backward(x, y, m, win, up, d_x);
      for (int py = 0; py < rg.h; ++py)
        for (int px = 0; px < rg.w; ++px)
          grad.at(rg.y0 + py, rg.x0 + px, c) += float(d_x.at(py, px));
    }
  }
  return grad;
}

double robust_loss(const Image& rendered, const Image& target, double kappa) {
  check_pair(rendered, target);
  if (!(kappa > 0.0 && kappa <= 1.0))
    throw BadKappaError("kappa must lie in (0,1]");
  const std::size_t n = std::size_t(rendered.height()) * rendered.width();
  const int ch = rendered.channels();
  const double eps_k = std::pow(kRobustEps, kappa);
  double sum = 0;
  for (std::size_t p = 0; p < n; ++p) {
    double sq = kRobustEps * kRobustEps;
    for (int c = 0; c < ch; ++c) {
      const double d = double(rendered.data()[p * ch + c]) -
                       double(target.data()[p * ch + c]);
      sq += d * d;
    }
    sum += std::pow(sq, 0.5 * kappa) - eps_k;
  }
  return sum / double(n);
}

Image robust_loss_backward(const Image& rendered, const Image& target,
                           double kappa) {
  check_pair(rendered, target);
  if (!(kappa > 0.0 && kappa <= 1.0))
    throw BadKappaError("kappa must lie in (0,1]");
  Image grad(rendered.height(), rendered.width(), rendered.channels());
  const std::size_t n = std::size_t(rendered.height()) * rendered.width();
  const int ch = rendered.channels();
  for (std::size_t p = 0; p < n; ++p) {
    double sq = kRobustEps * kRobustEps;
    for (int c = 0; c < ch; ++c) {
      const double d = double(rendered.data()[p * ch + c]) -
                       double(target.data()[p * ch + c]);
      sq += d * d;
    }
    const double factor = kappa * std::pow(sq, 0.5 * kappa - 1.0) / double(n);
    for (int c = 0; c < ch; ++c) {
      const double d = double(rendered.data()[p * ch + c]) -
                       double(target.data()[p * ch + c]);
      grad.data()[p * ch + c] = float(factor * d);
    }
  }
  return grad;
}

double lidar_loss(const GaussianField& field, const PointCloud& prior,
                  const std::vector<int>* sample) {
  return lidar_loss_with_grad(field, prior, sample).first;
}

std::pair<double, std::vector<Vec3d>>
lidar_loss_with_grad(const GaussianField& field, const PointCloud& prior,
                     const std::vector<int>* sample) {
  if (field.empty() || prior.empty())
    throw EmptyInputError("lidar loss needs a nonempty field and prior");
  std::vector<Vec3d> centers(field.size());
  for (std::size_t i = 0; i < field.size(); ++i)
    centers[i] = field.gaussians[i].position.cast<double>();
  KdTree3 tree(centers);

  std::vector<Vec3d> grads(field.size(), Vec3d::Zero());
  const std::size_t count = sample ? sample->size() : prior.size();
  if (count == 0) throw EmptyInputError("empty lidar sample");
  double sum = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const auto& pt = prior.points[sample ? std::size_t((*sample)[k]) : k];
    const auto res = tree.nearest(pt.position);
    sum += res.dist_sq;
    grads[res.index] +=
        2.0 * (centers[res.index] - pt.position) / double(count);
  }
  return {sum / double(count), std::move(grads)};
}

} // namespace csplat
