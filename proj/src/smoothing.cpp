#include "sfb/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sfb {

namespace {

// Epanechnikov kernel, compact support |u| < 1.
inline double epan(double u) {
  double v = 1.0 - u * u;
  return v > 0.0 ? 0.75 * v : 0.0;
}

// Window of grid indices within h of t.
std::pair<int, int> window(const Grid& g, double t, double h) {
  const auto& pts = g.points();
  double lo = t - h, hi = t + h;
  int a = static_cast<int>(std::lower_bound(pts.begin(), pts.end(), lo) - pts.begin());
  int b = static_cast<int>(std::upper_bound(pts.begin(), pts.end(), hi) - pts.begin()) - 1;
  return {std::max(a, 0), std::min(b, g.size() - 1)};
}

}  // namespace

std::vector<double> local_linear_1d(const Grid& g, const Binned1D& data, double bandwidth,
                                    int escalations) {
  const int nc = g.size();
  if (static_cast<int>(data.sum.size()) != nc || static_cast<int>(data.count.size()) != nc)
    throw std::invalid_argument("local_linear_1d: binned data does not match grid");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("local_linear_1d: bandwidth must be > 0");

  std::vector<double> out(static_cast<size_t>(nc), 0.0);
  for (int c = 0; c < nc; ++c) {
    const double t = g[c];
    double h = bandwidth;
    bool done = false;
    for (int attempt = 0; attempt <= escalations && !done; ++attempt, h *= 2.0) {
      auto [a, b] = window(g, t, h);
      double s0 = 0, s1 = 0, s2 = 0, r0 = 0, r1 = 0;
      for (int k = a; k <= b; ++k) {
        double cnt = data.count[static_cast<size_t>(k)];
        if (cnt <= 0.0) continue;
        double d = g[k] - t;
        double w = cnt * epan(d / h);
        double ybar = data.sum[static_cast<size_t>(k)] / cnt;
        s0 += w;
        s1 += w * d;
        s2 += w * d * d;
        r0 += w * ybar;
        r1 += w * d * ybar;
      }
      if (s0 <= 0.0) continue;  // nothing in reach, escalate
      double det = s0 * s2 - s1 * s1;
      if (det > 1e-12 * s0 * s2 + 1e-300) {
        out[static_cast<size_t>(c)] = (s2 * r0 - s1 * r1) / det;
      } else {
        out[static_cast<size_t>(c)] = r0 / s0;  // local constant fallback
      }
      done = true;
    }
    if (!done)
      throw std::runtime_error(
          "local_linear_1d: no data within reach of grid point; increase the bandwidth");
  }
  return out;
}

std::vector<double> local_plane_2d(const Grid& g, const Binned2D& data, double bandwidth,
                                   int escalations) {
  const int nc = g.size();
  if (data.nc != nc) throw std::invalid_argument("local_plane_2d: binned data does not match grid");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("local_plane_2d: bandwidth must be > 0");

  std::vector<double> out(static_cast<size_t>(nc) * nc, 0.0);
  for (int a = 0; a < nc; ++a) {
    for (int b = a; b < nc; ++b) {
      const double ta = g[a], tb = g[b];
      double h = bandwidth;
      bool done = false;
      for (int attempt = 0; attempt <= escalations && !done; ++attempt, h *= 2.0) {
        auto [x0, x1] = window(g, ta, h);
        auto [y0, y1] = window(g, tb, h);
        // Normal equations for beta0 + beta1*dx + beta2*dy.
        double s00 = 0, s10 = 0, s01 = 0, s20 = 0, s11 = 0, s02 = 0;
        double r0 = 0, r1 = 0, r2 = 0;
        for (int x = x0; x <= x1; ++x) {
          double dx = g[x] - ta;
          double kx = epan(dx / h);
          for (int y = y0; y <= y1; ++y) {
            double cnt = data.count_at(x, y);
            if (cnt <= 0.0) continue;
            double dy = g[y] - tb;
            double w = cnt * kx * epan(dy / h);
            double zbar = data.sum_at(x, y) / cnt;
            s00 += w;
            s10 += w * dx;
            s01 += w * dy;
            s20 += w * dx * dx;
            s11 += w * dx * dy;
            s02 += w * dy * dy;
            r0 += w * zbar;
            r1 += w * dx * zbar;
            r2 += w * dy * zbar;
          }
        }
        if (s00 <= 0.0) continue;
        // Solve the symmetric 3x3 system by Cramer's rule.
        double m00 = s00, m01 = s10, m02 = s01;
        double m11 = s20, m12 = s11, m22 = s02;
        double det = m00 * (m11 * m22 - m12 * m12) - m01 * (m01 * m22 - m12 * m02) +
                     m02 * (m01 * m12 - m11 * m02);
        double scale = std::max({std::abs(m00 * m11 * m22), 1e-300});
        double value;
        if (std::abs(det) > 1e-10 * scale) {
          double c0 = (m11 * m22 - m12 * m12);
          double c1 = -(m01 * m22 - m12 * m02);
          double c2 = (m01 * m12 - m11 * m02);
          value = (c0 * r0 + c1 * r1 + c2 * r2) / det;
        } else {
          value = r0 / s00;  // local constant fallback
        }
        out[static_cast<size_t>(a) * nc + b] = value;
        out[static_cast<size_t>(b) * nc + a] = value;
        done = true;
      }
      if (!done)
        throw std::runtime_error(
            "local_plane_2d: no data within reach of grid cell; increase the bandwidth");
    }
  }
  return out;
}

}  // namespace sfb
