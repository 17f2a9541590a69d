#include "sfb/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sfb {

Grid::Grid(std::vector<double> points) : pts_(std::move(points)) {
  if (pts_.size() < 2) throw std::invalid_argument("Grid: need at least 2 points");
  for (size_t c = 0; c < pts_.size(); ++c) {
    if (!std::isfinite(pts_[c])) throw std::invalid_argument("Grid: non-finite point");
    if (c > 0 && !(pts_[c] > pts_[c - 1]))
      throw std::invalid_argument("Grid: points must be strictly increasing");
  }
}

Grid Grid::equidistant(int n, double a, double b) {
  if (n < 2) throw std::invalid_argument("Grid::equidistant: need n >= 2");
  if (!(a < b)) throw std::invalid_argument("Grid::equidistant: need a < b");
  std::vector<double> p(static_cast<size_t>(n));
  for (int c = 0; c < n; ++c) p[static_cast<size_t>(c)] = a + (b - a) * c / (n - 1);
  p.back() = b;
  return Grid(std::move(p));
}

double Grid::min_spacing() const {
  double m = std::numeric_limits<double>::infinity();
  for (size_t c = 1; c < pts_.size(); ++c) m = std::min(m, pts_[c] - pts_[c - 1]);
  return m;
}

int Grid::nearest(double t) const {
  auto it = std::lower_bound(pts_.begin(), pts_.end(), t);
  if (it == pts_.begin()) return 0;
  if (it == pts_.end()) return size() - 1;
  int hi = static_cast<int>(it - pts_.begin());
  int lo = hi - 1;
  return (t - pts_[static_cast<size_t>(lo)] <= pts_[static_cast<size_t>(hi)] - t) ? lo : hi;
}

std::vector<double> Grid::quad_weights() const {
  const int nc = size();
  std::vector<double> w(static_cast<size_t>(nc), 0.0);
  for (int c = 0; c < nc; ++c) {
    double left = (c == 0) ? pts_[0] : pts_[static_cast<size_t>(c - 1)];
    double right = (c == nc - 1) ? pts_.back() : pts_[static_cast<size_t>(c + 1)];
    w[static_cast<size_t>(c)] = 0.5 * (right - left);
  }
  return w;
}

std::vector<double> Grid::cell_weights() const {
  std::vector<double> w = quad_weights();
  double s = 0.0;
  for (double x : w) s += x;
  for (double& x : w) x /= s;
  return w;
}

}  // namespace sfb
