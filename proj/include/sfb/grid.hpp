#pragma once

#include <vector>

namespace sfb {

// Common evaluation grid: strictly increasing time points on a closed interval.
class Grid {
public:
  Grid() : pts_{0.0, 1.0} {}
  explicit Grid(std::vector<double> points);

  // n equidistant points on [a, b].
  static Grid equidistant(int n = 50, double a = 0.0, double b = 1.0);

  int size() const { return static_cast<int>(pts_.size()); }
  double operator[](int c) const { return pts_[static_cast<size_t>(c)]; }
  const std::vector<double>& points() const { return pts_; }
  double t_min() const { return pts_.front(); }
  double t_max() const { return pts_.back(); }
  double length() const { return t_max() - t_min(); }
  double min_spacing() const;

  // Index of the grid point closest to t (ties resolve to the lower index).
  int nearest(double t) const;

  // Unnormalized trapezoid quadrature weights for integrals over [t_min, t_max].
  std::vector<double> quad_weights() const;

  // Cell weights (t_{c+1}-t_{c-1})/2 with clamped virtual endpoints, normalized
  // to sum to one exactly.
  std::vector<double> cell_weights() const;

  bool operator==(const Grid&) const = default;

private:
  std::vector<double> pts_;
};

}  // namespace sfb
