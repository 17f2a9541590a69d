#pragma once

#include <vector>

#include "sfb/grid.hpp"

namespace sfb {

// Raw data binned onto a grid; empty cells have count 0.
struct Binned1D {
  std::vector<double> sum;
  std::vector<double> count;
};

struct Binned2D {
  int nc = 0;
  std::vector<double> sum;    // nc x nc
  std::vector<double> count;  // nc x nc

  double& sum_at(int a, int b) { return sum[static_cast<size_t>(a) * nc + b]; }
  double& count_at(int a, int b) { return count[static_cast<size_t>(a) * nc + b]; }
  double sum_at(int a, int b) const { return sum[static_cast<size_t>(a) * nc + b]; }
  double count_at(int a, int b) const { return count[static_cast<size_t>(a) * nc + b]; }
};

// Local-linear smoother on binned data with a truncated Gaussian kernel.
// If the local design is degenerate the fit falls back to a local constant;
// if no mass is in reach the bandwidth is escalated (x2, up to `escalations`
// doublings) before giving up with an error advising a larger bandwidth.
std::vector<double> local_linear_1d(const Grid& g, const Binned1D& data, double bandwidth,
                                    int escalations = 5);

// Local-plane smoother for a symmetric surface on the grid x grid lattice.
// Only the upper triangle is fitted; the result is symmetrized.
std::vector<double> local_plane_2d(const Grid& g, const Binned2D& data, double bandwidth,
                                   int escalations = 5);

}  // namespace sfb
