#pragma once

#include <cstdint>
#include <vector>

#include "sfb/grid.hpp"

namespace sfb {

// Matern correlation M(r; nu) = 2^{1-nu}/Gamma(nu) (sqrt(2 nu) r)^nu K_nu(sqrt(2 nu) r),
// with M(0; nu) = 1.
double matern(double r, double nu);

double normal_quantile(double p);
double normal_cdf(double x);
double chi2_quantile(double p, double df);  // p == 1 maps to +infinity
double chi2_cdf(double x, double df);

// Linear interpolation of a grid function, clamped at the ends.
double interp_grid(const Grid& g, const std::vector<double>& values, double t);

// Interpolation stencil: values[t] ~ w0*f[c0] + w1*f[c0+1].
struct InterpWeight {
  int c0;
  double w0;
  double w1;
};
InterpWeight interp_weight(const Grid& g, double t);

// Quasi-random unit directions with the prefix property: the first k rows of
// halton_sphere(p, n) equal halton_sphere(p, k) for k <= n.
struct DirectionSet {
  int p = 0;
  int ndirs = 0;
  std::vector<double> u;  // ndirs x p, row-major unit vectors

  const double* dir(int k) const { return u.data() + static_cast<size_t>(k) * p; }
  static DirectionSet halton_sphere(int p, int ndirs);
};

}  // namespace sfb
