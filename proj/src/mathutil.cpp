#include "sfb/mathutil.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sfb {

double matern(double r, double nu) {
  if (nu <= 0.0) throw std::invalid_argument("matern: nu must be positive");
  if (r < 0.0) throw std::invalid_argument("matern: r must be nonnegative");
  if (r < 1e-12) return 1.0;
  const double x = std::sqrt(2.0 * nu) * r;
  if (x > 700.0) return 0.0;
  return std::pow(2.0, 1.0 - nu) / std::tgamma(nu) * std::pow(x, nu) * std::cyl_bessel_k(nu, x);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p in (0,1) required");
  boost::math::normal_distribution<> d(0.0, 1.0);
  return boost::math::quantile(d, p);
}

double normal_cdf(double x) {
  boost::math::normal_distribution<> d(0.0, 1.0);
  return boost::math::cdf(d, x);
}

double chi2_quantile(double p, double df) {
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  if (p <= 0.0) return 0.0;
  boost::math::chi_squared_distribution<> d(df);
  return boost::math::quantile(d, p);
}

double chi2_cdf(double x, double df) {
  if (x <= 0.0) return 0.0;
  boost::math::chi_squared_distribution<> d(df);
  return boost::math::cdf(d, x);
}

InterpWeight interp_weight(const Grid& g, double t) {
  const auto& pts = g.points();
  if (t <= pts.front()) return {0, 1.0, 0.0};
  if (t >= pts.back()) return {g.size() - 2, 0.0, 1.0};
  int hi = 1;
  {
    auto it = std::lower_bound(pts.begin(), pts.end(), t);
    hi = static_cast<int>(it - pts.begin());
    if (hi == 0) hi = 1;
  }
  int lo = hi - 1;
  double span = pts[static_cast<size_t>(hi)] - pts[static_cast<size_t>(lo)];
  double w1 = (t - pts[static_cast<size_t>(lo)]) / span;
  return {lo, 1.0 - w1, w1};
}

double interp_grid(const Grid& g, const std::vector<double>& values, double t) {
  InterpWeight w = interp_weight(g, t);
  return w.w0 * values[static_cast<size_t>(w.c0)] + w.w1 * values[static_cast<size_t>(w.c0 + 1)];
}

namespace {

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

double radical_inverse(std::uint64_t k, int base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (k > 0) {
    r += f * static_cast<double>(k % static_cast<std::uint64_t>(base));
    k /= static_cast<std::uint64_t>(base);
    f *= inv;
  }
  return r;
}

}  // namespace

DirectionSet DirectionSet::halton_sphere(int p, int ndirs) {
  if (p < 2) throw std::invalid_argument("halton_sphere: p >= 2 required");
  if (ndirs < 1) throw std::invalid_argument("halton_sphere: ndirs >= 1 required");
  if (p > static_cast<int>(sizeof(kPrimes) / sizeof(kPrimes[0])))
    throw std::invalid_argument("halton_sphere: dimension too large");
  DirectionSet d;
  d.p = p;
  d.ndirs = ndirs;
  d.u.resize(static_cast<size_t>(ndirs) * p);
  for (int k = 0; k < ndirs; ++k) {
    double norm2 = 0.0;
    double* row = d.u.data() + static_cast<size_t>(k) * p;
    for (int j = 0; j < p; ++j) {
      double uj = radical_inverse(static_cast<std::uint64_t>(k) + 1, kPrimes[j]);
      uj = std::min(std::max(uj, 1e-12), 1.0 - 1e-12);
      row[j] = normal_quantile(uj);
      norm2 += row[j] * row[j];
    }
    if (norm2 < 1e-300) {  // all coordinates mapped to ~0; pick an axis
      row[0] = 1.0;
      norm2 = 1.0;
    }
    double inv = 1.0 / std::sqrt(norm2);
    for (int j = 0; j < p; ++j) row[j] *= inv;
  }
  return d;
}

}  // namespace sfb
