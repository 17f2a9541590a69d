#include "sfb/depth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "sfb/robust.hpp"

namespace sfb::depth {

namespace {

using std::numbers::pi;

// ---- pointwise halfspace depth kernels -------------------------------------

int min_count_p1(const std::vector<double>& sorted, double q) {
  const int n = static_cast<int>(sorted.size());
  int le = static_cast<int>(std::upper_bound(sorted.begin(), sorted.end(), q) - sorted.begin());
  int ge = n - static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), q) - sorted.begin());
  return std::min(le, ge);
}

// Exact bivariate minimum closed-halfplane count by a circular sweep over the
// O(n) critical angles.
int min_count_p2(const double* pts, int n, const double* q) {
  int m0 = 0;
  std::vector<double> theta;
  theta.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    double dx = pts[2 * i] - q[0], dy = pts[2 * i + 1] - q[1];
    if (dx == 0.0 && dy == 0.0) {
      ++m0;
    } else {
      theta.push_back(std::atan2(dy, dx));
    }
  }
  if (theta.empty()) return m0;

  auto wrap = [](double a) {
    while (a < 0.0) a += 2.0 * pi;
    while (a >= 2.0 * pi) a -= 2.0 * pi;
    return a;
  };
  // A point with angle t is counted for directions in the closed arc
  // [t - pi/2, t + pi/2]. Events: +1 entering at the start, -1 after the end.
  struct Event {
    double angle;
    int delta;
  };
  std::vector<Event> ev;
  ev.reserve(2 * theta.size());
  for (double t : theta) {
    ev.push_back({wrap(t - 0.5 * pi), +1});
    ev.push_back({wrap(t + 0.5 * pi), -1});
  }
  std::sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) {
    if (a.angle != b.angle) return a.angle < b.angle;
    return a.delta < b.delta;
  });

  // Base arc: the widest gap between consecutive distinct event angles gives
  // the most numerically comfortable place to count directly.
  double best_gap = -1.0, base_angle = 0.0;
  size_t ne = ev.size();
  for (size_t k = 0; k < ne; ++k) {
    double a = ev[k].angle;
    double b = (k + 1 < ne) ? ev[k + 1].angle : ev[0].angle + 2.0 * pi;
    double gap = b - a;
    if (gap > best_gap) {
      best_gap = gap;
      base_angle = a + 0.5 * gap;
    }
  }
  int base_count = 0;
  for (double t : theta) {
    double d = std::cos(base_angle - t);
    if (d >= 0.0) ++base_count;
  }

  // Sweep one full turn starting just after base_angle, updating the count on
  // each open arc.
  std::vector<size_t> order(ne);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    double aa = ev[a].angle <= base_angle ? ev[a].angle + 2.0 * pi : ev[a].angle;
    double bb = ev[b].angle <= base_angle ? ev[b].angle + 2.0 * pi : ev[b].angle;
    return aa < bb;
  });
  int cnt = base_count, min_cnt = base_count;
  size_t k = 0;
  while (k < ne) {
    double a = ev[order[k]].angle;
    int delta = 0;
    while (k < ne && ev[order[k]].angle == a) {
      delta += ev[order[k]].delta;
      ++k;
    }
    cnt += delta;
    min_cnt = std::min(min_cnt, cnt);
  }
  return m0 + min_cnt;
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::mbd: return "mbd";
    case Method::mfhd_mfpca: return "mfhd_mfpca";
    case Method::mfhd_bmfpca: return "mfhd_bmfpca";
    case Method::rmfhd_aw: return "rmfhd_aw";
    case Method::rmfhd_naw: return "rmfhd_naw";
    case Method::rmfhd_dm: return "rmfhd_dm";
  }
  return "mfhd_mfpca";
}

Method method_from_string(const std::string& s) {
  if (s == "mbd") return Method::mbd;
  if (s == "mfhd_mfpca") return Method::mfhd_mfpca;
  if (s == "mfhd_bmfpca") return Method::mfhd_bmfpca;
  if (s == "rmfhd_aw") return Method::rmfhd_aw;
  if (s == "rmfhd_naw") return Method::rmfhd_naw;
  if (s == "rmfhd_dm") return Method::rmfhd_dm;
  throw std::invalid_argument("unknown depth method '" + s + "'");
}

std::vector<int> ranks_from_values(const std::vector<double>& values) {
  const int n = static_cast<int>(values.size());
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (values[static_cast<size_t>(a)] != values[static_cast<size_t>(b)])
      return values[static_cast<size_t>(a)] > values[static_cast<size_t>(b)];
    return a < b;
  });
  std::vector<int> ranks(static_cast<size_t>(n));
  for (int r = 0; r < n; ++r) ranks[static_cast<size_t>(order[static_cast<size_t>(r)])] = r + 1;
  return ranks;
}

void pointwise_depths(const double* pts, int n, const double* queries, int mq, int p,
                      const DirectionSet* dirs, double* out) {
  if (n < 1) throw std::invalid_argument("pointwise_depths: empty point set");
  if (p == 1) {
    std::vector<double> sorted(pts, pts + n);
    std::sort(sorted.begin(), sorted.end());
    for (int k = 0; k < mq; ++k)
      out[k] = static_cast<double>(min_count_p1(sorted, queries[k])) / n;
    return;
  }
  if (p == 2) {
    for (int k = 0; k < mq; ++k)
      out[k] = static_cast<double>(min_count_p2(pts, n, queries + 2 * k)) / n;
    return;
  }
  if (dirs == nullptr || dirs->ndirs < 1)
    throw std::invalid_argument("pointwise_depths: p >= 3 requires a direction set");
  std::vector<int> best(static_cast<size_t>(mq), n);
  std::vector<double> proj(static_cast<size_t>(n));
  for (int dd = 0; dd < dirs->ndirs; ++dd) {
    const double* u = dirs->dir(dd);
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int j = 0; j < p; ++j) acc += u[j] * pts[static_cast<size_t>(i) * p + j];
      proj[static_cast<size_t>(i)] = acc;
    }
    std::sort(proj.begin(), proj.end());
    for (int k = 0; k < mq; ++k) {
      double qp = 0.0;
      const double* q = queries + static_cast<size_t>(k) * p;
      for (int j = 0; j < p; ++j) qp += u[j] * q[j];
      // Count both the direction and its negation.
      int ge = n - static_cast<int>(std::lower_bound(proj.begin(), proj.end(), qp) - proj.begin());
      int le = static_cast<int>(std::upper_bound(proj.begin(), proj.end(), qp) - proj.begin());
      int c = std::min(ge, le);
      if (c < best[static_cast<size_t>(k)]) best[static_cast<size_t>(k)] = c;
    }
  }
  for (int k = 0; k < mq; ++k) out[k] = static_cast<double>(best[static_cast<size_t>(k)]) / n;
}

double halfspace_depth(const double* pts, int n, int p, const double* query, int ndirs) {
  double out = 0.0;
  if (p >= 3) {
    if (ndirs < 1) throw std::invalid_argument("halfspace_depth: ndirs >= 1 required for p >= 3");
    DirectionSet dirs = DirectionSet::halton_sphere(p, ndirs);
    pointwise_depths(pts, n, query, 1, p, &dirs, &out);
  } else {
    pointwise_depths(pts, n, query, 1, p, nullptr, &out);
  }
  return out;
}

namespace {

// Gather the cross-section of all curves at grid cell c into an n x p buffer.
void slice_at(const CompleteCurves& curves, int c, double* buf) {
  for (int i = 0; i < curves.n; ++i)
    for (int j = 0; j < curves.p; ++j)
      buf[static_cast<size_t>(i) * curves.p + j] = curves.at(i, j, c);
}

double hull_area(std::vector<std::pair<double, double>> pts) {
  if (pts.size() < 3) return 0.0;
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const size_t n = pts.size();
  if (n < 3) return 0.0;
  auto cross = [](const std::pair<double, double>& o, const std::pair<double, double>& a,
                  const std::pair<double, double>& b) {
    return (a.first - o.first) * (b.second - o.second) -
           (a.second - o.second) * (b.first - o.first);
  };
  std::vector<std::pair<double, double>> hull(2 * n);
  size_t k = 0;
  for (size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  size_t lower = k + 1;
  for (size_t i = n - 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k > 1 ? k - 1 : 0);
  double area = 0.0;
  for (size_t i = 0; i < hull.size(); ++i) {
    const auto& a = hull[i];
    const auto& b = hull[(i + 1) % hull.size()];
    area += a.first * b.second - b.first * a.second;
  }
  return 0.5 * std::abs(area);
}

// Volume of the depth region D_beta at one time slice, from the sample points
// whose depth reaches beta. Exact for p <= 2; for p = 3 a direction-sampled
// support-radius estimate around the centroid.
double region_volume(const double* slice, int n, int p, const std::vector<double>& depths,
                     double beta, const DirectionSet* dirs) {
  std::vector<int> keep;
  for (int i = 0; i < n; ++i)
    if (depths[static_cast<size_t>(i)] >= beta - 1e-12) keep.push_back(i);
  if (keep.empty()) return 0.0;
  if (p == 1) {
    double lo = slice[keep.front()], hi = lo;
    for (int i : keep) {
      lo = std::min(lo, slice[i]);
      hi = std::max(hi, slice[i]);
    }
    return hi - lo;
  }
  if (p == 2) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(keep.size());
    for (int i : keep) pts.push_back({slice[2 * i], slice[2 * i + 1]});
    return hull_area(std::move(pts));
  }
  if (p == 3) {
    double centroid[3] = {0, 0, 0};
    for (int i : keep)
      for (int j = 0; j < 3; ++j) centroid[j] += slice[static_cast<size_t>(i) * 3 + j];
    for (int j = 0; j < 3; ++j) centroid[j] /= static_cast<double>(keep.size());
    double acc = 0.0;
    for (int dd = 0; dd < dirs->ndirs; ++dd) {
      const double* u = dirs->dir(dd);
      double hmax = 0.0;
      for (int i : keep) {
        double s = 0.0;
        for (int j = 0; j < 3; ++j)
          s += u[j] * (slice[static_cast<size_t>(i) * 3 + j] - centroid[j]);
        hmax = std::max(hmax, s);
      }
      acc += hmax * hmax * hmax;
    }
    return (4.0 / 3.0) * pi * acc / dirs->ndirs;
  }
  throw std::runtime_error("volume weights are not supported for p > 3");
}

// Pointwise depth profile hd[c][i] for all curves, parallel over grid cells.
std::vector<double> depth_profile(const CompleteCurves& curves, const DirectionSet* dirs) {
  const int n = curves.n, p = curves.p, nc = curves.grid.size();
  std::vector<double> hd(static_cast<size_t>(nc) * n);
#pragma omp parallel
  {
    std::vector<double> slice(static_cast<size_t>(n) * p);
#pragma omp for schedule(static)
    for (int c = 0; c < nc; ++c) {
      slice_at(curves, c, slice.data());
      pointwise_depths(slice.data(), n, slice.data(), n, p, dirs,
                       hd.data() + static_cast<size_t>(c) * n);
    }
  }
  return hd;
}

std::vector<double> scheme_weights(const CompleteCurves& curves, const WeightScheme& w,
                                   const std::vector<double>& hd, const DirectionSet* dirs) {
  const int n = curves.n, p = curves.p, nc = curves.grid.size();
  if (w.kind == WeightScheme::constant) return curves.grid.cell_weights();

  const double beta = w.beta > 0.0 ? w.beta
                                   : std::ceil(0.25 * n) / static_cast<double>(n);
  std::vector<double> spacing(static_cast<size_t>(nc));
  for (int c = 0; c < nc; ++c) {
    double left = (c == 0) ? curves.grid[0] : curves.grid[c - 1];
    double right = (c == nc - 1) ? curves.grid[nc - 1] : curves.grid[c + 1];
    spacing[static_cast<size_t>(c)] = right - left;
  }
  std::vector<double> vol(static_cast<size_t>(nc), 0.0);
  std::vector<double> slice(static_cast<size_t>(n) * p);
  std::vector<double> depths(static_cast<size_t>(n));
  for (int c = 0; c < nc; ++c) {
    slice_at(curves, c, slice.data());
    std::copy(hd.begin() + static_cast<size_t>(c) * n, hd.begin() + static_cast<size_t>(c + 1) * n,
              depths.begin());
    vol[static_cast<size_t>(c)] = region_volume(slice.data(), n, p, depths, beta, dirs);
  }
  double total = 0.0;
  for (int c = 0; c < nc; ++c) {
    vol[static_cast<size_t>(c)] *= spacing[static_cast<size_t>(c)];
    total += vol[static_cast<size_t>(c)];
  }
  if (!(total > 0.0))
    throw std::runtime_error(
        "mfhd: the depth region is empty at every time point; use a smaller beta");
  for (double& v : vol) v /= total;
  return vol;
}

DepthReport mfhd_impl(const CompleteCurves& curves, const WeightScheme& w, int ndirs, Method tag) {
  const int n = curves.n, p = curves.p, nc = curves.grid.size();
  if (n < 1) throw std::invalid_argument("mfhd: empty sample");
  DirectionSet dirs;
  const DirectionSet* dptr = nullptr;
  if (p >= 3) {
    dirs = DirectionSet::halton_sphere(p, ndirs);
    dptr = &dirs;
  }
  std::vector<double> hd = depth_profile(curves, dptr);
  std::vector<double> weights = scheme_weights(curves, w, hd, dptr);

  DepthReport rep;
  rep.method = tag;
  rep.values.assign(static_cast<size_t>(n), 0.0);
  for (int c = 0; c < nc; ++c) {
    const double wc = weights[static_cast<size_t>(c)];
    const double* row = hd.data() + static_cast<size_t>(c) * n;
    for (int i = 0; i < n; ++i) rep.values[static_cast<size_t>(i)] += wc * row[i];
  }
  rep.ranks = ranks_from_values(rep.values);
  return rep;
}

}  // namespace

DepthReport mfhd(const CompleteCurves& curves, const WeightScheme& w, int ndirs, Method tag) {
  return mfhd_impl(curves, w, ndirs, tag);
}

DepthReport mbd(const CompleteCurves& curves) {
  if (curves.p != 1) throw std::invalid_argument("mbd: univariate curves required");
  const int n = curves.n, nc = curves.grid.size();
  if (n < 2) throw std::invalid_argument("mbd: need at least 2 curves");

  std::vector<std::int64_t> covered(static_cast<size_t>(n), 0);
  std::vector<double> sorted(static_cast<size_t>(n));
  const std::int64_t pairs_total = static_cast<std::int64_t>(n) * (n - 1) / 2;
#pragma omp parallel
  {
    std::vector<std::int64_t> local(static_cast<size_t>(n), 0);
    std::vector<double> buf(static_cast<size_t>(n));
#pragma omp for schedule(static)
    for (int c = 0; c < nc; ++c) {
      for (int i = 0; i < n; ++i) buf[static_cast<size_t>(i)] = curves.at(i, 0, c);
      std::vector<double> s = buf;
      std::sort(s.begin(), s.end());
      for (int i = 0; i < n; ++i) {
        double v = buf[static_cast<size_t>(i)];
        std::int64_t below =
            std::lower_bound(s.begin(), s.end(), v) - s.begin();           // strictly below
        std::int64_t above =
            s.end() - std::upper_bound(s.begin(), s.end(), v);             // strictly above
        local[static_cast<size_t>(i)] +=
            pairs_total - below * (below - 1) / 2 - above * (above - 1) / 2;
      }
    }
#pragma omp critical
    for (int i = 0; i < n; ++i) covered[static_cast<size_t>(i)] += local[static_cast<size_t>(i)];
  }
  (void)sorted;

  DepthReport rep;
  rep.method = Method::mbd;
  rep.values.resize(static_cast<size_t>(n));
  const double denom = static_cast<double>(pairs_total) * nc;
  for (int i = 0; i < n; ++i)
    rep.values[static_cast<size_t>(i)] = static_cast<double>(covered[static_cast<size_t>(i)]) / denom;
  rep.ranks = ranks_from_values(rep.values);
  return rep;
}

DepthReport revised_depth(const CompleteCurves& fit, const CompleteCurves& ub,
                          const CompleteCurves& lb, RevisedVariant variant, const WeightScheme& w,
                          int ndirs) {
  const int n = fit.n, p = fit.p, nc = fit.grid.size();
  if (ub.n != n || lb.n != n || ub.p != p || lb.p != p || ub.grid.size() != nc ||
      lb.grid.size() != nc)
    throw std::invalid_argument("revised_depth: fit/upper/lower dimensions differ");
  for (size_t k = 0; k < fit.v.size(); ++k)
    if (ub.v[k] < lb.v[k])
      throw std::invalid_argument("revised_depth: upper bound below lower bound");

  DepthReport rep;
  rep.method = variant == RevisedVariant::aw
                   ? Method::rmfhd_aw
                   : (variant == RevisedVariant::naw ? Method::rmfhd_naw : Method::rmfhd_dm);

  if (variant == RevisedVariant::dm) {
    // Stack (upper, lower) into a 2p-variate sample of size n.
    CompleteCurves stacked(n, 2 * p, fit.grid);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < p; ++j)
        for (int c = 0; c < nc; ++c) {
          stacked.at(i, j, c) = ub.at(i, j, c);
          stacked.at(i, p + j, c) = lb.at(i, j, c);
        }
    DepthReport inner = mfhd_impl(stacked, w, ndirs, rep.method);
    rep.values = std::move(inner.values);
    rep.ranks = std::move(inner.ranks);
    return rep;
  }

  // Tripled reference set: fit, upper, lower.
  CompleteCurves tripled(3 * n, p, fit.grid);
  std::copy(fit.v.begin(), fit.v.end(), tripled.v.begin());
  std::copy(ub.v.begin(), ub.v.end(), tripled.v.begin() + fit.v.size());
  std::copy(lb.v.begin(), lb.v.end(), tripled.v.begin() + 2 * fit.v.size());
  DepthReport inner = mfhd_impl(tripled, w, ndirs, rep.method);

  rep.values.resize(static_cast<size_t>(n));
  const double wf = variant == RevisedVariant::aw ? 1.0 / 3.0 : 0.5;
  const double wb = variant == RevisedVariant::aw ? 1.0 / 3.0 : 0.25;
  for (int i = 0; i < n; ++i) {
    rep.values[static_cast<size_t>(i)] =
        wf * inner.values[static_cast<size_t>(i)] +
        wb * inner.values[static_cast<size_t>(n + i)] +
        wb * inner.values[static_cast<size_t>(2 * n + i)];
  }
  rep.ranks = ranks_from_values(rep.values);
  return rep;
}

DepthReport revised_depth(const fpca::FitResult& fit, RevisedVariant variant,
                          const WeightScheme& w, int ndirs) {
  return revised_depth(fit.fitted, fit.upper, fit.lower, variant, w, ndirs);
}

OutlyingnessReport directional_outlyingness(const CompleteCurves& curves, double cutoff_q,
                                            int ndirs) {
  const int n = curves.n, p = curves.p, nc = curves.grid.size();
  if (n <= p + 1)
    throw std::invalid_argument("directional_outlyingness: need n > p + 1 curves");

  DirectionSet dirs;
  if (p >= 2) dirs = DirectionSet::halton_sphere(p, ndirs);

  // Pointwise outlyingness vectors O[c][i][:], parallel over grid cells.
  std::vector<double> o(static_cast<size_t>(nc) * n * p, 0.0);
#pragma omp parallel
  {
    std::vector<double> slice(static_cast<size_t>(n) * p);
    std::vector<double> proj(static_cast<size_t>(n));
    std::vector<double> work(static_cast<size_t>(n));
    std::vector<double> sdo(static_cast<size_t>(n));
    std::vector<double> center(static_cast<size_t>(p));
#pragma omp for schedule(static)
    for (int c = 0; c < nc; ++c) {
      slice_at(curves, c, slice.data());
      // Coordinatewise median center.
      for (int j = 0; j < p; ++j) {
        for (int i = 0; i < n; ++i) work[static_cast<size_t>(i)] = slice[static_cast<size_t>(i) * p + j];
        std::sort(work.begin(), work.end());
        center[static_cast<size_t>(j)] = (n % 2 == 1)
                                             ? work[static_cast<size_t>(n / 2)]
                                             : 0.5 * (work[static_cast<size_t>(n / 2 - 1)] +
                                                      work[static_cast<size_t>(n / 2)]);
      }
      std::fill(sdo.begin(), sdo.end(), 0.0);
      if (p == 1) {
        double med = center[0];
        for (int i = 0; i < n; ++i) work[static_cast<size_t>(i)] = std::abs(slice[static_cast<size_t>(i)] - med);
        std::sort(work.begin(), work.end());
        double mad = 1.4826 * ((n % 2 == 1) ? work[static_cast<size_t>(n / 2)]
                                            : 0.5 * (work[static_cast<size_t>(n / 2 - 1)] +
                                                     work[static_cast<size_t>(n / 2)]));
        if (mad <= 0.0) mad = 1e-8 * (1.0 + std::abs(med));
        for (int i = 0; i < n; ++i)
          sdo[static_cast<size_t>(i)] = std::abs(slice[static_cast<size_t>(i)] - med) / mad;
      } else {
        for (int dd = 0; dd < dirs.ndirs; ++dd) {
          const double* u = dirs.dir(dd);
          for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int j = 0; j < p; ++j) acc += u[j] * slice[static_cast<size_t>(i) * p + j];
            proj[static_cast<size_t>(i)] = acc;
          }
          work = proj;
          std::sort(work.begin(), work.end());
          double med = (n % 2 == 1) ? work[static_cast<size_t>(n / 2)]
                                    : 0.5 * (work[static_cast<size_t>(n / 2 - 1)] +
                                             work[static_cast<size_t>(n / 2)]);
          for (int i = 0; i < n; ++i) work[static_cast<size_t>(i)] = std::abs(proj[static_cast<size_t>(i)] - med);
          std::sort(work.begin(), work.end());
          double mad = 1.4826 * ((n % 2 == 1) ? work[static_cast<size_t>(n / 2)]
                                              : 0.5 * (work[static_cast<size_t>(n / 2 - 1)] +
                                                       work[static_cast<size_t>(n / 2)]));
          if (mad <= 0.0) mad = 1e-8 * (1.0 + std::abs(med));
          for (int i = 0; i < n; ++i) {
            double v = std::abs(proj[static_cast<size_t>(i)] - med) / mad;
            if (v > sdo[static_cast<size_t>(i)]) sdo[static_cast<size_t>(i)] = v;
          }
        }
      }
      // O = SDO * unit direction away from the pointwise median.
      for (int i = 0; i < n; ++i) {
        double norm2 = 0.0;
        for (int j = 0; j < p; ++j) {
          double d = slice[static_cast<size_t>(i) * p + j] - center[static_cast<size_t>(j)];
          norm2 += d * d;
        }
        double* oij = o.data() + (static_cast<size_t>(c) * n + i) * p;
        if (norm2 > 0.0) {
          double inv = 1.0 / std::sqrt(norm2);
          for (int j = 0; j < p; ++j)
            oij[j] = sdo[static_cast<size_t>(i)] *
                     (slice[static_cast<size_t>(i) * p + j] - center[static_cast<size_t>(j)]) * inv;
        }
      }
    }
  }

  // Time-weighted summaries.
  std::vector<double> w = curves.grid.cell_weights();
  OutlyingnessReport rep;
  rep.p = p;
  rep.mo.assign(static_cast<size_t>(n) * p, 0.0);
  rep.vo.assign(static_cast<size_t>(n), 0.0);
  for (int c = 0; c < nc; ++c)
    for (int i = 0; i < n; ++i) {
      const double* oij = o.data() + (static_cast<size_t>(c) * n + i) * p;
      for (int j = 0; j < p; ++j) rep.mo[static_cast<size_t>(i) * p + j] += w[static_cast<size_t>(c)] * oij[j];
    }
  for (int c = 0; c < nc; ++c)
    for (int i = 0; i < n; ++i) {
      const double* oij = o.data() + (static_cast<size_t>(c) * n + i) * p;
      double d2 = 0.0;
      for (int j = 0; j < p; ++j) {
        double d = oij[j] - rep.mo[static_cast<size_t>(i) * p + j];
        d2 += d * d;
      }
      rep.vo[static_cast<size_t>(i)] += w[static_cast<size_t>(c)] * d2;
    }

  Eigen::MatrixXd feat(n, p + 1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) feat(i, j) = rep.mo[static_cast<size_t>(i) * p + j];
    feat(i, p) = rep.vo[static_cast<size_t>(i)];
  }
  robust::McdEstimate mcd = robust::reweighted_mcd(feat);
  rep.rd2 = mcd.rd2;
  rep.cutoff = chi2_quantile(cutoff_q, p + 1);
  rep.flagged.assign(static_cast<size_t>(n), 0);
  for (int i = 0; i < n; ++i)
    rep.flagged[static_cast<size_t>(i)] = rep.rd2[static_cast<size_t>(i)] > rep.cutoff ? 1 : 0;
  return rep;
}

// ---- serial reference implementations --------------------------------------

namespace reference {

double halfspace_depth(const double* pts, int n, int p, const double* query, int ndirs) {
  if (p == 1) {
    int le = 0, ge = 0;
    for (int i = 0; i < n; ++i) {
      if (pts[i] <= query[0]) ++le;
      if (pts[i] >= query[0]) ++ge;
    }
    return static_cast<double>(std::min(le, ge)) / n;
  }
  if (p == 2) {
    // Enumerate open arcs between critical angles and count directly at each
    // arc midpoint.
    int m0 = 0;
    std::vector<double> theta;
    for (int i = 0; i < n; ++i) {
      double dx = pts[2 * i] - query[0], dy = pts[2 * i + 1] - query[1];
      if (dx == 0.0 && dy == 0.0) {
        ++m0;
        continue;
      }
      theta.push_back(std::atan2(dy, dx));
    }
    if (theta.empty()) return 1.0;
    std::vector<double> bounds;
    for (double t : theta) {
      for (double b : {t - 0.5 * pi, t + 0.5 * pi}) {
        while (b < 0.0) b += 2.0 * pi;
        while (b >= 2.0 * pi) b -= 2.0 * pi;
        bounds.push_back(b);
      }
    }
    std::sort(bounds.begin(), bounds.end());
    bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());
    int best = n;
    const size_t nb = bounds.size();
    for (size_t k = 0; k < nb; ++k) {
      double a = bounds[k];
      double b = (k + 1 < nb) ? bounds[k + 1] : bounds[0] + 2.0 * pi;
      double mid = 0.5 * (a + b);
      int cnt = 0;
      for (double t : theta)
        if (std::cos(mid - t) >= 0.0) ++cnt;
      best = std::min(best, cnt);
    }
    return static_cast<double>(m0 + best) / n;
  }
  DirectionSet dirs = DirectionSet::halton_sphere(p, ndirs);
  int best = n;
  for (int dd = 0; dd < dirs.ndirs; ++dd) {
    const double* u = dirs.dir(dd);
    double qp = 0.0;
    for (int j = 0; j < p; ++j) qp += u[j] * query[j];
    int ge = 0, le = 0;
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < p; ++j) s += u[j] * pts[static_cast<size_t>(i) * p + j];
      if (s >= qp) ++ge;
      if (s <= qp) ++le;
    }
    best = std::min({best, ge, le});
  }
  return static_cast<double>(best) / n;
}

DepthReport mfhd(const CompleteCurves& curves, const WeightScheme& w, int ndirs, Method tag) {
  const int n = curves.n, p = curves.p, nc = curves.grid.size();
  // Pointwise depths, one query at a time.
  std::vector<double> hd(static_cast<size_t>(nc) * n);
  std::vector<double> slice(static_cast<size_t>(n) * p);
  for (int c = 0; c < nc; ++c) {
    slice_at(curves, c, slice.data());
    for (int i = 0; i < n; ++i)
      hd[static_cast<size_t>(c) * n + i] =
          halfspace_depth(slice.data(), n, p, slice.data() + static_cast<size_t>(i) * p, ndirs);
  }
  DirectionSet dirs;
  const DirectionSet* dptr = nullptr;
  if (p >= 3) {
    dirs = DirectionSet::halton_sphere(p, ndirs);
    dptr = &dirs;
  }
  std::vector<double> weights = scheme_weights(curves, w, hd, dptr);
  DepthReport rep;
  rep.method = tag;
  rep.values.assign(static_cast<size_t>(n), 0.0);
  for (int c = 0; c < nc; ++c)
    for (int i = 0; i < n; ++i)
      rep.values[static_cast<size_t>(i)] += weights[static_cast<size_t>(c)] * hd[static_cast<size_t>(c) * n + i];
  rep.ranks = ranks_from_values(rep.values);
  return rep;
}

DepthReport mbd(const CompleteCurves& curves) {
  if (curves.p != 1) throw std::invalid_argument("mbd: univariate curves required");
  const int n = curves.n, nc = curves.grid.size();
  std::vector<std::int64_t> covered(static_cast<size_t>(n), 0);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int i = 0; i < n; ++i)
        for (int c = 0; c < nc; ++c) {
          double lo = std::min(curves.at(a, 0, c), curves.at(b, 0, c));
          double hi = std::max(curves.at(a, 0, c), curves.at(b, 0, c));
          double v = curves.at(i, 0, c);
          if (v >= lo && v <= hi) ++covered[static_cast<size_t>(i)];
        }
  DepthReport rep;
  rep.method = Method::mbd;
  rep.values.resize(static_cast<size_t>(n));
  const double denom = static_cast<double>(n) * (n - 1) / 2 * nc;
  for (int i = 0; i < n; ++i)
    rep.values[static_cast<size_t>(i)] = static_cast<double>(covered[static_cast<size_t>(i)]) / denom;
  rep.ranks = ranks_from_values(rep.values);
  return rep;
}

}  // namespace reference

}  // namespace sfb::depth
