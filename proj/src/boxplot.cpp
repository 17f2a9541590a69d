#include "sfb/boxplot.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "sfb/mathutil.hpp"

namespace sfb::boxplot {

namespace {

// Members = deepest ceil(n_pool/2) of `pool` by rank; pool in original indices.
std::vector<int> deepest_half(const std::vector<int>& pool, const depth::DepthReport& depths) {
  std::vector<int> sorted = pool;
  std::stable_sort(sorted.begin(), sorted.end(), [&](int a, int b) {
    return depths.ranks[static_cast<size_t>(a)] < depths.ranks[static_cast<size_t>(b)];
  });
  size_t keep = (sorted.size() + 1) / 2;
  sorted.resize(keep);
  std::sort(sorted.begin(), sorted.end());
  return sorted;
}

int deepest_of(const std::vector<int>& pool, const depth::DepthReport& depths) {
  int best = pool.front();
  for (int i : pool)
    if (depths.ranks[static_cast<size_t>(i)] < depths.ranks[static_cast<size_t>(best)]) best = i;
  return best;
}

BoxplotGeometry assemble(const CompleteCurves& curves, const depth::DepthReport& depths,
                         const std::vector<char>& stage1, const BoxplotOptions& opts,
                         const GridMask* mask, bool two_stage) {
  const int n = curves.n, p = curves.p, nc = curves.grid.size();
  if (static_cast<int>(depths.ranks.size()) != n)
    throw std::invalid_argument("boxplot: depth report does not match curves");
  if (mask && (mask->n() != n || mask->p() != p || mask->nc() != nc))
    throw std::invalid_argument("boxplot: mask dimensions do not match curves");
  if (!(opts.factor > 0.0)) throw std::invalid_argument("boxplot: factor must be positive");

  std::vector<int> pool;
  for (int i = 0; i < n; ++i)
    if (!stage1[static_cast<size_t>(i)]) pool.push_back(i);
  if (static_cast<int>(pool.size()) < 2)
    throw std::runtime_error("boxplot: stage-1 screening left fewer than 2 curves");

  BoxplotGeometry g;
  g.grid = curves.grid;
  g.factor = opts.factor;
  g.two_stage = two_stage;
  g.members = deepest_half(pool, depths);
  g.median_subject = deepest_of(pool, depths);

  std::vector<char> is_member(static_cast<size_t>(n), 0);
  for (int i : g.members) is_member[static_cast<size_t>(i)] = 1;

  g.vars.resize(static_cast<size_t>(p));
  std::vector<char> fence_out(static_cast<size_t>(n), 0);
  for (int j = 0; j < p; ++j) {
    VariablePanel& panel = g.vars[static_cast<size_t>(j)];
    panel.name = j < static_cast<int>(opts.variable_names.size())
                     ? opts.variable_names[static_cast<size_t>(j)]
                     : "var" + std::to_string(j + 1);
    panel.env_lo.resize(static_cast<size_t>(nc));
    panel.env_hi.resize(static_cast<size_t>(nc));
    panel.fence_lo.resize(static_cast<size_t>(nc));
    panel.fence_hi.resize(static_cast<size_t>(nc));
    panel.median.resize(static_cast<size_t>(nc));
    panel.median_missing.assign(static_cast<size_t>(nc), 0);
    for (int c = 0; c < nc; ++c) {
      double lo = curves.at(g.members.front(), j, c), hi = lo;
      for (int i : g.members) {
        double v = curves.at(i, j, c);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      panel.env_lo[static_cast<size_t>(c)] = lo;
      panel.env_hi[static_cast<size_t>(c)] = hi;
      double width = hi - lo;
      panel.fence_lo[static_cast<size_t>(c)] = lo - opts.factor * width;
      panel.fence_hi[static_cast<size_t>(c)] = hi + opts.factor * width;
      panel.median[static_cast<size_t>(c)] = curves.at(g.median_subject, j, c);
      if (mask && !mask->present(g.median_subject, j, c))
        panel.median_missing[static_cast<size_t>(c)] = 1;
    }
    if (mask) {
      SparsenessProfile prof =
          sparseness_profile(*mask, g.members, j, curves.grid, opts.boundary_bw_cells);
      panel.sparseness = std::move(prof.s);
      panel.boundary = std::move(prof.boundary);
    } else {
      panel.sparseness.assign(static_cast<size_t>(nc), 0.0);
      panel.boundary.assign(static_cast<size_t>(nc), 1.0);
    }
    // Fence exits: any remaining curve strictly outside at any cell.
    for (int i : pool) {
      for (int c = 0; c < nc; ++c) {
        double v = curves.at(i, j, c);
        if (v > panel.fence_hi[static_cast<size_t>(c)] || v < panel.fence_lo[static_cast<size_t>(c)]) {
          fence_out[static_cast<size_t>(i)] = 1;
          break;
        }
      }
    }
  }

  // Outlier curve records with per-cell tags, per variable.
  for (int j = 0; j < p; ++j) {
    VariablePanel& panel = g.vars[static_cast<size_t>(j)];
    for (int i = 0; i < n; ++i) {
      int stage = stage1[static_cast<size_t>(i)] ? 1 : (fence_out[static_cast<size_t>(i)] ? 2 : 0);
      if (stage == 0) continue;
      OutlierCurve oc;
      oc.subject = i;
      oc.stage = stage;
      oc.values.resize(static_cast<size_t>(nc));
      oc.tags.resize(static_cast<size_t>(nc));
      for (int c = 0; c < nc; ++c) {
        oc.values[static_cast<size_t>(c)] = curves.at(i, j, c);
        bool observed = mask ? mask->present(i, j, c) : true;
        oc.tags[static_cast<size_t>(c)] =
            observed ? static_cast<std::uint8_t>(stage == 1 ? CellTag::observed_stage1
                                                            : CellTag::observed_stage2)
                     : static_cast<std::uint8_t>(CellTag::missing);
      }
      panel.outliers.push_back(std::move(oc));
    }
  }
  return g;
}

}  // namespace

CentralRegion central_region(const CompleteCurves& curves, const depth::DepthReport& depths) {
  const int n = curves.n, p = curves.p, nc = curves.grid.size();
  if (n < 2) throw std::invalid_argument("central_region: need at least 2 curves");
  std::vector<int> pool(static_cast<size_t>(n));
  std::iota(pool.begin(), pool.end(), 0);
  CentralRegion region;
  region.members = deepest_half(pool, depths);
  region.env_lo.resize(static_cast<size_t>(p) * nc);
  region.env_hi.resize(static_cast<size_t>(p) * nc);
  for (int j = 0; j < p; ++j)
    for (int c = 0; c < nc; ++c) {
      double lo = curves.at(region.members.front(), j, c), hi = lo;
      for (int i : region.members) {
        double v = curves.at(i, j, c);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      region.env_lo[static_cast<size_t>(j) * nc + c] = lo;
      region.env_hi[static_cast<size_t>(j) * nc + c] = hi;
    }
  return region;
}

BoxplotGeometry functional_boxplot(const CompleteCurves& curves, const depth::DepthReport& depths,
                                   const BoxplotOptions& opts, const GridMask* mask) {
  std::vector<char> stage1(static_cast<size_t>(curves.n), 0);
  return assemble(curves, depths, stage1, opts, mask, false);
}

BoxplotGeometry two_stage_boxplot(const CompleteCurves& curves, const depth::DepthReport& depths,
                                  const depth::OutlyingnessReport& outl,
                                  const BoxplotOptions& opts, const GridMask* mask) {
  if (static_cast<int>(outl.flagged.size()) != curves.n)
    throw std::invalid_argument("two_stage_boxplot: outlyingness report does not match curves");
  int flagged = 0;
  for (char f : outl.flagged) flagged += f ? 1 : 0;
  if (flagged >= curves.n - 1)
    throw std::runtime_error("two_stage_boxplot: stage 1 flagged nearly every curve");
  std::vector<char> stage1(outl.flagged.begin(), outl.flagged.end());
  return assemble(curves, depths, stage1, opts, mask, true);
}

SparsenessProfile sparseness_profile(const GridMask& mask, const std::vector<int>& members, int j,
                                     const Grid& g, double bw_cells) {
  if (members.empty()) throw std::invalid_argument("sparseness_profile: empty member set");
  const int nc = g.size();
  SparsenessProfile prof;
  prof.s.resize(static_cast<size_t>(nc));
  for (int c = 0; c < nc; ++c) {
    int miss = 0;
    for (int i : members)
      if (!mask.present(i, j, c)) ++miss;
    prof.s[static_cast<size_t>(c)] = static_cast<double>(miss) / static_cast<double>(members.size());
  }
  // Gaussian kernel smoothing of the observed proportion.
  const double h = bw_cells * (g.length() / (nc - 1));
  prof.boundary.resize(static_cast<size_t>(nc));
  for (int c = 0; c < nc; ++c) {
    double num = 0.0, den = 0.0;
    for (int k = 0; k < nc; ++k) {
      double u = (g[k] - g[c]) / h;
      double w = std::exp(-0.5 * u * u);
      num += w * (1.0 - prof.s[static_cast<size_t>(k)]);
      den += w;
    }
    prof.boundary[static_cast<size_t>(c)] = std::min(std::max(num / den, 0.0), 1.0);
  }
  return prof;
}

std::vector<int> outlier_subjects(const BoxplotGeometry& g) {
  std::vector<int> out;
  if (g.vars.empty()) return out;
  for (const auto& oc : g.vars.front().outliers) out.push_back(oc.subject);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<char> outlier_flags(const BoxplotGeometry& g, int n) {
  std::vector<char> flags(static_cast<size_t>(n), 0);
  for (int i : outlier_subjects(g)) flags[static_cast<size_t>(i)] = 1;
  return flags;
}

std::string to_string(IntensityOptions::Norm n) {
  return n == IntensityOptions::per_variable ? "per_variable" : "global";
}

IntensityOptions::Norm norm_from_string(const std::string& s) {
  if (s == "per_variable") return IntensityOptions::per_variable;
  if (s == "global") return IntensityOptions::global;
  throw std::invalid_argument("unknown intensity normalization '" + s + "'");
}

namespace {

double silverman_bw(const std::vector<double>& x, double fallback_scale) {
  const size_t m = x.size();
  if (m < 2) return std::max(fallback_scale, 1e-9);
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(m);
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  double sd = std::sqrt(ss / static_cast<double>(m - 1));
  double h = 1.06 * sd * std::pow(static_cast<double>(m), -0.2);
  if (!(h > 0.0)) h = std::max(fallback_scale, 1e-9 * (1.0 + std::abs(mean)));
  return h;
}

// Marching-squares segments chained greedily into polylines.
std::vector<ContourLine> contour_lines(const std::vector<double>& field, int nt, int nv,
                                       double t_lo, double t_hi, double v_lo, double v_hi,
                                       double level) {
  auto value = [&](int a, int b) { return field[static_cast<size_t>(a) * nv + b]; };
  auto tcoord = [&](double a) { return t_lo + (t_hi - t_lo) * (a + 0.5) / nt; };
  auto vcoord = [&](double b) { return v_lo + (v_hi - v_lo) * (b + 0.5) / nv; };
  using Pt = std::pair<double, double>;
  std::vector<std::pair<Pt, Pt>> segs;
  auto lerp = [&](double va, double vb) {
    double d = vb - va;
    return std::abs(d) < 1e-300 ? 0.5 : (level - va) / d;
  };
  for (int a = 0; a + 1 < nt; ++a) {
    for (int b = 0; b + 1 < nv; ++b) {
      double f00 = value(a, b), f10 = value(a + 1, b), f01 = value(a, b + 1),
             f11 = value(a + 1, b + 1);
      int idx = (f00 >= level ? 1 : 0) | (f10 >= level ? 2 : 0) | (f11 >= level ? 4 : 0) |
                (f01 >= level ? 8 : 0);
      if (idx == 0 || idx == 15) continue;
      Pt e_bottom{tcoord(a + lerp(f00, f10)), vcoord(b)};
      Pt e_top{tcoord(a + lerp(f01, f11)), vcoord(b + 1)};
      Pt e_left{tcoord(a), vcoord(b + lerp(f00, f01))};
      Pt e_right{tcoord(a + 1), vcoord(b + lerp(f10, f11))};
      switch (idx) {
        case 1: case 14: segs.push_back({e_left, e_bottom}); break;
        case 2: case 13: segs.push_back({e_bottom, e_right}); break;
        case 3: case 12: segs.push_back({e_left, e_right}); break;
        case 4: case 11: segs.push_back({e_top, e_right}); break;
        case 5:
          segs.push_back({e_left, e_top});
          segs.push_back({e_bottom, e_right});
          break;
        case 6: case 9: segs.push_back({e_bottom, e_top}); break;
        case 7: case 8: segs.push_back({e_left, e_top}); break;
        case 10:
          segs.push_back({e_left, e_bottom});
          segs.push_back({e_top, e_right});
          break;
        default: break;
      }
    }
  }
  // Chain segments whose endpoints coincide.
  std::vector<ContourLine> lines;
  std::vector<char> used(segs.size(), 0);
  auto close = [](const Pt& a, const Pt& b) {
    return std::abs(a.first - b.first) < 1e-9 && std::abs(a.second - b.second) < 1e-9;
  };
  for (size_t s = 0; s < segs.size(); ++s) {
    if (used[s]) continue;
    used[s] = 1;
    ContourLine line;
    line.level = level;
    line.points = {segs[s].first, segs[s].second};
    bool grew = true;
    while (grew) {
      grew = false;
      for (size_t k = 0; k < segs.size(); ++k) {
        if (used[k]) continue;
        if (close(line.points.back(), segs[k].first)) {
          line.points.push_back(segs[k].second);
          used[k] = 1;
          grew = true;
        } else if (close(line.points.back(), segs[k].second)) {
          line.points.push_back(segs[k].first);
          used[k] = 1;
          grew = true;
        } else if (close(line.points.front(), segs[k].second)) {
          line.points.insert(line.points.begin(), segs[k].first);
          used[k] = 1;
          grew = true;
        } else if (close(line.points.front(), segs[k].first)) {
          line.points.insert(line.points.begin(), segs[k].second);
          used[k] = 1;
          grew = true;
        }
      }
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace

IntensityField intensity_field(const GridMask& mask, const fpca::FitResult& fit,
                               const BoxplotGeometry& geometry, const IntensityOptions& opts) {
  const int p = fit.fitted.p, nc = fit.fitted.grid.size();
  if (mask.n() != fit.fitted.n || mask.p() != p || mask.nc() != nc)
    throw std::invalid_argument("intensity_field: mask does not match the fit");
  if (static_cast<int>(geometry.vars.size()) != p)
    throw std::invalid_argument("intensity_field: geometry does not match the fit");

  IntensityField field;
  field.norm = opts.norm;
  field.vars.resize(static_cast<size_t>(p));
  const Grid& g = fit.fitted.grid;

  for (int j = 0; j < p; ++j) {
    const VariablePanel& panel = geometry.vars[static_cast<size_t>(j)];
    IntensityPanel& out = field.vars[static_cast<size_t>(j)];
    out.name = panel.name;
    out.nt = opts.nt;
    out.nv = opts.nv;
    out.t_lo = g.t_min();
    out.t_hi = g.t_max();
    out.v_lo = *std::min_element(panel.env_lo.begin(), panel.env_lo.end());
    out.v_hi = *std::max_element(panel.env_hi.begin(), panel.env_hi.end());
    if (!(out.v_hi > out.v_lo)) out.v_hi = out.v_lo + 1.0;  // zero-width region
    out.values.assign(static_cast<size_t>(opts.nt) * opts.nv, 0.0);

    // Sparseness events: missing cells of central-region members.
    std::vector<double> et, ev;
    for (int i : geometry.members)
      for (int c = 0; c < nc; ++c)
        if (!mask.present(i, j, c)) {
          et.push_back(g[c]);
          ev.push_back(fit.fitted.at(i, j, c));
        }
    out.events = static_cast<long>(et.size());
    if (et.empty()) continue;

    double bw_t = opts.bw_t > 0.0 ? opts.bw_t : silverman_bw(et, 0.05 * (out.t_hi - out.t_lo));
    double bw_v = opts.bw_v > 0.0 ? opts.bw_v : silverman_bw(ev, 0.05 * (out.v_hi - out.v_lo));

    const double cell_dt = (out.t_hi - out.t_lo) / opts.nt;
    const double cell_dv = (out.v_hi - out.v_lo) / opts.nv;
#pragma omp parallel for schedule(static)
    for (int a = 0; a < opts.nt; ++a) {
      double tc = out.t_lo + (a + 0.5) * cell_dt;
      // Clip to the central region: the envelope band at this time.
      double env_lo = interp_grid(g, panel.env_lo, tc);
      double env_hi = interp_grid(g, panel.env_hi, tc);
      for (int b = 0; b < opts.nv; ++b) {
        double vc = out.v_lo + (b + 0.5) * cell_dv;
        if (vc < env_lo || vc > env_hi) continue;
        double acc = 0.0;
        for (size_t e = 0; e < et.size(); ++e) {
          double ut = (tc - et[e]) / bw_t;
          double uv = (vc - ev[e]) / bw_v;
          acc += std::exp(-0.5 * (ut * ut + uv * uv));
        }
        out.values[static_cast<size_t>(a) * opts.nv + b] =
            acc / (2.0 * std::numbers::pi * bw_t * bw_v * static_cast<double>(et.size()));
      }
    }
    double mass = 0.0;
    for (double v : out.values) mass += v;
    out.raw_mass = mass * cell_dt * cell_dv;
  }

  // Normalization: per-variable or global maximum mapped to one.
  if (opts.norm == IntensityOptions::per_variable) {
    for (auto& panel : field.vars) {
      double mx = 0.0;
      for (double v : panel.values) mx = std::max(mx, v);
      if (mx > 0.0)
        for (double& v : panel.values) v /= mx;
    }
  } else {
    double mx = 0.0;
    for (const auto& panel : field.vars)
      for (double v : panel.values) mx = std::max(mx, v);
    if (mx > 0.0)
      for (auto& panel : field.vars)
        for (double& v : panel.values) v /= mx;
  }

  if (opts.contours) {
    for (auto& panel : field.vars) {
      if (panel.events == 0) continue;
      for (double level : {0.25, 0.5, 0.75}) {
        auto lines = contour_lines(panel.values, panel.nt, panel.nv, panel.t_lo, panel.t_hi,
                                   panel.v_lo, panel.v_hi, level);
        panel.contours.insert(panel.contours.end(), lines.begin(), lines.end());
      }
    }
  }
  return field;
}

}  // namespace sfb::boxplot
