#include "sfb/fpca.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sfb/mathutil.hpp"
#include "sfb/rng.hpp"
#include "sfb/smoothing.hpp"

namespace sfb::fpca {

namespace {

// Sign convention: the first coordinate exceeding a tenth of the max magnitude
// must be positive; keeps eigenfunction signs stable across refits.
double sign_of(const double* v, int len) {
  double amax = 0.0;
  for (int c = 0; c < len; ++c) amax = std::max(amax, std::abs(v[c]));
  if (amax == 0.0) return 1.0;
  for (int c = 0; c < len; ++c)
    if (std::abs(v[c]) > 0.1 * amax) return v[c] < 0.0 ? -1.0 : 1.0;
  return 1.0;
}

void fix_sign(double* v, int len) {
  if (sign_of(v, len) < 0.0)
    for (int c = 0; c < len; ++c) v[c] = -v[c];
}

int components_for_pve(const std::vector<double>& values, double pve, int max_comp) {
  double total = std::accumulate(values.begin(), values.end(), 0.0);
  if (!(total > 0.0)) return 1;
  double cum = 0.0;
  int m = static_cast<int>(values.size());
  for (int l = 0; l < static_cast<int>(values.size()); ++l) {
    cum += values[static_cast<size_t>(l)];
    if (cum / total >= pve) {
      m = l + 1;
      break;
    }
  }
  if (max_comp > 0) m = std::min(m, max_comp);
  return std::max(m, 1);
}

std::vector<int> all_subjects(int n) {
  std::vector<int> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

// Univariate BLUP scores of one subject's observations in variable j under a
// fitted model, via the Woodbury identity (the noise block is diagonal).
void blup_scores(const UfpcaModel& u, const std::vector<Observation>& obs, double* out) {
  const int m = u.m;
  for (int l = 0; l < m; ++l) out[l] = 0.0;
  const int nobs = static_cast<int>(obs.size());
  if (nobs == 0 || m == 0) return;

  Eigen::MatrixXd phi(nobs, m);
  Eigen::VectorXd r(nobs);
  for (int k = 0; k < nobs; ++k) {
    InterpWeight w = interp_weight(u.grid, obs[static_cast<size_t>(k)].time);
    r(k) = obs[static_cast<size_t>(k)].value -
           (w.w0 * u.mean[static_cast<size_t>(w.c0)] + w.w1 * u.mean[static_cast<size_t>(w.c0 + 1)]);
    for (int l = 0; l < m; ++l) {
      const double* row = u.phi_row(l);
      phi(k, l) = w.w0 * row[w.c0] + w.w1 * row[w.c0 + 1];
    }
  }
  const double inv_s2 = 1.0 / u.sigma2;
  Eigen::MatrixXd a = phi.transpose() * phi * inv_s2;
  Eigen::VectorXd v = phi.transpose() * r * inv_s2;
  Eigen::MatrixXd g = a;
  for (int l = 0; l < m; ++l) g(l, l) += 1.0 / std::max(u.lambda[static_cast<size_t>(l)], 1e-300);
  Eigen::VectorXd beta = g.ldlt().solve(v);
  Eigen::VectorXd xi = v - a * beta;
  for (int l = 0; l < m; ++l) out[l] = u.lambda[static_cast<size_t>(l)] * xi(l);
}

}  // namespace

UfpcaModel fit_ufpca_subset(const SparseSampleSet& s, const std::vector<int>& subjects, int j,
                            const Grid& g, const Options& opts) {
  if (j < 0 || j >= s.p()) throw std::invalid_argument("fit_ufpca: variable index out of range");
  const int nc = g.size();
  const double len = g.length();
  // Auto bandwidth covers just the nearest grid cell; empty windows escalate.
  const double auto_h = 1.05 * len / (nc - 1);
  const double h_mean = opts.bw_mean_frac > 0.0 ? opts.bw_mean_frac * len : auto_h;
  const double h_cov = opts.bw_cov_frac > 0.0 ? opts.bw_cov_frac * len : auto_h;

  int subjects_with_data = 0;
  for (int idx : subjects)
    if (s.count(idx, j) > 0) ++subjects_with_data;
  if (subjects_with_data < 2)
    throw std::runtime_error("fit_ufpca: need at least 2 subjects with observations in variable '" +
                             s.variable_name(j) + "'");

  // Mean: pooled observations binned to the grid, then local-linear smoothed.
  Binned1D mean_bin{std::vector<double>(static_cast<size_t>(nc), 0.0),
                    std::vector<double>(static_cast<size_t>(nc), 0.0)};
  for (int idx : subjects) {
    for (const auto& ob : s.observations(idx, j)) {
      int c = g.nearest(ob.time);
      mean_bin.sum[static_cast<size_t>(c)] += ob.value;
      mean_bin.count[static_cast<size_t>(c)] += 1.0;
    }
  }
  std::vector<double> mean = local_linear_1d(g, mean_bin, h_mean, opts.bandwidth_escalations);

  // Raw covariance products with the diagonal (k == l) excluded, and squared
  // residuals along the diagonal for the noise variance.
  Binned2D cov_bin;
  cov_bin.nc = nc;
  cov_bin.sum.assign(static_cast<size_t>(nc) * nc, 0.0);
  cov_bin.count.assign(static_cast<size_t>(nc) * nc, 0.0);
  Binned1D diag_bin{std::vector<double>(static_cast<size_t>(nc), 0.0),
                    std::vector<double>(static_cast<size_t>(nc), 0.0)};
  std::vector<int> cell;
  std::vector<double> resid;
  for (int idx : subjects) {
    const auto& obs = s.observations(idx, j);
    const int nobs = static_cast<int>(obs.size());
    cell.resize(static_cast<size_t>(nobs));
    resid.resize(static_cast<size_t>(nobs));
    for (int k = 0; k < nobs; ++k) {
      cell[static_cast<size_t>(k)] = g.nearest(obs[static_cast<size_t>(k)].time);
      resid[static_cast<size_t>(k)] =
          obs[static_cast<size_t>(k)].value - interp_grid(g, mean, obs[static_cast<size_t>(k)].time);
      diag_bin.sum[static_cast<size_t>(cell[static_cast<size_t>(k)])] +=
          resid[static_cast<size_t>(k)] * resid[static_cast<size_t>(k)];
      diag_bin.count[static_cast<size_t>(cell[static_cast<size_t>(k)])] += 1.0;
    }
    for (int k = 0; k < nobs; ++k) {
      for (int l = k + 1; l < nobs; ++l) {
        double prod = resid[static_cast<size_t>(k)] * resid[static_cast<size_t>(l)];
        int a = cell[static_cast<size_t>(k)], b = cell[static_cast<size_t>(l)];
        cov_bin.sum_at(a, b) += prod;
        cov_bin.count_at(a, b) += 1.0;
        cov_bin.sum_at(b, a) += prod;
        cov_bin.count_at(b, a) += 1.0;
      }
    }
  }
  std::vector<double> cov = local_plane_2d(g, cov_bin, h_cov, opts.bandwidth_escalations);
  std::vector<double> diag_raw = local_linear_1d(g, diag_bin, h_cov, opts.bandwidth_escalations);

  // Noise variance: average diagonal gap over the middle half of the domain.
  double gap = 0.0;
  int gap_cells = 0;
  const double lo = g.t_min() + 0.25 * len, hi = g.t_max() - 0.25 * len;
  for (int c = 0; c < nc; ++c) {
    if (g[c] < lo || g[c] > hi) continue;
    gap += diag_raw[static_cast<size_t>(c)] - cov[static_cast<size_t>(c) * nc + c];
    ++gap_cells;
  }
  double sigma2 = gap_cells > 0 ? gap / gap_cells : 0.0;
  sigma2 = std::max(sigma2, opts.sigma2_floor);

  // Eigenanalysis of the smoothed covariance with quadrature weights.
  std::vector<double> w = g.quad_weights();
  Eigen::MatrixXd b(nc, nc);
  for (int a = 0; a < nc; ++a)
    for (int c = 0; c < nc; ++c)
      b(a, c) = std::sqrt(w[static_cast<size_t>(a)] * w[static_cast<size_t>(c)]) *
                0.5 * (cov[static_cast<size_t>(a) * nc + c] + cov[static_cast<size_t>(c) * nc + a]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("fit_ufpca: eigendecomposition failed");

  std::vector<double> lambda_all(static_cast<size_t>(nc));
  for (int l = 0; l < nc; ++l)
    lambda_all[static_cast<size_t>(l)] = std::max(eig.eigenvalues()(nc - 1 - l), 0.0);
  int m = components_for_pve(lambda_all, opts.pve_uni, opts.max_comp);
  // Zero eigenvalues carry no signal; never keep components past the first
  // numerically vanishing one.
  for (int l = 1; l < m; ++l) {
    if (lambda_all[static_cast<size_t>(l)] <= 1e-12 * lambda_all[0]) {
      m = l;
      break;
    }
  }

  UfpcaModel model;
  model.grid = g;
  model.mean = std::move(mean);
  model.m = m;
  model.sigma2 = sigma2;
  model.lambda.assign(lambda_all.begin(), lambda_all.begin() + m);
  {
    double total = std::accumulate(lambda_all.begin(), lambda_all.end(), 0.0);
    double kept = std::accumulate(model.lambda.begin(), model.lambda.end(), 0.0);
    model.pve_reached = total > 0.0 ? kept / total : 1.0;
  }
  model.phi.resize(static_cast<size_t>(m) * nc);
  for (int l = 0; l < m; ++l) {
    double* row = model.phi.data() + static_cast<size_t>(l) * nc;
    for (int c = 0; c < nc; ++c)
      row[c] = eig.eigenvectors()(c, nc - 1 - l) / std::sqrt(w[static_cast<size_t>(c)]);
    fix_sign(row, nc);
  }

  // BLUP scores for the subjects the model was fitted on.
  const int nsub = static_cast<int>(subjects.size());
  model.scores.assign(static_cast<size_t>(nsub) * m, 0.0);
  for (int i = 0; i < nsub; ++i)
    blup_scores(model, s.observations(subjects[static_cast<size_t>(i)], j),
                model.scores.data() + static_cast<size_t>(i) * m);
  return model;
}

UfpcaModel fit_ufpca(const SparseSampleSet& s, int j, const Grid& g, const Options& opts) {
  return fit_ufpca_subset(s, all_subjects(s.n()), j, g, opts);
}

MfpcaModel fit_mfpca_subset(const SparseSampleSet& s, const std::vector<int>& subjects,
                            const Grid& g, const Options& opts) {
  const int p = s.p();
  const int nsub = static_cast<int>(subjects.size());
  if (nsub < 2) throw std::runtime_error("fit_mfpca: need at least 2 subjects");

  MfpcaModel model;
  model.grid = g;
  model.n = nsub;
  model.p = p;
  model.uni.reserve(static_cast<size_t>(p));
  for (int j = 0; j < p; ++j) model.uni.push_back(fit_ufpca_subset(s, subjects, j, g, opts));

  model.m_plus = 0;
  for (const auto& u : model.uni) model.m_plus += u.m;
  const int mp = model.m_plus;

  model.xi.assign(static_cast<size_t>(nsub) * mp, 0.0);
  for (int i = 0; i < nsub; ++i) {
    int off = 0;
    for (int j = 0; j < p; ++j) {
      const auto& u = model.uni[static_cast<size_t>(j)];
      for (int l = 0; l < u.m; ++l)
        model.xi[static_cast<size_t>(i) * mp + off + l] =
            u.scores[static_cast<size_t>(i) * u.m + l];
      off += u.m;
    }
  }

  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> xi(
      model.xi.data(), nsub, mp);
  Eigen::MatrixXd z = (xi.transpose() * xi) / static_cast<double>(nsub - 1);
  z = 0.5 * (z + z.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(z);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("fit_mfpca: score-covariance eigendecomposition failed");
  const double nu_max = std::max(eig.eigenvalues().maxCoeff(), 0.0);
  if (eig.eigenvalues().minCoeff() < -1e-6 * std::max(nu_max, 1.0))
    throw std::runtime_error("fit_mfpca: internal error, Z is not positive semidefinite");

  std::vector<double> nu_all(static_cast<size_t>(mp));
  for (int l = 0; l < mp; ++l)
    nu_all[static_cast<size_t>(l)] = std::max(eig.eigenvalues()(mp - 1 - l), 0.0);
  int m = components_for_pve(nu_all, opts.pve_mult, opts.max_comp);
  for (int l = 1; l < m; ++l) {
    if (nu_all[static_cast<size_t>(l)] <= 1e-12 * nu_all[0]) {
      m = l;
      break;
    }
  }
  model.m = m;
  model.nu.assign(nu_all.begin(), nu_all.begin() + m);

  const int nc = g.size();
  model.cvec.assign(static_cast<size_t>(mp) * m, 0.0);
  model.psi.assign(static_cast<size_t>(m) * p * nc, 0.0);
  for (int comp = 0; comp < m; ++comp) {
    Eigen::VectorXd cm = eig.eigenvectors().col(mp - 1 - comp);
    // Assemble psi_m per variable from the univariate eigenfunctions.
    std::vector<double> assembled(static_cast<size_t>(p) * nc, 0.0);
    int off = 0;
    for (int j = 0; j < p; ++j) {
      const auto& u = model.uni[static_cast<size_t>(j)];
      for (int l = 0; l < u.m; ++l) {
        const double* row = u.phi_row(l);
        for (int c = 0; c < nc; ++c)
          assembled[static_cast<size_t>(j) * nc + c] += cm(off + l) * row[c];
      }
      off += u.m;
    }
    // One sign applied to both the coefficient vector and the assembled
    // eigenfunction keeps scores and functions consistent.
    const double sgn = sign_of(assembled.data(), p * nc);
    for (int l = 0; l < mp; ++l) model.cvec[static_cast<size_t>(l) * m + comp] = sgn * cm(l);
    for (int jc = 0; jc < p * nc; ++jc)
      model.psi[static_cast<size_t>(comp) * p * nc + jc] = sgn * assembled[static_cast<size_t>(jc)];
  }

  // Multivariate scores reproduce Xi * c exactly by construction.
  model.rho.assign(static_cast<size_t>(nsub) * m, 0.0);
  for (int i = 0; i < nsub; ++i)
    for (int comp = 0; comp < m; ++comp) {
      double acc = 0.0;
      for (int l = 0; l < mp; ++l)
        acc += model.xi[static_cast<size_t>(i) * mp + l] * model.cvec[static_cast<size_t>(l) * m + comp];
      model.rho[static_cast<size_t>(i) * m + comp] = acc;
    }
  return model;
}

MfpcaModel fit_mfpca(const SparseSampleSet& s, const Grid& g, const Options& opts) {
  return fit_mfpca_subset(s, all_subjects(s.n()), g, opts);
}

void conditional_fit(const MfpcaModel& model, const SparseSampleSet& s, std::vector<double>& fit,
                     std::vector<double>& var) {
  const int n = s.n(), p = s.p(), nc = model.grid.size(), m = model.m;
  if (p != model.p) throw std::invalid_argument("conditional_fit: variable count mismatch");
  fit.assign(static_cast<size_t>(n) * p * nc, 0.0);
  var.assign(static_cast<size_t>(n) * p * nc, 0.0);

  Eigen::MatrixXd v_diag = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd v_inv = Eigen::MatrixXd::Zero(m, m);
  for (int comp = 0; comp < m; ++comp) {
    v_diag(comp, comp) = model.nu[static_cast<size_t>(comp)];
    v_inv(comp, comp) = 1.0 / std::max(model.nu[static_cast<size_t>(comp)], 1e-300);
  }

  // psi panels per variable: nc x m.
  std::vector<Eigen::MatrixXd> panel(static_cast<size_t>(p));
  for (int j = 0; j < p; ++j) {
    panel[static_cast<size_t>(j)].resize(nc, m);
    for (int c = 0; c < nc; ++c)
      for (int comp = 0; comp < m; ++comp)
        panel[static_cast<size_t>(j)](c, comp) = model.psi_at(comp, j, c);
  }

  std::vector<double> xi_stacked(static_cast<size_t>(model.m_plus));
  for (int i = 0; i < n; ++i) {
    // Univariate BLUP scores under this model, combined into rho.
    int off = 0;
    for (int j = 0; j < p; ++j) {
      const auto& u = model.uni[static_cast<size_t>(j)];
      blup_scores(u, s.observations(i, j), xi_stacked.data() + off);
      off += u.m;
    }
    Eigen::VectorXd rho(m);
    for (int comp = 0; comp < m; ++comp) {
      double acc = 0.0;
      for (int l = 0; l < model.m_plus; ++l)
        acc += xi_stacked[static_cast<size_t>(l)] * model.cvec[static_cast<size_t>(l) * m + comp];
      rho(comp) = acc;
    }

    // Score-error covariance Omega = V - V Psi' Sigma^{-1} Psi V through the
    // Woodbury identity; the noise block is diagonal per variable.
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
    for (int j = 0; j < p; ++j) {
      const auto& obs = s.observations(i, j);
      if (obs.empty()) continue;
      Eigen::MatrixXd psi_obs(static_cast<int>(obs.size()), m);
      for (int k = 0; k < static_cast<int>(obs.size()); ++k) {
        InterpWeight w = interp_weight(model.grid, obs[static_cast<size_t>(k)].time);
        for (int comp = 0; comp < m; ++comp)
          psi_obs(k, comp) = w.w0 * model.psi_at(comp, j, w.c0) +
                             w.w1 * model.psi_at(comp, j, w.c0 + 1);
      }
      a += psi_obs.transpose() * psi_obs / model.uni[static_cast<size_t>(j)].sigma2;
    }
    Eigen::MatrixXd g_mat = v_inv + a;
    Eigen::MatrixXd g_inv_a = g_mat.ldlt().solve(a);
    Eigen::MatrixXd omega = v_diag - v_diag * (a - a * g_inv_a) * v_diag;
    omega = 0.5 * (omega + omega.transpose());

    for (int j = 0; j < p; ++j) {
      const auto& u = model.uni[static_cast<size_t>(j)];
      const Eigen::MatrixXd& pj = panel[static_cast<size_t>(j)];
      Eigen::VectorXd fit_j = pj * rho;
      Eigen::MatrixXd po = pj * omega;
      for (int c = 0; c < nc; ++c) {
        size_t at = (static_cast<size_t>(i) * p + j) * nc + c;
        fit[at] = u.mean[static_cast<size_t>(c)] + fit_j(c);
        double s2 = po.row(c).dot(pj.row(c));
        var[at] = std::max(s2, 0.0);
      }
    }
  }
}

FitResult mfpca_fit_curves(const MfpcaModel& model, const SparseSampleSet& s, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("mfpca_fit_curves: alpha must be in (0, 1)");
  const int n = s.n(), p = s.p(), nc = model.grid.size();
  std::vector<double> fit, var;
  conditional_fit(model, s, fit, var);
  const double z = normal_quantile(1.0 - alpha / 2.0);

  FitResult out{CompleteCurves(n, p, model.grid), CompleteCurves(n, p, model.grid),
                CompleteCurves(n, p, model.grid), alpha, "mfpca", 0};
  for (size_t k = 0; k < fit.size(); ++k) {
    double sd = std::sqrt(var[k]);
    out.fitted.v[k] = fit[k];
    out.lower.v[k] = fit[k] - z * sd;
    out.upper.v[k] = fit[k] + z * sd;
  }
  return out;
}

FitResult bmfpca_fit(const SparseSampleSet& s, const Grid& g, const BootstrapOptions& opts) {
  const int n = s.n(), p = s.p(), nc = g.size();
  const int B = opts.resamples ? static_cast<int>(opts.resamples->size()) : opts.B;
  if (B < 1) throw std::invalid_argument("bmfpca_fit: B >= 1 required");

  // Pre-draw all resamples so the parallel refits stay deterministic.
  std::vector<std::vector<int>> resamples;
  if (opts.resamples) {
    resamples = *opts.resamples;
    for (const auto& r : resamples)
      if (static_cast<int>(r.size()) != n)
        throw std::invalid_argument("bmfpca_fit: forced resample has wrong size");
  } else {
    rng::Engine gen = rng::make_engine(opts.seed);
    resamples.resize(static_cast<size_t>(B));
    for (int b = 0; b < B; ++b) {
      auto& r = resamples[static_cast<size_t>(b)];
      r.resize(static_cast<size_t>(n));
      for (int i = 0; i < n; ++i)
        r[static_cast<size_t>(i)] = static_cast<int>(rng::below(gen, static_cast<std::uint64_t>(n)));
    }
  }

  const size_t cells = static_cast<size_t>(n) * p * nc;
  std::vector<std::vector<double>> fit_b(static_cast<size_t>(B)), var_b(static_cast<size_t>(B));
  std::vector<std::string> failures(static_cast<size_t>(B));

#pragma omp parallel for schedule(dynamic)
  for (int b = 0; b < B; ++b) {
    std::vector<int> idx = resamples[static_cast<size_t>(b)];
    bool ok = false;
    for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
      try {
        MfpcaModel model = fit_mfpca_subset(s, idx, g, opts.fit);
        conditional_fit(model, s, fit_b[static_cast<size_t>(b)], var_b[static_cast<size_t>(b)]);
        ok = true;
      } catch (const std::exception& e) {
        failures[static_cast<size_t>(b)] = e.what();
        if (opts.resamples) break;  // forced resamples are not redrawn
        rng::Engine redraw = rng::make_engine(
            rng::derive(opts.seed, static_cast<std::uint64_t>(b), static_cast<std::uint64_t>(attempt) + 1));
        for (int i = 0; i < n; ++i)
          idx[static_cast<size_t>(i)] =
              static_cast<int>(rng::below(redraw, static_cast<std::uint64_t>(n)));
      }
    }
    if (!ok) fit_b[static_cast<size_t>(b)].clear();
  }

  for (int b = 0; b < B; ++b)
    if (fit_b[static_cast<size_t>(b)].empty())
      throw std::runtime_error("bmfpca_fit: a bootstrap resample repeatedly failed to fit: " +
                               failures[static_cast<size_t>(b)]);

  // Deterministic ordered fold over replicates.
  std::vector<double> s1(cells, 0.0), s2(cells, 0.0), sv(cells, 0.0);
  for (int b = 0; b < B; ++b) {
    const auto& fb = fit_b[static_cast<size_t>(b)];
    const auto& vb = var_b[static_cast<size_t>(b)];
    for (size_t k = 0; k < cells; ++k) {
      s1[k] += fb[k];
      s2[k] += fb[k] * fb[k];
      sv[k] += vb[k];
    }
  }

  const double z = normal_quantile(1.0 - opts.alpha / 2.0);
  FitResult out{CompleteCurves(n, p, g), CompleteCurves(n, p, g), CompleteCurves(n, p, g),
                opts.alpha, "bmfpca", B};
  const double inv_b = 1.0 / B;
  for (size_t k = 0; k < cells; ++k) {
    double mean = s1[k] * inv_b;
    double between = std::max(s2[k] * inv_b - mean * mean, 0.0);
    double total_var = sv[k] * inv_b + between;
    double sd = std::sqrt(total_var);
    out.fitted.v[k] = mean;
    out.lower.v[k] = mean - z * sd;
    out.upper.v[k] = mean + z * sd;
  }
  return out;
}

}  // namespace sfb::fpca
