#include "sfb/simgen.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "sfb/mathutil.hpp"
#include "sfb/rng.hpp"

namespace sfb::simgen {

namespace {

using std::numbers::pi;

double mean_component(int j, double t) {
  switch (j) {
    case 0: return 5.0 * std::sin(2.0 * pi * t);
    case 1: return 5.0 * std::cos(2.0 * pi * t);
    case 2: return 5.0 * (t - 1.0) * (t - 1.0);
    default: throw std::invalid_argument("mean_component: variable out of range");
  }
}

// Model 4 shifts the mean arguments per variable.
constexpr double kModel4Shift[3] = {0.3, 0.2, 0.5};

double model5_outlier_bump(int j, double t) {
  switch (j) {
    case 0: return 2.0 * std::sin(4.0 * pi * t);
    case 1: return 2.0 * std::cos(4.0 * pi * t);
    case 2: return 2.0 * std::cos(8.0 * pi * t);
    default: return 0.0;
  }
}

bool grid_is_equidistant(const Grid& g) {
  double d = (g.t_max() - g.t_min()) / (g.size() - 1);
  for (int c = 1; c < g.size(); ++c)
    if (std::abs((g[c] - g[c - 1]) - d) > 1e-9 * std::max(1.0, std::abs(d))) return false;
  return true;
}

// Per-subject Matern cross-covariance matrix over (variable, grid cell).
Eigen::MatrixXd matern_cross_cov(const Grid& g, const std::vector<double>& sigma2,
                                 const std::vector<double>& nu_diag, double rho_cross) {
  const int p = static_cast<int>(sigma2.size());
  const int nc = g.size();
  const int dim = p * nc;
  const bool equi = grid_is_equidistant(g);
  Eigen::MatrixXd cov(dim, dim);
  for (int a = 0; a < p; ++a) {
    for (int b = a; b < p; ++b) {
      double nu_ab = 0.5 * (nu_diag[static_cast<size_t>(a)] + nu_diag[static_cast<size_t>(b)]);
      double scale = (a == b) ? sigma2[static_cast<size_t>(a)]
                              : rho_cross * std::sqrt(sigma2[static_cast<size_t>(a)] *
                                                      sigma2[static_cast<size_t>(b)]);
      std::vector<double> by_lag;
      if (equi) {
        by_lag.resize(static_cast<size_t>(nc));
        for (int k = 0; k < nc; ++k) by_lag[static_cast<size_t>(k)] = matern(g[k] - g[0], nu_ab);
      }
      for (int c = 0; c < nc; ++c) {
        for (int d = 0; d < nc; ++d) {
          double m = equi ? by_lag[static_cast<size_t>(std::abs(c - d))]
                          : matern(std::abs(g[c] - g[d]), nu_ab);
          double value = scale * m;
          cov(a * nc + c, b * nc + d) = value;
          cov(b * nc + d, a * nc + c) = value;
        }
      }
    }
  }
  return cov;
}

}  // namespace

std::vector<double> fourier_basis(int count, const Grid& g) {
  if (count < 1) throw std::invalid_argument("fourier_basis: count >= 1 required");
  const int nc = g.size();
  const double a = g.t_min(), len = g.length();
  const double scale = 1.0 / std::sqrt(len);
  std::vector<double> out(static_cast<size_t>(count) * nc);
  for (int k = 0; k < count; ++k) {
    for (int c = 0; c < nc; ++c) {
      double u = (g[c] - a) / len;
      double v;
      if (k == 0) {
        v = 1.0;
      } else {
        int harmonic = (k + 1) / 2;
        v = (k % 2 == 1) ? std::sqrt(2.0) * std::sin(2.0 * pi * harmonic * u)
                         : std::sqrt(2.0) * std::cos(2.0 * pi * harmonic * u);
      }
      out[static_cast<size_t>(k) * nc + c] = scale * v;
    }
  }
  return out;
}

std::vector<double> fourier_eigenbasis(int M, const Grid& g, int p) {
  if (M < 1) throw std::invalid_argument("fourier_eigenbasis: M >= 1 required");
  if (p < 1) throw std::invalid_argument("fourier_eigenbasis: p >= 1 required");
  const int nc = g.size();
  std::vector<double> raw = fourier_basis(M * p, g);
  std::vector<double> psi(static_cast<size_t>(M) * p * nc);
  const double scale = 1.0 / std::sqrt(static_cast<double>(p));
  for (int m = 0; m < M; ++m)
    for (int j = 0; j < p; ++j)
      for (int c = 0; c < nc; ++c)
        psi[(static_cast<size_t>(m) * p + j) * nc + c] =
            scale * raw[static_cast<size_t>(m * p + j) * nc + c];
  return psi;
}

LabeledDataset generate(const SimConfig& c) {
  if (c.model_id < 1 || c.model_id > 8)
    throw std::invalid_argument("generate: model_id must be in 1..8");
  if (c.p != 1 && c.p != 3)
    throw std::invalid_argument("generate: models are written for p = 3 (or p = 1 reduction)");
  if (c.n < 1) throw std::invalid_argument("generate: n >= 1 required");
  if (!(c.contamination >= 0.0 && c.contamination < 1.0))
    throw std::invalid_argument("generate: contamination must be in [0, 1)");
  if (c.M < 1) throw std::invalid_argument("generate: M >= 1 required");

  const int n = c.n, p = c.p, nc = c.grid.size(), M = c.M;
  rng::Engine master = rng::make_engine(c.seed);

  // Dataset-level draws come from the master stream; each subject then gets
  // its own derived stream with a fixed draw order (scores, noise, then
  // model-specific perturbations), so a subject's curve does not depend on
  // the other subjects' outlier branches.
  std::vector<double> sigma2(static_cast<size_t>(p));
  for (int j = 0; j < p; ++j) sigma2[static_cast<size_t>(j)] = rng::uniform(master, 0.5, 0.7);

  const int n_out = static_cast<int>(std::lround(c.contamination * n));
  std::vector<int> perm(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
  rng::shuffle(perm, master);
  std::vector<char> outlier(static_cast<size_t>(n), 0);
  for (int k = 0; k < n_out; ++k) outlier[static_cast<size_t>(perm[static_cast<size_t>(k)])] = 1;

  std::vector<double> nu(static_cast<size_t>(M));
  for (int m = 0; m < M; ++m) nu[static_cast<size_t>(m)] = static_cast<double>(M - m) / M;
  std::vector<double> psi = fourier_eigenbasis(M, c.grid, p);

  CompleteCurves curves(n, p, c.grid);
  CompleteCurves signal(n, p, c.grid);

  std::vector<double> u_i(static_cast<size_t>(p) * nc);
  std::vector<double> eps(static_cast<size_t>(p) * nc);
  Eigen::LLT<Eigen::MatrixXd> llt;

  for (int i = 0; i < n; ++i) {
    const bool is_out = outlier[static_cast<size_t>(i)] != 0;
    rng::Engine gen = rng::make_engine(rng::derive(c.seed, static_cast<std::uint64_t>(i), 23));

    std::fill(u_i.begin(), u_i.end(), 0.0);
    for (int m = 0; m < M; ++m) {
      double score = rng::normal(gen) * std::sqrt(nu[static_cast<size_t>(m)]);
      const double* base = psi.data() + static_cast<size_t>(m) * p * nc;
      for (int jc = 0; jc < p * nc; ++jc) u_i[static_cast<size_t>(jc)] += score * base[jc];
    }

    if (c.model_id == 8) {
      std::vector<double> nu_diag(static_cast<size_t>(p));
      for (int j = 0; j < p; ++j)
        nu_diag[static_cast<size_t>(j)] =
            is_out ? rng::uniform(gen, 0.3, 0.5) : rng::uniform(gen, 2.0, 3.0);
      Eigen::VectorXd z(p * nc);
      for (int k = 0; k < p * nc; ++k) z(k) = rng::normal(gen);
      Eigen::MatrixXd cov = matern_cross_cov(c.grid, sigma2, nu_diag, c.rho_cross);
      llt.compute(cov);
      if (llt.info() != Eigen::Success) {
        cov.diagonal().array() += 1e-8;
        llt.compute(cov);
        if (llt.info() != Eigen::Success)
          throw std::runtime_error("generate: model 8 cross-covariance is not positive definite");
      }
      Eigen::VectorXd e = llt.matrixL() * z;
      for (int k = 0; k < p * nc; ++k) eps[static_cast<size_t>(k)] = e(k);
    } else {
      for (int j = 0; j < p; ++j) {
        double sd = std::sqrt(sigma2[static_cast<size_t>(j)]);
        for (int cgrid = 0; cgrid < nc; ++cgrid)
          eps[static_cast<size_t>(j) * nc + cgrid] = sd * rng::normal(gen);
      }
    }

    // Model-specific mean and score-process perturbations.
    std::vector<double> w_flip(static_cast<size_t>(p), 0.0);
    double t_s = 0.0;
    std::vector<double> r_exp(static_cast<size_t>(p), 0.0);
    std::vector<double> u_shift(static_cast<size_t>(p), 0.0);
    double z1 = 0, z2 = 0, z3 = 0, z4 = 0;
    if (is_out) {
      switch (c.model_id) {
        case 2:
          for (int j = 0; j < p; ++j) w_flip[static_cast<size_t>(j)] = rng::sign_flip(gen);
          break;
        case 3:
          t_s = rng::uniform(gen, 0.0, 0.9);
          for (int j = 0; j < p; ++j) w_flip[static_cast<size_t>(j)] = rng::sign_flip(gen);
          break;
        case 6:
          for (int j = 0; j < p; ++j) r_exp[static_cast<size_t>(j)] = rng::exponential(gen, 2.0);
          break;
        case 7:
          z1 = rng::uniform(gen, 2.0, 8.0);
          z2 = rng::uniform(gen, 2.0, 8.0);
          z3 = rng::uniform(gen, 2.0, 8.0);
          break;
        default: break;
      }
    } else {
      switch (c.model_id) {
        case 5:
          for (int j = 0; j < p; ++j)
            u_shift[static_cast<size_t>(j)] = rng::uniform(gen, -2.1, 2.1);
          break;
        case 7: z4 = rng::uniform(gen, 2.0, 8.0); break;
        default: break;
      }
    }

    const double t_lo = c.grid.t_min(), len = c.grid.length();
    for (int j = 0; j < p; ++j) {
      for (int cg = 0; cg < nc; ++cg) {
        double t = (c.grid[cg] - t_lo) / len;  // models are written on [0, 1]
        double mu = mean_component(j, t);
        double u = u_i[static_cast<size_t>(j) * nc + cg];

        if (is_out) {
          switch (c.model_id) {
            case 2: u += 8.0 * w_flip[static_cast<size_t>(j)]; break;
            case 3:
              if (t >= t_s && t <= t_s + 0.1) u += 8.0 * w_flip[static_cast<size_t>(j)];
              break;
            case 4: mu = mean_component(j, t - kModel4Shift[j]); break;
            case 5: u += model5_outlier_bump(j, t); break;
            case 6:
              mu = (2.0 + r_exp[static_cast<size_t>(j)]) * mu - (j == 2 ? 6.0 : 0.0);
              break;
            case 7:
              if (j == 0) u += z1 * t * std::sin(pi * t);
              else if (j == 1) u += z2 * t * std::cos(pi * t);
              else u += z3 * t * std::sin(2.0 * pi * t) - 6.0;
              break;
            default: break;
          }
        } else {
          switch (c.model_id) {
            case 5: u += u_shift[static_cast<size_t>(j)]; break;
            case 7:
              if (j == 0) u += z4 * t * std::sin(pi * t);
              else if (j == 1) u += (8.0 - z4) * t * std::cos(pi * t);
              else u += (z4 - 2.0) * t * std::sin(2.0 * pi * t) - 6.0;
              break;
            default: break;
          }
        }

        double x = mu + u;
        signal.at(i, j, cg) = x;
        curves.at(i, j, cg) = x + eps[static_cast<size_t>(j) * nc + cg];
      }
    }
  }

  return {std::move(curves), std::move(signal), std::move(outlier), c};
}

std::string to_string(SparsifyKind k) {
  switch (k) {
    case SparsifyKind::point: return "point";
    case SparsifyKind::peak: return "peak";
    case SparsifyKind::partial: return "partial";
  }
  return "point";
}

SparsifyKind sparsify_kind_from_string(const std::string& s) {
  if (s == "point") return SparsifyKind::point;
  if (s == "peak") return SparsifyKind::peak;
  if (s == "partial") return SparsifyKind::partial;
  throw std::invalid_argument("unknown sparseness kind '" + s + "'");
}

GridMask sparsify(const CompleteCurves& d, const SparsifyConfig& c) {
  if (!(c.p_sparse >= 0.0 && c.p_sparse <= 1.0))
    throw std::invalid_argument("sparsify: p_sparse must be in [0, 1]");
  if (!(c.p_curve >= 0.0 && c.p_curve <= 1.0))
    throw std::invalid_argument("sparsify: p_curve must be in [0, 1]");
  const int n = d.n, p = d.p, nc = d.grid.size();
  GridMask mask(n, p, nc, true);
  if (c.p_curve == 0.0 || c.p_sparse == 0.0) return mask;

  rng::Engine gen = rng::make_engine(c.seed);
  const double t_lo = d.grid.t_min(), len = d.grid.length();
  const double eps = 1e-12 * std::max(1.0, len);

  double shared_start = 0.0;
  if (c.kind == SparsifyKind::partial)
    shared_start = rng::uniform(gen, 0.0, 1.0 - c.p_curve);

  auto remove_window = [&](int i, int j, double start_frac) {
    double w_lo = t_lo + start_frac * len - eps;
    double w_hi = t_lo + (start_frac + c.p_curve) * len + eps;
    for (int cg = 0; cg < nc; ++cg)
      if (d.grid[cg] >= w_lo && d.grid[cg] <= w_hi) mask.set(i, j, cg, false);
  };

  for (int i = 0; i < n; ++i) {
    bool sparse = rng::uniform01(gen) < c.p_sparse;
    if (!sparse) continue;
    for (int j = 0; j < p; ++j) {
      switch (c.kind) {
        case SparsifyKind::point:
          for (int cg = 0; cg < nc; ++cg)
            if (rng::uniform01(gen) < c.p_curve) mask.set(i, j, cg, false);
          break;
        case SparsifyKind::peak:
          remove_window(i, j, rng::uniform(gen, 0.0, 1.0 - c.p_curve));
          break;
        case SparsifyKind::partial:
          remove_window(i, j, shared_start);
          break;
      }
    }
  }
  return mask;
}

}  // namespace sfb::simgen
