#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sfb/fdata.hpp"
#include "sfb/grid.hpp"

namespace sfb::fpca {

struct Options {
  double bw_mean_frac = 0.0;   // fraction of the domain length; 0 = auto (one grid spacing)
  double bw_cov_frac = 0.0;    // fraction of the domain length; 0 = auto (one grid spacing)
  double pve_uni = 0.99;       // proportion-of-variance threshold, univariate
  double pve_mult = 0.99;      // proportion-of-variance threshold, multivariate
  int max_comp = 0;            // 0 = no cap
  double sigma2_floor = 1e-8;
  int bandwidth_escalations = 5;
};

struct UfpcaModel {
  Grid grid;
  std::vector<double> mean;     // nc
  int m = 0;                    // retained components
  std::vector<double> phi;      // m x nc, orthonormal under grid quadrature
  std::vector<double> lambda;   // m, nonincreasing, >= 0
  double sigma2 = 0.0;
  std::vector<double> scores;   // n x m (subjects the model was fitted on)
  double pve_reached = 1.0;

  const double* phi_row(int l) const { return phi.data() + static_cast<size_t>(l) * grid.size(); }
};

struct MfpcaModel {
  Grid grid;
  int n = 0;
  int p = 0;
  std::vector<UfpcaModel> uni;   // per variable (their `scores` are the Xi blocks)
  int m_plus = 0;                // sum of univariate component counts
  int m = 0;                     // retained multivariate components
  std::vector<double> xi;        // n x m_plus stacked univariate scores
  std::vector<double> cvec;      // m_plus x m, columns are eigenvectors of Z
  std::vector<double> nu;        // m multivariate eigenvalues
  std::vector<double> psi;       // m x p x nc multivariate eigenfunctions
  std::vector<double> rho;       // n x m multivariate scores (= Xi * cvec)

  double psi_at(int comp, int j, int c) const {
    return psi[(static_cast<size_t>(comp) * p + j) * grid.size() + c];
  }
};

// PACE-style univariate fit for variable j: binned local-linear mean and
// covariance (diagonal excluded), noise variance from the diagonal gap,
// eigenanalysis with quadrature weights, and BLUP scores.
UfpcaModel fit_ufpca(const SparseSampleSet& s, int j, const Grid& g, const Options& opts = {});

MfpcaModel fit_mfpca(const SparseSampleSet& s, const Grid& g, const Options& opts = {});

// Restricted variants fitted on a subset of subjects (with repeats allowed);
// used by the bootstrap.
UfpcaModel fit_ufpca_subset(const SparseSampleSet& s, const std::vector<int>& subjects, int j,
                            const Grid& g, const Options& opts);
MfpcaModel fit_mfpca_subset(const SparseSampleSet& s, const std::vector<int>& subjects,
                            const Grid& g, const Options& opts);

struct FitResult {
  CompleteCurves fitted;
  CompleteCurves lower;
  CompleteCurves upper;
  double alpha = 0.05;
  std::string method = "mfpca";  // "mfpca" or "bmfpca"
  int B = 0;

  bool operator==(const FitResult&) const = default;
};

// Conditional fit of every subject of `s` under `model`, plus the pointwise
// conditional variance from the score-error covariance. Arrays are laid out
// like CompleteCurves::v.
void conditional_fit(const MfpcaModel& model, const SparseSampleSet& s, std::vector<double>& fit,
                     std::vector<double>& var);

// Karhunen-Loeve reconstruction with pointwise asymptotic confidence bounds.
FitResult mfpca_fit_curves(const MfpcaModel& model, const SparseSampleSet& s,
                           double alpha = 0.05);

struct BootstrapOptions {
  int B = 100;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  Options fit;
  // Test hook: forced resample subject indices, one vector of size n per
  // replicate. Overrides B and the seeded redraw-on-failure policy.
  std::optional<std::vector<std::vector<int>>> resamples;
};

// Bootstrap-corrected fit: subjects are resampled with replacement B times,
// the model is refitted per resample, and the original subjects' conditional
// fits under each refit are averaged. The variance adds the within-resample
// conditional variance and the between-resample variance of the conditional
// means. Deterministic under the seed; failed resamples are redrawn (at most
// 10 attempts each).
FitResult bmfpca_fit(const SparseSampleSet& s, const Grid& g, const BootstrapOptions& opts = {});

}  // namespace sfb::fpca
