#pragma once

#include <string>
#include <vector>

#include "sfb/fdata.hpp"
#include "sfb/fpca.hpp"
#include "sfb/mathutil.hpp"

namespace sfb::depth {

enum class Method { mbd, mfhd_mfpca, mfhd_bmfpca, rmfhd_aw, rmfhd_naw, rmfhd_dm };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct DepthReport {
  Method method = Method::mfhd_mfpca;
  std::vector<double> values;  // in [0, 1]
  std::vector<int> ranks;      // 1 = deepest; ties broken by subject index
};

std::vector<int> ranks_from_values(const std::vector<double>& values);

struct WeightScheme {
  enum Kind { constant, volume } kind = constant;
  double beta = -1.0;  // volume-weight depth-region level; < 0 uses ceil(n/4)/n
};

// Finite-sample halfspace depth of `query` w.r.t. n points in R^p:
// (1/n) min over unit directions of #{i : u'x_i >= u'query}. Exact for p = 1
// and p = 2; for p >= 3 the minimum runs over `ndirs` quasi-random directions
// and their negations (an overestimate of the exact depth, nonincreasing in
// ndirs).
double halfspace_depth(const double* pts, int n, int p, const double* query, int ndirs = 500);

// Depths of mq query points against one point cloud; shares per-direction
// work across queries.
void pointwise_depths(const double* pts, int n, const double* queries, int mq, int p,
                      const DirectionSet* dirs, double* out);

// Multivariate functional halfspace depth: time-weighted sum of pointwise
// halfspace depths over the grid.
DepthReport mfhd(const CompleteCurves& curves, const WeightScheme& w = {}, int ndirs = 500,
                 Method tag = Method::mfhd_mfpca);

// Modified band depth (J = 2, closed bands, pairs may contain the curve).
// Univariate input only.
DepthReport mbd(const CompleteCurves& curves);

enum class RevisedVariant { aw, naw, dm };

// Revised depths for sparse data: aw and naw score the fit and both confidence
// bounds against the tripled set (weights 1/3,1/3,1/3 and 1/2,1/4,1/4); dm
// stacks (upper, lower) into a 2p-variate sample.
DepthReport revised_depth(const CompleteCurves& fit, const CompleteCurves& ub,
                          const CompleteCurves& lb, RevisedVariant variant,
                          const WeightScheme& w = {}, int ndirs = 500);
DepthReport revised_depth(const fpca::FitResult& fit, RevisedVariant variant,
                          const WeightScheme& w = {}, int ndirs = 500);

struct OutlyingnessReport {
  std::vector<double> mo;     // n x p mean directional outlyingness
  std::vector<double> vo;     // n, variation of outlyingness
  std::vector<double> rd2;    // n, squared robust Mahalanobis distance of (MO, VO)
  std::vector<char> flagged;  // rd2 > cutoff
  double cutoff = 0.0;
  int p = 0;
};

// Pointwise directional outlyingness (projection-depth based; exact
// coordinatewise for p = 1) summarized by MO and VO, flagged through a
// reweighted-MCD robust Mahalanobis distance against the chi-square
// cutoff_q quantile with p+1 degrees of freedom.
OutlyingnessReport directional_outlyingness(const CompleteCurves& curves, double cutoff_q = 0.993,
                                            int ndirs = 500);

// Plain serial implementations kept as test oracles and benchmark baselines.
namespace reference {
double halfspace_depth(const double* pts, int n, int p, const double* query, int ndirs = 500);
DepthReport mfhd(const CompleteCurves& curves, const WeightScheme& w = {}, int ndirs = 500,
                 Method tag = Method::mfhd_mfpca);
DepthReport mbd(const CompleteCurves& curves);
}  // namespace reference

}  // namespace sfb::depth
