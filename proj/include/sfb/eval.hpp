#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sfb/depth.hpp"
#include "sfb/simgen.hpp"

namespace sfb::eval {

// Spearman rank correlation of two rank permutations of 1..n.
double spearman(const std::vector<int>& rank_a, const std::vector<int>& rank_b);

struct DetectionRates {
  double p_c = 0.0;  // percent of true outliers detected
  double p_f = 0.0;  // percent of non-outliers flagged
};
DetectionRates detection_rates(const std::vector<char>& flags, const std::vector<char>& truth);

struct StudyConfig {
  std::vector<int> models{1};
  std::vector<simgen::SparsifyKind> kinds{simgen::SparsifyKind::point};
  std::vector<double> p_curves{0.2};
  double p_sparse = 1.0;
  int reps = 100;
  int n = 100;
  std::uint64_t seed = 1;
  int B = 100;
  double alpha = 0.05;
  int grid_points = 50;
  int ndirs = 500;
  double contamination = 0.1;
  double outl_cutoff_q = 0.993;
  std::vector<depth::Method> methods{depth::Method::mfhd_mfpca, depth::Method::mfhd_bmfpca,
                                     depth::Method::rmfhd_aw, depth::Method::rmfhd_naw,
                                     depth::Method::rmfhd_dm};
};

struct DepthStudyCell {
  int model = 1;
  simgen::SparsifyKind kind = simgen::SparsifyKind::point;
  double p_curve = 0.0;
  depth::Method method = depth::Method::mfhd_bmfpca;
  double median = 0.0, q1 = 0.0, q3 = 0.0;
  int reps_used = 0;
  int excluded = 0;
};

struct DetectionCell {
  int model = 2;
  simgen::SparsifyKind kind = simgen::SparsifyKind::point;
  double p_curve = 0.0;
  std::string variant;  // "sparse" or "two_stage"
  double mean_pc = 0.0, sd_pc = 0.0, mean_pf = 0.0, sd_pf = 0.0;
  int reps_used = 0;
  int excluded = 0;
};

struct CoverageCell {
  int model = 1;
  simgen::SparsifyKind kind = simgen::SparsifyKind::point;
  double p_curve = 0.0;
  double alpha = 0.05;
  int B = 100;
  double coverage = 0.0;  // pooled over missing cells and replications
  double sd_across_reps = 0.0;
  long cells = 0;
  int reps_used = 0;
  int excluded = 0;
};

struct EvalReport {
  std::vector<DepthStudyCell> depth_cells;
  std::vector<DetectionCell> detection_cells;
  std::vector<CoverageCell> coverage_cells;

  std::string to_csv() const;
  std::string to_json() const;
};

// Per replication: generate, sparsify, fit MFPCA and BMFPCA, rank with every
// candidate depth, and compare against the reference MFHD ranks of the
// complete observed curves. Replications run in parallel with derived RNG
// streams; aggregation is an ordered fold.
EvalReport run_depth_study(const StudyConfig& c);

// Detection rates of the sparse functional boxplot and its two-stage form,
// both ranked by MFHD on the BMFPCA fit.
EvalReport run_detection_study(const StudyConfig& c);

// Empirical pointwise coverage of the corrected confidence intervals at the
// missing cells, against the noise-free signal curves.
EvalReport ci_coverage_study(const StudyConfig& c, double alpha);

// Paired per-replication detection rates (used by the acceptance suite).
struct DetectionReplicate {
  DetectionRates sparse;
  DetectionRates two_stage;
  bool ok = false;
};
std::vector<DetectionReplicate> detection_replicates(const StudyConfig& c, int model,
                                                     simgen::SparsifyKind kind, double p_curve);

}  // namespace sfb::eval
