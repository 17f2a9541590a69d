#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sfb/depth.hpp"
#include "sfb/fdata.hpp"
#include "sfb/fpca.hpp"

namespace sfb::boxplot {

enum class CellTag : std::uint8_t { observed_stage1 = 1, observed_stage2 = 2, missing = 3 };

struct OutlierCurve {
  int subject = 0;
  int stage = 2;  // 1 = directional outlyingness, 2 = fence rule
  std::vector<double> values;
  std::vector<std::uint8_t> tags;  // CellTag per grid cell

  bool operator==(const OutlierCurve&) const = default;
};

struct VariablePanel {
  std::string name;
  std::vector<double> median;
  std::vector<std::uint8_t> median_missing;  // 1 where the median curve is unobserved
  std::vector<double> env_lo, env_hi;        // 50% central envelope
  std::vector<double> fence_lo, fence_hi;
  std::vector<double> sparseness;  // s(t_c) among central-region members
  std::vector<double> boundary;    // smoothed observed proportion 1 - s, in [0, 1]
  std::vector<OutlierCurve> outliers;

  bool operator==(const VariablePanel&) const = default;
};

struct BoxplotGeometry {
  Grid grid;
  std::vector<VariablePanel> vars;
  std::vector<int> members;  // central-region subjects, ascending
  int median_subject = 0;
  double factor = 1.5;
  double reference = 0.5;  // 50% sparseness reference level
  bool two_stage = false;

  bool operator==(const BoxplotGeometry&) const = default;
};

struct CentralRegion {
  std::vector<int> members;            // top ceil(n/2) by rank, ascending
  std::vector<double> env_lo, env_hi;  // p x nc, row-major
};

CentralRegion central_region(const CompleteCurves& curves, const depth::DepthReport& depths);

struct BoxplotOptions {
  double factor = 1.5;
  double boundary_bw_cells = 3.0;  // boundary smoother bandwidth, in grid spacings
  std::vector<std::string> variable_names;
};

// Fence-rule functional boxplot; with a mask the sparseness fields are filled,
// otherwise everything is tagged observed.
BoxplotGeometry functional_boxplot(const CompleteCurves& curves, const depth::DepthReport& depths,
                                   const BoxplotOptions& opts = {}, const GridMask* mask = nullptr);

// Two-stage variant: stage-1 flags (directional outlyingness) are removed
// before the region and fences are computed on the remainder.
BoxplotGeometry two_stage_boxplot(const CompleteCurves& curves, const depth::DepthReport& depths,
                                  const depth::OutlyingnessReport& outl,
                                  const BoxplotOptions& opts = {}, const GridMask* mask = nullptr);

// Sparseness proportion among members per grid cell for variable j, plus the
// kernel-smoothed observed proportion.
struct SparsenessProfile {
  std::vector<double> s;
  std::vector<double> boundary;
};
SparsenessProfile sparseness_profile(const GridMask& mask, const std::vector<int>& members, int j,
                                     const Grid& g, double bw_cells = 3.0);

// All outlier subjects (both stages) recorded in the geometry.
std::vector<int> outlier_subjects(const BoxplotGeometry& g);
std::vector<char> outlier_flags(const BoxplotGeometry& g, int n);

struct IntensityOptions {
  enum Norm { per_variable, global } norm = per_variable;
  bool contours = false;
  int nt = 100;
  int nv = 100;
  double bw_t = 0.0;  // 0 = Silverman's rule on the event cloud
  double bw_v = 0.0;
};

std::string to_string(IntensityOptions::Norm n);
IntensityOptions::Norm norm_from_string(const std::string& s);

struct ContourLine {
  double level = 0.0;
  std::vector<std::pair<double, double>> points;

  bool operator==(const ContourLine&) const = default;
};

struct IntensityPanel {
  std::string name;
  double t_lo = 0, t_hi = 0, v_lo = 0, v_hi = 0;  // bounding rectangle
  int nt = 0, nv = 0;
  std::vector<double> values;  // nt x nv, normalized, zero outside the region
  std::vector<ContourLine> contours;
  long events = 0;
  double raw_mass = 0.0;  // unnormalized KDE mass over the clipped region

  bool operator==(const IntensityPanel&) const = default;
};

struct IntensityField {
  IntensityOptions::Norm norm = IntensityOptions::per_variable;
  std::vector<IntensityPanel> vars;

  bool operator==(const IntensityField&) const = default;
};

// Kernel intensity of the sparseness point process (t_c, fitted value) of the
// central-region members' missing cells, clipped to the central region.
IntensityField intensity_field(const GridMask& mask, const fpca::FitResult& fit,
                               const BoxplotGeometry& geometry,
                               const IntensityOptions& opts = {});

}  // namespace sfb::boxplot
