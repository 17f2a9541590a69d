#pragma once

#include <string>
#include <vector>

#include "sfb/boxplot.hpp"

namespace sfb::render {

inline constexpr int kSchemaVersion = 1;

struct StyleConfig {
  std::string central_fill = "#FF00FF";     // observed proportion of the central region
  std::string sparse_fill = "#BEBEBE";      // sparseness proportion
  std::string reference_color = "#00FFFF";  // dotted 50% reference line
  std::string stage1_color = "#00A000";     // dashed, flagged by directional outlyingness
  std::string stage2_color = "#FF0000";     // dashed, flagged by the fence rule
  std::string missing_color = "#808080";    // dashed, fitted missing segments
  std::string median_color = "#000000";
  std::string fence_color = "#000080";
  double stroke_width = 1.2;
  int panel_width = 360;
  int panel_height = 300;
  // Intensity colormap stops from value 0 to 1 (least to most sparse).
  std::vector<std::string> colormap = {"#FF00FF", "#FFA500", "#FFFF00", "#FFFFFF"};
  bool show_contours = true;
};

// Deterministic documents: same input, byte-identical output. Numbers are
// printed with 6 significant digits in SVG; JSON keeps full precision so that
// parse(emit(g)) == g exactly.
std::string emit_svg(const boxplot::BoxplotGeometry& g, const StyleConfig& style = {});
std::string emit_svg(const boxplot::IntensityField& f, const StyleConfig& style = {});

std::string emit_json(const boxplot::BoxplotGeometry& g);
std::string emit_json(const boxplot::IntensityField& f);

boxplot::BoxplotGeometry parse_geometry(const std::string& json_text);
boxplot::IntensityField parse_intensity(const std::string& json_text);

// "boxplot_geometry" or "intensity_field".
std::string json_kind(const std::string& json_text);

}  // namespace sfb::render
