#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "sfb/boxplot.hpp"
#include "sfb/depth.hpp"
#include "sfb/fdata.hpp"
#include "sfb/fpca.hpp"

namespace sfb::io {

// File-system failures carry their own type so the CLI can map them to a
// dedicated exit code.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fit results as three CSV matrices (fitted/lower/upper), one row per subject
// and one column per (variable, grid point), plus a JSON meta file and a plain
// text model summary.
void write_fit_dir(const std::string& dir, const fpca::FitResult& fit,
                   const std::vector<std::string>& subject_ids,
                   const std::vector<std::string>& variable_names,
                   const std::string& model_summary = "");
struct FitDir {
  fpca::FitResult fit;
  std::vector<std::string> subject_ids;
  std::vector<std::string> variable_names;
};
FitDir read_fit_dir(const std::string& dir);

void write_mask_csv(const std::string& path, const GridMask& mask, const Grid& g,
                    const std::vector<std::string>& subject_ids,
                    const std::vector<std::string>& variable_names);
GridMask read_mask_csv(const std::string& path, const Grid& g,
                       const std::vector<std::string>& subject_ids,
                       const std::vector<std::string>& variable_names);

void write_truth_csv(const std::string& path, const std::vector<char>& outlier,
                     const std::vector<std::string>& subject_ids);

void write_depth_csv(const std::string& path, const depth::DepthReport& report,
                     const std::vector<std::string>& subject_ids);

void write_outlyingness_csv(const std::string& path, const depth::OutlyingnessReport& report,
                            const std::vector<std::string>& subject_ids);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

std::string model_summary_text(const fpca::MfpcaModel& model);

}  // namespace sfb::io
