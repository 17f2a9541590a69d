#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sfb/grid.hpp"

namespace sfb {

struct Observation {
  double time = 0.0;
  double value = 0.0;
  bool operator==(const Observation&) const = default;
};

// n subjects x p variables of irregular (time, value) records. Immutable after
// construction; observation lists are sorted by time with no duplicate times
// within a (subject, variable) pair.
class SparseSampleSet {
public:
  SparseSampleSet(std::vector<std::string> subject_ids,
                  std::vector<std::string> variable_names,
                  std::vector<std::vector<Observation>> obs);  // obs is n*p, row-major

  int n() const { return static_cast<int>(subject_ids_.size()); }
  int p() const { return static_cast<int>(variable_names_.size()); }
  const std::vector<Observation>& observations(int i, int j) const {
    return obs_[static_cast<size_t>(i) * p() + j];
  }
  const std::string& subject_id(int i) const { return subject_ids_[static_cast<size_t>(i)]; }
  const std::string& variable_name(int j) const { return variable_names_[static_cast<size_t>(j)]; }
  const std::vector<std::string>& subject_ids() const { return subject_ids_; }
  const std::vector<std::string>& variable_names() const { return variable_names_; }

  // Observed time range of variable j, pooled over subjects.
  std::pair<double, double> domain(int j) const { return domains_[static_cast<size_t>(j)]; }
  std::pair<double, double> domain_union() const;
  long total_observations() const;
  int count(int i, int j) const { return static_cast<int>(observations(i, j).size()); }

  bool operator==(const SparseSampleSet&) const = default;

private:
  std::vector<std::string> subject_ids_;
  std::vector<std::string> variable_names_;
  std::vector<std::vector<Observation>> obs_;
  std::vector<std::pair<double, double>> domains_;
};

struct CsvSchema {
  std::string subject = "subject_id";
  std::string variable = "variable";
  std::string time = "time";
  std::string value = "value";
};

struct IngestReport {
  SparseSampleSet set;
  long rows = 0;
};

// Long-format CSV (header required, '.' decimal separator). Subjects and
// variables are indexed in first-appearance order.
IngestReport ingest_long_csv(std::istream& in, const CsvSchema& schema = {});
IngestReport ingest_long_csv_file(const std::string& path, const CsvSchema& schema = {});
void write_long_csv(std::ostream& out, const SparseSampleSet& s, const CsvSchema& schema = {});
void write_long_csv_file(const std::string& path, const SparseSampleSet& s,
                         const CsvSchema& schema = {});

// Observation indicator per (subject, variable, grid cell).
class GridMask {
public:
  GridMask(int n, int p, int nc, bool value = false)
      : n_(n), p_(p), nc_(nc), bits_(static_cast<size_t>(n) * p * nc, value ? 1 : 0) {}

  int n() const { return n_; }
  int p() const { return p_; }
  int nc() const { return nc_; }
  bool present(int i, int j, int c) const { return bits_[index(i, j, c)] != 0; }
  void set(int i, int j, int c, bool v) { bits_[index(i, j, c)] = v ? 1 : 0; }
  bool all_true() const;
  long missing_count() const;

  bool operator==(const GridMask&) const = default;

private:
  size_t index(int i, int j, int c) const {
    return (static_cast<size_t>(i) * p_ + j) * nc_ + c;
  }
  int n_, p_, nc_;
  std::vector<std::uint8_t> bits_;
};

struct SnapReport {
  GridMask mask;
  long collapsed = 0;  // observations that mapped onto an already-marked cell
};

// Nearest-grid-point assignment. Default tolerance is half the minimum grid
// spacing; observations farther than the tolerance from every grid point are
// an error.
SnapReport snap_to_grid(const SparseSampleSet& s, const Grid& g,
                        std::optional<double> tolerance = std::nullopt);

struct SparsenessSummary {
  std::vector<double> p_sparse_hat;  // fraction of subjects with >=1 missing cell
  std::vector<double> p_curve_hat;   // mean missing fraction among those subjects
};

SparsenessSummary sparseness_summary(const GridMask& m);

// Curves on a common grid, values[i][j][c].
struct CompleteCurves {
  int n = 0;
  int p = 0;
  Grid grid;
  std::vector<double> v;

  CompleteCurves() : CompleteCurves(0, 0, Grid()) {}
  CompleteCurves(int n_, int p_, Grid g)
      : n(n_), p(p_), grid(std::move(g)), v(static_cast<size_t>(n_) * p_ * grid.size(), 0.0) {}

  double& at(int i, int j, int c) { return v[idx(i, j, c)]; }
  double at(int i, int j, int c) const { return v[idx(i, j, c)]; }
  const double* row(int i, int j) const { return v.data() + idx(i, j, 0); }
  double* row(int i, int j) { return v.data() + idx(i, j, 0); }

  bool operator==(const CompleteCurves&) const = default;

private:
  size_t idx(int i, int j, int c) const {
    return (static_cast<size_t>(i) * p + j) * grid.size() + c;
  }
};

// Sparse view of complete curves: one observation per unmasked grid cell.
SparseSampleSet to_sparse(const CompleteCurves& y, const GridMask& m,
                          const std::vector<std::string>* subject_ids = nullptr,
                          const std::vector<std::string>* variable_names = nullptr);

}  // namespace sfb
