#include "sfb/fdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace sfb {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& field, long line_no, const char* what) {
  std::string t = trim(field);
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": cannot parse " + what +
                             " value '" + t + "'");
  }
  if (!std::isfinite(x)) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": non-finite " + what +
                             " value '" + t + "'");
  }
  return x;
}

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

}  // namespace

SparseSampleSet::SparseSampleSet(std::vector<std::string> subject_ids,
                                 std::vector<std::string> variable_names,
                                 std::vector<std::vector<Observation>> obs)
    : subject_ids_(std::move(subject_ids)),
      variable_names_(std::move(variable_names)),
      obs_(std::move(obs)) {
  const int n_ = static_cast<int>(subject_ids_.size());
  const int p_ = static_cast<int>(variable_names_.size());
  if (n_ < 1) throw std::invalid_argument("SparseSampleSet: need at least one subject");
  if (p_ < 1) throw std::invalid_argument("SparseSampleSet: need at least one variable");
  if (obs_.size() != static_cast<size_t>(n_) * p_)
    throw std::invalid_argument("SparseSampleSet: observation table has wrong shape");

  domains_.assign(static_cast<size_t>(p_),
                  {std::numeric_limits<double>::infinity(),
                   -std::numeric_limits<double>::infinity()});
  for (int i = 0; i < n_; ++i) {
    long subject_total = 0;
    for (int j = 0; j < p_; ++j) {
      const auto& lst = obs_[static_cast<size_t>(i) * p_ + j];
      subject_total += static_cast<long>(lst.size());
      for (size_t k = 0; k < lst.size(); ++k) {
        if (!std::isfinite(lst[k].time) || !std::isfinite(lst[k].value))
          throw std::invalid_argument("SparseSampleSet: non-finite observation for subject '" +
                                      subject_ids_[static_cast<size_t>(i)] + "'");
        if (k > 0 && !(lst[k].time > lst[k - 1].time))
          throw std::invalid_argument(
              "SparseSampleSet: observations must be strictly increasing in time (subject '" +
              subject_ids_[static_cast<size_t>(i)] + "', variable '" +
              variable_names_[static_cast<size_t>(j)] + "')");
        auto& dom = domains_[static_cast<size_t>(j)];
        dom.first = std::min(dom.first, lst[k].time);
        dom.second = std::max(dom.second, lst[k].time);
      }
    }
    if (subject_total == 0)
      throw std::invalid_argument("SparseSampleSet: subject '" +
                                  subject_ids_[static_cast<size_t>(i)] +
                                  "' has no observations in any variable");
  }
}

std::pair<double, double> SparseSampleSet::domain_union() const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int j = 0; j < p(); ++j) {
    lo = std::min(lo, domains_[static_cast<size_t>(j)].first);
    hi = std::max(hi, domains_[static_cast<size_t>(j)].second);
  }
  return {lo, hi};
}

long SparseSampleSet::total_observations() const {
  long total = 0;
  for (const auto& lst : obs_) total += static_cast<long>(lst.size());
  return total;
}

IngestReport ingest_long_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV input: missing header");
  long line_no = 1;
  auto header = split_csv_line(line);
  int ci_subject = -1, ci_variable = -1, ci_time = -1, ci_value = -1;
  for (size_t k = 0; k < header.size(); ++k) {
    std::string h = trim(header[k]);
    if (h == schema.subject) ci_subject = static_cast<int>(k);
    else if (h == schema.variable) ci_variable = static_cast<int>(k);
    else if (h == schema.time) ci_time = static_cast<int>(k);
    else if (h == schema.value) ci_value = static_cast<int>(k);
  }
  if (ci_subject < 0 || ci_variable < 0 || ci_time < 0 || ci_value < 0)
    throw std::runtime_error("CSV header does not contain the required columns '" +
                             schema.subject + "', '" + schema.variable + "', '" + schema.time +
                             "', '" + schema.value + "'");

  std::vector<std::string> subject_ids, variable_names;
  std::unordered_map<std::string, int> subject_index, variable_index;
  std::map<std::pair<int, int>, std::map<double, double>> cells;  // (si, vi) -> time -> value
  long rows = 0;
  const size_t needed = static_cast<size_t>(
      std::max(std::max(ci_subject, ci_variable), std::max(ci_time, ci_value))) + 1;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() < needed)
      throw std::runtime_error("line " + std::to_string(line_no) + ": expected at least " +
                               std::to_string(needed) + " columns, got " +
                               std::to_string(fields.size()));
    std::string sid = trim(fields[static_cast<size_t>(ci_subject)]);
    std::string var = trim(fields[static_cast<size_t>(ci_variable)]);
    if (sid.empty())
      throw std::runtime_error("line " + std::to_string(line_no) + ": empty subject id");
    if (var.empty())
      throw std::runtime_error("line " + std::to_string(line_no) + ": empty variable name");
    double t = parse_number(fields[static_cast<size_t>(ci_time)], line_no, "time");
    double y = parse_number(fields[static_cast<size_t>(ci_value)], line_no, "value");

    int si;
    if (auto it = subject_index.find(sid); it != subject_index.end()) {
      si = it->second;
    } else {
      si = static_cast<int>(subject_ids.size());
      subject_index.emplace(sid, si);
      subject_ids.push_back(sid);
    }
    int vi;
    if (auto it = variable_index.find(var); it != variable_index.end()) {
      vi = it->second;
    } else {
      vi = static_cast<int>(variable_names.size());
      variable_index.emplace(var, vi);
      variable_names.push_back(var);
    }
    auto [it2, inserted] = cells[{si, vi}].emplace(t, y);
    (void)it2;
    if (!inserted)
      throw std::runtime_error("line " + std::to_string(line_no) + ": duplicate observation (" +
                               sid + ", " + var + ", " + format_double(t) + ")");
    ++rows;
  }
  if (subject_ids.empty()) throw std::runtime_error("CSV contains no data rows");

  const int n = static_cast<int>(subject_ids.size());
  const int p = static_cast<int>(variable_names.size());
  std::vector<std::vector<Observation>> obs(static_cast<size_t>(n) * p);
  for (const auto& [key, m] : cells) {
    auto& lst = obs[static_cast<size_t>(key.first) * p + key.second];
    lst.reserve(m.size());
    for (const auto& [t, y] : m) lst.push_back({t, y});
  }
  return {SparseSampleSet(std::move(subject_ids), std::move(variable_names), std::move(obs)),
          rows};
}

IngestReport ingest_long_csv_file(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return ingest_long_csv(in, schema);
}

void write_long_csv(std::ostream& out, const SparseSampleSet& s, const CsvSchema& schema) {
  out << schema.subject << ',' << schema.variable << ',' << schema.time << ',' << schema.value
      << '\n';
  for (int i = 0; i < s.n(); ++i) {
    for (int j = 0; j < s.p(); ++j) {
      for (const auto& ob : s.observations(i, j)) {
        out << s.subject_id(i) << ',' << s.variable_name(j) << ',' << format_double(ob.time)
            << ',' << format_double(ob.value) << '\n';
      }
    }
  }
}

void write_long_csv_file(const std::string& path, const SparseSampleSet& s,
                         const CsvSchema& schema) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_long_csv(out, s, schema);
}

bool GridMask::all_true() const {
  for (std::uint8_t b : bits_)
    if (!b) return false;
  return true;
}

long GridMask::missing_count() const {
  long miss = 0;
  for (std::uint8_t b : bits_)
    if (!b) ++miss;
  return miss;
}

SnapReport snap_to_grid(const SparseSampleSet& s, const Grid& g,
                        std::optional<double> tolerance) {
  const double tol = tolerance.value_or(0.5 * g.min_spacing());
  GridMask mask(s.n(), s.p(), g.size(), false);
  long collapsed = 0;
  for (int i = 0; i < s.n(); ++i) {
    for (int j = 0; j < s.p(); ++j) {
      for (const auto& ob : s.observations(i, j)) {
        int c = g.nearest(ob.time);
        if (std::abs(ob.time - g[c]) > tol) {
          std::ostringstream msg;
          msg << "observation (" << s.subject_id(i) << ", " << s.variable_name(j) << ", "
              << ob.time << ") is farther than " << tol << " from every grid point";
          throw std::runtime_error(msg.str());
        }
        if (mask.present(i, j, c)) ++collapsed;
        mask.set(i, j, c, true);
      }
    }
  }
  return {std::move(mask), collapsed};
}

SparsenessSummary sparseness_summary(const GridMask& m) {
  SparsenessSummary out;
  out.p_sparse_hat.assign(static_cast<size_t>(m.p()), 0.0);
  out.p_curve_hat.assign(static_cast<size_t>(m.p()), 0.0);
  for (int j = 0; j < m.p(); ++j) {
    int sparse_subjects = 0;
    double missing_fraction_sum = 0.0;
    for (int i = 0; i < m.n(); ++i) {
      int miss = 0;
      for (int c = 0; c < m.nc(); ++c)
        if (!m.present(i, j, c)) ++miss;
      if (miss > 0) {
        ++sparse_subjects;
        missing_fraction_sum += static_cast<double>(miss) / m.nc();
      }
    }
    out.p_sparse_hat[static_cast<size_t>(j)] = static_cast<double>(sparse_subjects) / m.n();
    out.p_curve_hat[static_cast<size_t>(j)] =
        sparse_subjects > 0 ? missing_fraction_sum / sparse_subjects : 0.0;
  }
  return out;
}

SparseSampleSet to_sparse(const CompleteCurves& y, const GridMask& m,
                          const std::vector<std::string>* subject_ids,
                          const std::vector<std::string>* variable_names) {
  if (m.n() != y.n || m.p() != y.p || m.nc() != y.grid.size())
    throw std::invalid_argument("to_sparse: mask dimensions do not match curves");
  std::vector<std::string> sids, vnames;
  if (subject_ids) {
    sids = *subject_ids;
  } else {
    for (int i = 0; i < y.n; ++i) sids.push_back("s" + std::to_string(i + 1));
  }
  if (variable_names) {
    vnames = *variable_names;
  } else {
    for (int j = 0; j < y.p; ++j) vnames.push_back("var" + std::to_string(j + 1));
  }
  std::vector<std::vector<Observation>> obs(static_cast<size_t>(y.n) * y.p);
  for (int i = 0; i < y.n; ++i)
    for (int j = 0; j < y.p; ++j) {
      auto& lst = obs[static_cast<size_t>(i) * y.p + j];
      for (int c = 0; c < y.grid.size(); ++c)
        if (m.present(i, j, c)) lst.push_back({y.grid[c], y.at(i, j, c)});
    }
  return SparseSampleSet(std::move(sids), std::move(vnames), std::move(obs));
}

}  // namespace sfb
