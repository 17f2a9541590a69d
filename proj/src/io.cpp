#include "sfb/io.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

namespace sfb::io {

namespace {

namespace fs = std::filesystem;

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::runtime_error("cannot parse number '" + s + "'");
  return x;
}

std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

void write_matrix_csv(const std::string& path, const CompleteCurves& m,
                      const std::vector<std::string>& subject_ids,
                      const std::vector<std::string>& variable_names) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "subject_id";
  for (int j = 0; j < m.p; ++j)
    for (int c = 0; c < m.grid.size(); ++c)
      out << ',' << variable_names[static_cast<size_t>(j)] << '@' << format_double(m.grid[c]);
  out << '\n';
  for (int i = 0; i < m.n; ++i) {
    out << subject_ids[static_cast<size_t>(i)];
    for (int j = 0; j < m.p; ++j)
      for (int c = 0; c < m.grid.size(); ++c) out << ',' << format_double(m.at(i, j, c));
    out << '\n';
  }
}

CompleteCurves read_matrix_csv(const std::string& path, std::vector<std::string>& subject_ids,
                               std::vector<std::string>& variable_names) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty matrix CSV '" + path + "'");
  auto header = split(line);
  if (header.size() < 2) throw std::runtime_error("matrix CSV '" + path + "' has no data columns");

  // Columns are variable-major (var1@t1 .. var1@tN, var2@t1 ..) with the same
  // grid for every variable.
  variable_names.clear();
  std::vector<double> grid_pts;
  for (size_t k = 1; k < header.size(); ++k) {
    auto at = header[k].rfind('@');
    if (at == std::string::npos)
      throw std::runtime_error("matrix CSV column '" + header[k] + "' is not var@time");
    std::string var = header[k].substr(0, at);
    double t = parse_double(header[k].substr(at + 1));
    if (variable_names.empty() || variable_names.back() != var) {
      for (const auto& seen : variable_names)
        if (seen == var)
          throw std::runtime_error("matrix CSV '" + path + "' has non-contiguous variable blocks");
      variable_names.push_back(var);
    }
    if (variable_names.size() == 1) grid_pts.push_back(t);
  }
  const int p = static_cast<int>(variable_names.size());
  const int nc = static_cast<int>(grid_pts.size());
  if (static_cast<int>(header.size()) - 1 != p * nc)
    throw std::runtime_error("matrix CSV '" + path + "' has a ragged variable layout");
  subject_ids.clear();
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split(line);
    if (static_cast<int>(fields.size()) != 1 + p * nc)
      throw std::runtime_error("matrix CSV '" + path + "' row has wrong width");
    subject_ids.push_back(fields[0]);
    std::vector<double> row(static_cast<size_t>(p) * nc);
    for (int k = 0; k < p * nc; ++k) row[static_cast<size_t>(k)] = parse_double(fields[static_cast<size_t>(k) + 1]);
    rows.push_back(std::move(row));
  }
  CompleteCurves m(static_cast<int>(rows.size()), p, Grid(grid_pts));
  for (int i = 0; i < m.n; ++i)
    for (int k = 0; k < p * nc; ++k) m.v[static_cast<size_t>(i) * p * nc + k] = rows[static_cast<size_t>(i)][static_cast<size_t>(k)];
  return m;
}

}  // namespace

void write_fit_dir(const std::string& dir, const fpca::FitResult& fit,
                   const std::vector<std::string>& subject_ids,
                   const std::vector<std::string>& variable_names,
                   const std::string& model_summary) {
  fs::create_directories(dir);
  write_matrix_csv(dir + "/fitted.csv", fit.fitted, subject_ids, variable_names);
  write_matrix_csv(dir + "/lower.csv", fit.lower, subject_ids, variable_names);
  write_matrix_csv(dir + "/upper.csv", fit.upper, subject_ids, variable_names);
  nlohmann::json meta;
  meta["schema_version"] = 1;
  meta["alpha"] = fit.alpha;
  meta["method"] = fit.method;
  meta["B"] = fit.B;
  write_text_file(dir + "/fit_meta.json", meta.dump(2) + "\n");
  if (!model_summary.empty()) write_text_file(dir + "/model_summary.txt", model_summary);
}

FitDir read_fit_dir(const std::string& dir) {
  FitDir out{fpca::FitResult{CompleteCurves(1, 1, Grid::equidistant(2)),
                             CompleteCurves(1, 1, Grid::equidistant(2)),
                             CompleteCurves(1, 1, Grid::equidistant(2)), 0.05, "mfpca", 0},
             {},
             {}};
  std::vector<std::string> sid2, var2;
  out.fit.fitted = read_matrix_csv(dir + "/fitted.csv", out.subject_ids, out.variable_names);
  out.fit.lower = read_matrix_csv(dir + "/lower.csv", sid2, var2);
  out.fit.upper = read_matrix_csv(dir + "/upper.csv", sid2, var2);
  nlohmann::json meta = nlohmann::json::parse(read_text_file(dir + "/fit_meta.json"));
  out.fit.alpha = meta.at("alpha").get<double>();
  out.fit.method = meta.at("method").get<std::string>();
  out.fit.B = meta.at("B").get<int>();
  return out;
}

void write_mask_csv(const std::string& path, const GridMask& mask, const Grid& g,
                    const std::vector<std::string>& subject_ids,
                    const std::vector<std::string>& variable_names) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "subject_id,variable,time,present\n";
  for (int i = 0; i < mask.n(); ++i)
    for (int j = 0; j < mask.p(); ++j)
      for (int c = 0; c < mask.nc(); ++c)
        out << subject_ids[static_cast<size_t>(i)] << ',' << variable_names[static_cast<size_t>(j)]
            << ',' << format_double(g[c]) << ',' << (mask.present(i, j, c) ? 1 : 0) << '\n';
}

GridMask read_mask_csv(const std::string& path, const Grid& g,
                       const std::vector<std::string>& subject_ids,
                       const std::vector<std::string>& variable_names) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty mask CSV '" + path + "'");
  GridMask mask(static_cast<int>(subject_ids.size()), static_cast<int>(variable_names.size()),
                g.size(), false);
  auto subject_index = [&](const std::string& s) {
    for (size_t i = 0; i < subject_ids.size(); ++i)
      if (subject_ids[i] == s) return static_cast<int>(i);
    throw std::runtime_error("mask CSV references unknown subject '" + s + "'");
  };
  auto variable_index = [&](const std::string& s) {
    for (size_t j = 0; j < variable_names.size(); ++j)
      if (variable_names[j] == s) return static_cast<int>(j);
    throw std::runtime_error("mask CSV references unknown variable '" + s + "'");
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split(line);
    if (fields.size() != 4) throw std::runtime_error("mask CSV row has wrong width");
    int i = subject_index(fields[0]);
    int j = variable_index(fields[1]);
    int c = g.nearest(parse_double(fields[2]));
    mask.set(i, j, c, parse_double(fields[3]) != 0.0);
  }
  return mask;
}

void write_truth_csv(const std::string& path, const std::vector<char>& outlier,
                     const std::vector<std::string>& subject_ids) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "subject_id,outlier\n";
  for (size_t i = 0; i < outlier.size(); ++i)
    out << subject_ids[i] << ',' << (outlier[i] ? 1 : 0) << '\n';
}

void write_depth_csv(const std::string& path, const depth::DepthReport& report,
                     const std::vector<std::string>& subject_ids) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "subject_id,method,depth,rank\n";
  for (size_t i = 0; i < report.values.size(); ++i)
    out << subject_ids[i] << ',' << depth::to_string(report.method) << ','
        << format_double(report.values[i]) << ',' << report.ranks[i] << '\n';
}

void write_outlyingness_csv(const std::string& path, const depth::OutlyingnessReport& report,
                            const std::vector<std::string>& subject_ids) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "subject_id";
  for (int j = 0; j < report.p; ++j) out << ",mo_" << (j + 1);
  out << ",vo,flagged\n";
  const size_t n = report.vo.size();
  for (size_t i = 0; i < n; ++i) {
    out << subject_ids[i];
    for (int j = 0; j < report.p; ++j)
      out << ',' << format_double(report.mo[i * static_cast<size_t>(report.p) + static_cast<size_t>(j)]);
    out << ',' << format_double(report.vo[i]) << ',' << (report.flagged[i] ? 1 : 0) << '\n';
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string model_summary_text(const fpca::MfpcaModel& model) {
  std::ostringstream out;
  out << "subjects: " << model.n << "\nvariables: " << model.p << "\n";
  out << "univariate components M_j:";
  for (const auto& u : model.uni) out << ' ' << u.m;
  out << "\nnoise variances sigma2_j:";
  for (const auto& u : model.uni) out << ' ' << format_double(u.sigma2);
  out << "\nmultivariate components M: " << model.m << " (of M+ = " << model.m_plus << ")\n";
  out << "multivariate eigenvalues nu:";
  for (double v : model.nu) out << ' ' << format_double(v);
  out << '\n';
  return out.str();
}

}  // namespace sfb::io
