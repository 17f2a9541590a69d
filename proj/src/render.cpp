#include "sfb/render.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

namespace sfb::render {

namespace {

using nlohmann::json;

std::string fmt6(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

void check_color(const std::string& c) {
  bool ok = c.size() == 7 && c[0] == '#';
  for (size_t k = 1; ok && k < 7; ++k) ok = std::isxdigit(static_cast<unsigned char>(c[k])) != 0;
  if (!ok) throw std::invalid_argument("StyleConfig: color '" + c + "' is not 6-hex RGB");
}

void check_style(const StyleConfig& s) {
  for (const std::string* c : {&s.central_fill, &s.sparse_fill, &s.reference_color,
                               &s.stage1_color, &s.stage2_color, &s.missing_color,
                               &s.median_color, &s.fence_color})
    check_color(*c);
  for (const auto& c : s.colormap) check_color(c);
  if (s.panel_width <= 0 || s.panel_height <= 0)
    throw std::invalid_argument("StyleConfig: panel size must be positive");
  if (s.colormap.size() < 2) throw std::invalid_argument("StyleConfig: colormap needs >= 2 stops");
}

struct Frame {
  double x0, y0, w, h;       // pixel box of the data area
  double t_lo, t_hi;         // data ranges
  double v_lo, v_hi;
  double px(double t) const { return x0 + w * (t - t_lo) / (t_hi - t_lo); }
  double py(double v) const { return y0 + h * (1.0 - (v - v_lo) / (v_hi - v_lo)); }
};

constexpr double kMarginL = 54, kMarginR = 14, kMarginT = 28, kMarginB = 46;

void polyline(std::ostringstream& out, const Frame& f, const Grid& g,
              const std::vector<double>& v, const std::string& color, double width,
              const char* dash = nullptr, const char* extra = nullptr) {
  out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << fmt6(width)
      << "\"";
  if (dash) out << " stroke-dasharray=\"" << dash << "\"";
  if (extra) out << ' ' << extra;
  out << " points=\"";
  for (int c = 0; c < g.size(); ++c) {
    if (c) out << ' ';
    out << fmt6(f.px(g[c])) << ',' << fmt6(f.py(v[static_cast<size_t>(c)]));
  }
  out << "\"/>\n";
}

void axes(std::ostringstream& out, const Frame& f, const std::string& title) {
  out << "<rect x=\"" << fmt6(f.x0) << "\" y=\"" << fmt6(f.y0) << "\" width=\"" << fmt6(f.w)
      << "\" height=\"" << fmt6(f.h)
      << "\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
  out << "<text x=\"" << fmt6(f.x0 + f.w / 2) << "\" y=\"" << fmt6(f.y0 - 9)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << title
      << "</text>\n";
  out << "<text x=\"" << fmt6(f.x0) << "\" y=\"" << fmt6(f.y0 + f.h + 16)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << fmt6(f.t_lo)
      << "</text>\n";
  out << "<text x=\"" << fmt6(f.x0 + f.w) << "\" y=\"" << fmt6(f.y0 + f.h + 16)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << fmt6(f.t_hi)
      << "</text>\n";
  out << "<text x=\"" << fmt6(f.x0 - 4) << "\" y=\"" << fmt6(f.y0 + f.h)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << fmt6(f.v_lo)
      << "</text>\n";
  out << "<text x=\"" << fmt6(f.x0 - 4) << "\" y=\"" << fmt6(f.y0 + 9)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << fmt6(f.v_hi)
      << "</text>\n";
}

// Dashed outlier curve, split into runs of equal cell tags.
void outlier_paths(std::ostringstream& out, const Frame& f, const Grid& g,
                   const boxplot::OutlierCurve& oc, const StyleConfig& style) {
  const int nc = g.size();
  int start = 0;
  while (start < nc) {
    int end = start;
    while (end + 1 < nc && oc.tags[static_cast<size_t>(end + 1)] == oc.tags[static_cast<size_t>(start)])
      ++end;
    const char* color = nullptr;
    switch (static_cast<boxplot::CellTag>(oc.tags[static_cast<size_t>(start)])) {
      case boxplot::CellTag::observed_stage1: color = style.stage1_color.c_str(); break;
      case boxplot::CellTag::observed_stage2: color = style.stage2_color.c_str(); break;
      case boxplot::CellTag::missing: color = style.missing_color.c_str(); break;
    }
    // Extend one cell leftwards so consecutive runs connect.
    int a = std::max(start - 1, 0);
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
        << fmt6(style.stroke_width) << "\" stroke-dasharray=\"5,3\" points=\"";
    for (int c = a; c <= end; ++c) {
      if (c > a) out << ' ';
      out << fmt6(f.px(g[c])) << ',' << fmt6(f.py(oc.values[static_cast<size_t>(c)]));
    }
    out << "\"/>\n";
    start = end + 1;
  }
}

std::array<int, 3> hex_rgb(const std::string& c) {
  auto hx = [&](int k) { return std::stoi(c.substr(static_cast<size_t>(k), 2), nullptr, 16); };
  return {hx(1), hx(3), hx(5)};
}

std::string colormap_color(const std::vector<std::string>& stops, double v) {
  v = std::min(std::max(v, 0.0), 1.0);
  const double pos = v * static_cast<double>(stops.size() - 1);
  const int k = std::min(static_cast<int>(pos), static_cast<int>(stops.size()) - 2);
  const double f = pos - k;
  auto a = hex_rgb(stops[static_cast<size_t>(k)]);
  auto b = hex_rgb(stops[static_cast<size_t>(k) + 1]);
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02X%02X%02X",
                static_cast<int>(std::lround(a[0] + f * (b[0] - a[0]))),
                static_cast<int>(std::lround(a[1] + f * (b[1] - a[1]))),
                static_cast<int>(std::lround(a[2] + f * (b[2] - a[2]))));
  return buf;
}

}  // namespace

std::string emit_svg(const boxplot::BoxplotGeometry& g, const StyleConfig& style) {
  check_style(style);
  const int p = static_cast<int>(g.vars.size());
  const int nc = g.grid.size();
  const int width = p * style.panel_width;
  const int height = style.panel_height + 22;

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"#FFFFFF\"/>\n";

  for (int j = 0; j < p; ++j) {
    const auto& panel = g.vars[static_cast<size_t>(j)];
    Frame f;
    f.x0 = j * style.panel_width + kMarginL;
    f.y0 = kMarginT;
    f.w = style.panel_width - kMarginL - kMarginR;
    f.h = style.panel_height - kMarginT - kMarginB;
    f.t_lo = g.grid.t_min();
    f.t_hi = g.grid.t_max();
    double v_lo = *std::min_element(panel.fence_lo.begin(), panel.fence_lo.end());
    double v_hi = *std::max_element(panel.fence_hi.begin(), panel.fence_hi.end());
    for (const auto& oc : panel.outliers) {
      v_lo = std::min(v_lo, *std::min_element(oc.values.begin(), oc.values.end()));
      v_hi = std::max(v_hi, *std::max_element(oc.values.begin(), oc.values.end()));
    }
    double pad = 0.05 * (v_hi - v_lo);
    if (!(pad > 0.0)) pad = 1.0;
    f.v_lo = v_lo - pad;
    f.v_hi = v_hi + pad;

    // Central region: sparse (gray) band on top of the observed (magenta)
    // band, split by the smoothed boundary.
    std::vector<double> boundary_y(static_cast<size_t>(nc));
    for (int c = 0; c < nc; ++c)
      boundary_y[static_cast<size_t>(c)] =
          panel.env_lo[static_cast<size_t>(c)] +
          panel.boundary[static_cast<size_t>(c)] *
              (panel.env_hi[static_cast<size_t>(c)] - panel.env_lo[static_cast<size_t>(c)]);
    auto band = [&](const std::vector<double>& lo, const std::vector<double>& hi,
                    const std::string& fill) {
      out << "<polygon fill=\"" << fill << "\" stroke=\"none\" points=\"";
      for (int c = 0; c < nc; ++c)
        out << fmt6(f.px(g.grid[c])) << ',' << fmt6(f.py(hi[static_cast<size_t>(c)])) << ' ';
      for (int c = nc - 1; c >= 0; --c) {
        out << fmt6(f.px(g.grid[c])) << ',' << fmt6(f.py(lo[static_cast<size_t>(c)]));
        if (c) out << ' ';
      }
      out << "\"/>\n";
    };
    band(panel.env_lo, boundary_y, style.central_fill);
    band(boundary_y, panel.env_hi, style.sparse_fill);

    // Dotted reference line at 50% of the envelope height.
    std::vector<double> ref_y(static_cast<size_t>(nc));
    for (int c = 0; c < nc; ++c)
      ref_y[static_cast<size_t>(c)] =
          panel.env_lo[static_cast<size_t>(c)] +
          g.reference * (panel.env_hi[static_cast<size_t>(c)] - panel.env_lo[static_cast<size_t>(c)]);
    polyline(out, f, g.grid, ref_y, style.reference_color, 1.0, "2,3");

    polyline(out, f, g.grid, panel.env_lo, style.fence_color, 1.0);
    polyline(out, f, g.grid, panel.env_hi, style.fence_color, 1.0);
    polyline(out, f, g.grid, panel.fence_lo, "#000000", 1.0);
    polyline(out, f, g.grid, panel.fence_hi, "#000000", 1.0);

    // Vertical whisker bars at mid-domain.
    int cm = nc / 2;
    out << "<line x1=\"" << fmt6(f.px(g.grid[cm])) << "\" y1=\""
        << fmt6(f.py(panel.env_hi[static_cast<size_t>(cm)])) << "\" x2=\"" << fmt6(f.px(g.grid[cm]))
        << "\" y2=\"" << fmt6(f.py(panel.fence_hi[static_cast<size_t>(cm)]))
        << "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
    out << "<line x1=\"" << fmt6(f.px(g.grid[cm])) << "\" y1=\""
        << fmt6(f.py(panel.env_lo[static_cast<size_t>(cm)])) << "\" x2=\"" << fmt6(f.px(g.grid[cm]))
        << "\" y2=\"" << fmt6(f.py(panel.fence_lo[static_cast<size_t>(cm)]))
        << "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";

    for (const auto& oc : panel.outliers) outlier_paths(out, f, g.grid, oc, style);

    // The median, black where observed and gray where fitted.
    {
      int start = 0;
      while (start < nc) {
        int end = start;
        while (end + 1 < nc &&
               panel.median_missing[static_cast<size_t>(end + 1)] ==
                   panel.median_missing[static_cast<size_t>(start)])
          ++end;
        bool missing = panel.median_missing[static_cast<size_t>(start)] != 0;
        int a = std::max(start - 1, 0);
        out << "<polyline fill=\"none\" stroke=\""
            << (missing ? style.missing_color : style.median_color) << "\" stroke-width=\""
            << fmt6(style.stroke_width + 0.6) << "\"";
        if (missing) out << " stroke-dasharray=\"4,3\"";
        out << " points=\"";
        for (int c = a; c <= end; ++c) {
          if (c > a) out << ' ';
          out << fmt6(f.px(g.grid[c])) << ',' << fmt6(f.py(panel.median[static_cast<size_t>(c)]));
        }
        out << "\"/>\n";
        start = end + 1;
      }
    }
    axes(out, f, panel.name);
  }

  // Legend.
  double ly = style.panel_height + 8;
  const char* labels[3] = {"stage 1 outlier", "stage 2 outlier", "missing segment"};
  const std::string* colors[3] = {&style.stage1_color, &style.stage2_color, &style.missing_color};
  for (int k = 0; k < 3; ++k) {
    double lx = kMarginL + 150.0 * k;
    out << "<line x1=\"" << fmt6(lx) << "\" y1=\"" << fmt6(ly) << "\" x2=\"" << fmt6(lx + 26)
        << "\" y2=\"" << fmt6(ly) << "\" stroke=\"" << *colors[k]
        << "\" stroke-width=\"2\" stroke-dasharray=\"5,3\"/>\n";
    out << "<text x=\"" << fmt6(lx + 31) << "\" y=\"" << fmt6(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << labels[k] << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string emit_svg(const boxplot::IntensityField& field, const StyleConfig& style) {
  check_style(style);
  const int p = static_cast<int>(field.vars.size());
  const int width = p * style.panel_width;
  const int height = style.panel_height;

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"#FFFFFF\"/>\n";

  for (int j = 0; j < p; ++j) {
    const auto& panel = field.vars[static_cast<size_t>(j)];
    Frame f;
    f.x0 = j * style.panel_width + kMarginL;
    f.y0 = kMarginT;
    f.w = style.panel_width - kMarginL - kMarginR;
    f.h = style.panel_height - kMarginT - kMarginB;
    f.t_lo = panel.t_lo;
    f.t_hi = panel.t_hi;
    f.v_lo = panel.v_lo;
    f.v_hi = panel.v_hi;

    if (!panel.values.empty()) {
      const double cw = f.w / panel.nt, ch = f.h / panel.nv;
      for (int a = 0; a < panel.nt; ++a) {
        for (int b = 0; b < panel.nv; ++b) {
          double v = panel.values[static_cast<size_t>(a) * panel.nv + b];
          if (v <= 0.0) continue;
          double x = f.x0 + a * cw;
          double y = f.y0 + f.h - (b + 1) * ch;
          out << "<rect x=\"" << fmt6(x) << "\" y=\"" << fmt6(y) << "\" width=\"" << fmt6(cw + 0.5)
              << "\" height=\"" << fmt6(ch + 0.5) << "\" fill=\""
              << colormap_color(style.colormap, v) << "\"/>\n";
        }
      }
    }
    if (style.show_contours) {
      for (const auto& line : panel.contours) {
        if (line.points.size() < 2) continue;
        out << "<polyline fill=\"none\" stroke=\"#404040\" stroke-width=\"1\" points=\"";
        for (size_t k = 0; k < line.points.size(); ++k) {
          if (k) out << ' ';
          out << fmt6(f.px(line.points[k].first)) << ',' << fmt6(f.py(line.points[k].second));
        }
        out << "\"/>\n";
      }
    }
    axes(out, f, panel.name + " sparseness intensity");
  }
  out << "</svg>\n";
  return out.str();
}

namespace {

json to_json_array(const std::vector<double>& v) { return json(v); }

std::string tag_name(std::uint8_t t) {
  switch (static_cast<boxplot::CellTag>(t)) {
    case boxplot::CellTag::observed_stage1: return "observed_stage1";
    case boxplot::CellTag::observed_stage2: return "observed_stage2";
    case boxplot::CellTag::missing: return "missing";
  }
  throw std::invalid_argument("unknown cell tag");
}

std::uint8_t tag_from_name(const std::string& s) {
  if (s == "observed_stage1") return static_cast<std::uint8_t>(boxplot::CellTag::observed_stage1);
  if (s == "observed_stage2") return static_cast<std::uint8_t>(boxplot::CellTag::observed_stage2);
  if (s == "missing") return static_cast<std::uint8_t>(boxplot::CellTag::missing);
  throw std::runtime_error("unknown cell tag '" + s + "'");
}

}  // namespace

std::string emit_json(const boxplot::BoxplotGeometry& g) {
  json root;
  root["schema_version"] = kSchemaVersion;
  root["kind"] = "boxplot_geometry";
  root["grid"] = g.grid.points();
  root["factor"] = g.factor;
  root["reference"] = g.reference;
  root["two_stage"] = g.two_stage;
  root["median_subject"] = g.median_subject;
  root["members"] = g.members;
  json vars = json::array();
  for (const auto& panel : g.vars) {
    json v;
    v["name"] = panel.name;
    v["median"] = to_json_array(panel.median);
    v["median_missing"] = panel.median_missing;
    v["env_lower"] = to_json_array(panel.env_lo);
    v["env_upper"] = to_json_array(panel.env_hi);
    v["fence_lower"] = to_json_array(panel.fence_lo);
    v["fence_upper"] = to_json_array(panel.fence_hi);
    v["sparseness"] = to_json_array(panel.sparseness);
    v["boundary"] = to_json_array(panel.boundary);
    json outs = json::array();
    for (const auto& oc : panel.outliers) {
      json o;
      o["subject"] = oc.subject;
      o["stage"] = oc.stage;
      o["values"] = to_json_array(oc.values);
      json tags = json::array();
      for (std::uint8_t t : oc.tags) tags.push_back(tag_name(t));
      o["tags"] = tags;
      outs.push_back(o);
    }
    v["outliers"] = outs;
    vars.push_back(v);
  }
  root["variables"] = vars;
  return root.dump(2) + "\n";
}

std::string emit_json(const boxplot::IntensityField& f) {
  json root;
  root["schema_version"] = kSchemaVersion;
  root["kind"] = "intensity_field";
  root["normalization"] = boxplot::to_string(f.norm);
  json vars = json::array();
  for (const auto& panel : f.vars) {
    json v;
    v["name"] = panel.name;
    v["t_range"] = {panel.t_lo, panel.t_hi};
    v["v_range"] = {panel.v_lo, panel.v_hi};
    v["nt"] = panel.nt;
    v["nv"] = panel.nv;
    v["events"] = panel.events;
    v["raw_mass"] = panel.raw_mass;
    if (panel.events == 0) {
      v["intensity"] = json::array();
    } else {
      v["intensity"] = to_json_array(panel.values);
    }
    json contours = json::array();
    for (const auto& line : panel.contours) {
      json l;
      l["level"] = line.level;
      json pts = json::array();
      for (const auto& pt : line.points) pts.push_back({pt.first, pt.second});
      l["points"] = pts;
      contours.push_back(l);
    }
    v["contours"] = contours;
    vars.push_back(v);
  }
  root["variables"] = vars;
  return root.dump(2) + "\n";
}

namespace {

json parse_checked(const std::string& text, const char* kind) {
  json root = json::parse(text);
  if (root.value("schema_version", -1) != kSchemaVersion)
    throw std::runtime_error("unsupported schema_version in JSON document");
  if (root.value("kind", "") != kind)
    throw std::runtime_error(std::string("expected JSON document of kind '") + kind + "'");
  return root;
}

}  // namespace

boxplot::BoxplotGeometry parse_geometry(const std::string& json_text) {
  json root = parse_checked(json_text, "boxplot_geometry");
  boxplot::BoxplotGeometry g{Grid(root.at("grid").get<std::vector<double>>()), {}, {}, 0, 1.5,
                             0.5, false};
  g.factor = root.at("factor").get<double>();
  g.reference = root.at("reference").get<double>();
  g.two_stage = root.at("two_stage").get<bool>();
  g.median_subject = root.at("median_subject").get<int>();
  g.members = root.at("members").get<std::vector<int>>();
  for (const auto& v : root.at("variables")) {
    boxplot::VariablePanel panel;
    panel.name = v.at("name").get<std::string>();
    panel.median = v.at("median").get<std::vector<double>>();
    panel.median_missing = v.at("median_missing").get<std::vector<std::uint8_t>>();
    panel.env_lo = v.at("env_lower").get<std::vector<double>>();
    panel.env_hi = v.at("env_upper").get<std::vector<double>>();
    panel.fence_lo = v.at("fence_lower").get<std::vector<double>>();
    panel.fence_hi = v.at("fence_upper").get<std::vector<double>>();
    panel.sparseness = v.at("sparseness").get<std::vector<double>>();
    panel.boundary = v.at("boundary").get<std::vector<double>>();
    for (const auto& o : v.at("outliers")) {
      boxplot::OutlierCurve oc;
      oc.subject = o.at("subject").get<int>();
      oc.stage = o.at("stage").get<int>();
      oc.values = o.at("values").get<std::vector<double>>();
      for (const auto& t : o.at("tags")) oc.tags.push_back(tag_from_name(t.get<std::string>()));
      panel.outliers.push_back(std::move(oc));
    }
    g.vars.push_back(std::move(panel));
  }
  return g;
}

boxplot::IntensityField parse_intensity(const std::string& json_text) {
  json root = parse_checked(json_text, "intensity_field");
  boxplot::IntensityField f;
  f.norm = boxplot::norm_from_string(root.at("normalization").get<std::string>());
  for (const auto& v : root.at("variables")) {
    boxplot::IntensityPanel panel;
    panel.name = v.at("name").get<std::string>();
    panel.t_lo = v.at("t_range")[0].get<double>();
    panel.t_hi = v.at("t_range")[1].get<double>();
    panel.v_lo = v.at("v_range")[0].get<double>();
    panel.v_hi = v.at("v_range")[1].get<double>();
    panel.nt = v.at("nt").get<int>();
    panel.nv = v.at("nv").get<int>();
    panel.events = v.at("events").get<long>();
    panel.raw_mass = v.at("raw_mass").get<double>();
    auto vals = v.at("intensity").get<std::vector<double>>();
    if (vals.empty()) {
      panel.values.assign(static_cast<size_t>(panel.nt) * panel.nv, 0.0);
    } else {
      panel.values = std::move(vals);
    }
    for (const auto& l : v.at("contours")) {
      boxplot::ContourLine line;
      line.level = l.at("level").get<double>();
      for (const auto& pt : l.at("points"))
        line.points.push_back({pt[0].get<double>(), pt[1].get<double>()});
      panel.contours.push_back(std::move(line));
    }
    f.vars.push_back(std::move(panel));
  }
  return f;
}

std::string json_kind(const std::string& json_text) {
  json root = json::parse(json_text);
  return root.value("kind", "");
}

}  // namespace sfb::render
