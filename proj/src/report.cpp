#include "cdloss/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "cdloss/config.hpp"

namespace cdl {

namespace {

constexpr std::string_view kAblationHeader = "phantom,loss,t,dice,hausdorff,assd2d,contour_dice,status";

std::string na_or(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

// Names are written verbatim, so they must not break the row.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") != std::string::npos) {
    fail(ErrorCode::invalid_argument, "name '" + s + "' cannot be written to CSV");
  }
  return s;
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(const std::string& s, std::size_t line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v)) {
    fail(ErrorCode::invalid_argument, "line " + std::to_string(line) + ": '" + s + "' is not a number");
  }
  return v;
}

std::optional<double> parse_optional(const std::string& s, std::size_t line) {
  if (s == "NA") return std::nullopt;
  return parse_number(s, line);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string cell(const Stat& s, int digits) {
  if (s.n == 0) return "NA";
  return fixed(s.mean, digits) + " ± " + fixed(s.std, digits);
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) { return fixed(v, 2); }

// Axis top: the smallest of 1, 2, 5 times a power of ten covering v.
double nice_ceiling(double v) {
  if (!(v > 0.0)) return 1.0;
  const double p = std::pow(10.0, std::floor(std::log10(v)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * p >= v) return m * p;
  }
  return 10.0 * p;
}

}  // namespace

std::string metric_csv_header() { return "dice,hausdorff,assd2d,contour_dice"; }

std::string metric_csv_row(const MetricReport& r) {
  return format_double(r.dice) + "," + na_or(r.hausdorff_mm) + "," + na_or(r.assd2d_mm) + "," +
         format_double(r.contour_dice);
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out(kAblationHeader);
  out += '\n';
  for (const auto& row : rows) {
    out += csv_field(row.phantom) + "," + csv_field(row.loss) + "," + format_double(row.t) + ",";
    out += row.ok ? metric_csv_row(row.report) : std::string("NA,NA,NA,NA");
    out += row.ok ? ",ok\n" : ",failed\n";
  }
  return out;
}

std::vector<TableRow> parse_ablation_csv(std::string_view text) {
  std::vector<TableRow> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != kAblationHeader) {
        fail(ErrorCode::malformed_header, "expected CSV header '" + std::string(kAblationHeader) + "'");
      }
      header = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 8) {
      fail(ErrorCode::invalid_argument,
           "line " + std::to_string(lineno) + ": expected 8 fields, got " + std::to_string(f.size()));
    }
    TableRow r;
    r.phantom = f[0];
    r.loss = f[1];
    r.t = parse_number(f[2], lineno);
    r.dice = parse_optional(f[3], lineno);
    r.hausdorff = parse_optional(f[4], lineno);
    r.assd2d = parse_optional(f[5], lineno);
    r.contour_dice = parse_optional(f[6], lineno);
    if (f[7] == "ok") {
      r.ok = true;
    } else if (f[7] == "failed") {
      r.ok = false;
    } else {
      fail(ErrorCode::invalid_argument, "line " + std::to_string(lineno) + ": unknown status '" + f[7] + "'");
    }
    rows.push_back(std::move(r));
  }
  if (!header) fail(ErrorCode::malformed_header, "CSV is empty");
  return rows;
}

Stat summarize_values(const std::vector<double>& v) {
  Stat s;
  s.n = v.size();
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  s.min = *lo;
  s.max = *hi;
  return s;
}

std::vector<GroupSummary> summarize(const std::vector<TableRow>& rows) {
  struct Acc {
    GroupSummary g;
    std::vector<double> dice, haus, assd, cd;
  };
  std::vector<Acc> acc;
  for (const auto& r : rows) {
    auto it = std::find_if(acc.begin(), acc.end(), [&](const Acc& a) { return a.g.loss == r.loss && a.g.t == r.t; });
    if (it == acc.end()) {
      acc.push_back({});
      it = std::prev(acc.end());
      it->g.loss = r.loss;
      it->g.t = r.t;
    }
    ++it->g.rows;
    if (!r.ok) {
      ++it->g.failed;
      continue;
    }
    if (r.dice) it->dice.push_back(*r.dice);
    if (r.hausdorff) it->haus.push_back(*r.hausdorff);
    if (r.assd2d) it->assd.push_back(*r.assd2d);
    if (r.contour_dice) it->cd.push_back(*r.contour_dice);
  }
  std::vector<GroupSummary> out;
  for (auto& a : acc) {
    a.g.dice = summarize_values(a.dice);
    a.g.hausdorff = summarize_values(a.haus);
    a.g.assd2d = summarize_values(a.assd);
    a.g.contour_dice = summarize_values(a.cd);
    out.push_back(a.g);
  }
  return out;
}

std::string render_markdown(const std::vector<GroupSummary>& groups) {
  std::string out =
      "| Loss | t | Dice | Hausdorff (mm) | ASSD (mm) | Contour Dice | n |\n"
      "|:-----|--:|-----:|---------------:|----------:|-------------:|--:|\n";
  for (const auto& g : groups) {
    out += "| " + g.loss + " | " + format_double(g.t) + " | " + cell(g.dice, 3) + " | " + cell(g.hausdorff, 2) +
           " | " + cell(g.assd2d, 2) + " | " + cell(g.contour_dice, 3) + " | " +
           std::to_string(g.rows - g.failed);
    if (g.failed) out += " (" + std::to_string(g.failed) + " failed)";
    out += " |\n";
  }
  return out;
}

std::string render_svg(const std::vector<GroupSummary>& groups) {
  // Losses are the groups along x, thresholds the bars inside a group.
  std::vector<std::string> losses;
  std::vector<double> ts;
  for (const auto& g : groups) {
    if (std::find(losses.begin(), losses.end(), g.loss) == losses.end()) losses.push_back(g.loss);
    if (std::find(ts.begin(), ts.end(), g.t) == ts.end()) ts.push_back(g.t);
  }
  std::sort(ts.begin(), ts.end());
  static const char* kPalette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"};

  struct Panel {
    const char* title;
    const Stat GroupSummary::*stat;
    double top;
  };
  double assd_max = 0.0;
  for (const auto& g : groups) {
    if (g.assd2d.n) assd_max = std::max({assd_max, g.assd2d.max, g.assd2d.mean + g.assd2d.std});
  }
  const Panel panels[] = {{"Dice", &GroupSummary::dice, 1.0},
                          {"ASSD (mm)", &GroupSummary::assd2d, nice_ceiling(assd_max)}};

  const double panel_w = 340, panel_h = 300, margin_l = 50, margin_t = 40, plot_h = 200;
  const double width = panel_w * 2 + 20, height = panel_h + 40;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << " " << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (std::size_t pi = 0; pi < 2; ++pi) {
    const Panel& panel = panels[pi];
    const double x0 = pi * (panel_w + 20) + margin_l, y0 = margin_t, plot_w = panel_w - margin_l - 10;
    const auto y_of = [&](double v) { return y0 + plot_h - plot_h * std::clamp(v / panel.top, 0.0, 1.0); };
    os << "<g>\n<text x=\"" << num(x0 + plot_w / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">"
       << panel.title << "</text>\n";
    for (int k = 0; k <= 4; ++k) {
      const double v = panel.top * k / 4.0, y = y_of(v);
      os << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y) << "\" x2=\"" << num(x0 + plot_w) << "\" y2=\""
         << num(y) << "\" stroke=\"#e0e0e0\"/>\n";
      os << "<text x=\"" << num(x0 - 4) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">" << fixed(v, 2)
         << "</text>\n";
    }
    os << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(x0) << "\" y2=\""
       << num(y0 + plot_h) << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y0 + plot_h) << "\" x2=\"" << num(x0 + plot_w)
       << "\" y2=\"" << num(y0 + plot_h) << "\" stroke=\"black\"/>\n";

    const double group_w = losses.empty() ? plot_w : plot_w / losses.size();
    const double bar_w = group_w * 0.7 / std::max<std::size_t>(1, ts.size());
    for (std::size_t li = 0; li < losses.size(); ++li) {
      const double gx = x0 + li * group_w + group_w * 0.15;
      os << "<text x=\"" << num(x0 + (li + 0.5) * group_w) << "\" y=\"" << num(y0 + plot_h + 16)
         << "\" text-anchor=\"middle\">" << xml_escape(losses[li]) << "</text>\n";
      for (std::size_t ti = 0; ti < ts.size(); ++ti) {
        const auto it = std::find_if(groups.begin(), groups.end(),
                                     [&](const GroupSummary& g) { return g.loss == losses[li] && g.t == ts[ti]; });
        if (it == groups.end()) continue;
        const Stat& s = (*it).*(panel.stat);
        if (s.n == 0) continue;
        const double bx = gx + ti * bar_w, cx = bx + bar_w / 2;
        os << "<rect x=\"" << num(bx) << "\" y=\"" << num(y_of(s.mean)) << "\" width=\"" << num(bar_w * 0.9)
           << "\" height=\"" << num(y0 + plot_h - y_of(s.mean)) << "\" fill=\"" << kPalette[ti % 6]
           << "\"><title>" << xml_escape(losses[li]) << " t=" << format_double(ts[ti]) << ": "
           << fixed(s.mean, 3) << " ± " << fixed(s.std, 3) << " (n=" << s.n << ")</title></rect>\n";
        const double c = cx - bar_w * 0.05;
        for (double v : {s.min, s.max}) {
          os << "<line x1=\"" << num(c - bar_w * 0.3) << "\" y1=\"" << num(y_of(v)) << "\" x2=\""
             << num(c + bar_w * 0.3) << "\" y2=\"" << num(y_of(v)) << "\" stroke=\"gray\"/>\n";
        }
        os << "<line x1=\"" << num(c) << "\" y1=\"" << num(y_of(s.mean - s.std)) << "\" x2=\"" << num(c)
           << "\" y2=\"" << num(y_of(s.mean + s.std)) << "\" stroke=\"black\"/>\n";
        for (double v : {s.mean - s.std, s.mean + s.std}) {
          os << "<line x1=\"" << num(c - bar_w * 0.15) << "\" y1=\"" << num(y_of(v)) << "\" x2=\""
             << num(c + bar_w * 0.15) << "\" y2=\"" << num(y_of(v)) << "\" stroke=\"black\"/>\n";
        }
      }
    }
    os << "</g>\n";
  }
  // Legend: one swatch per threshold.
  for (std::size_t ti = 0; ti < ts.size(); ++ti) {
    const double lx = margin_l + ti * 90, ly = panel_h + 10;
    os << "<rect x=\"" << num(lx) << "\" y=\"" << num(ly) << "\" width=\"12\" height=\"12\" fill=\""
       << kPalette[ti % 6] << "\"/>\n";
    os << "<text x=\"" << num(lx + 16) << "\" y=\"" << num(ly + 10) << "\">t = " << format_double(ts[ti])
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace cdl
