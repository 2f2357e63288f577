#include "settler/io/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>

#include "settler/core/error.hpp"
#include "settler/core/fs.hpp"

namespace settler::io {

CsvTable figure_table(const Figure& fig) {
  std::set<double> xs;
  for (const auto& s : fig.series) xs.insert(s.x.begin(), s.x.end());
  CsvTable t;
  t.header.push_back("tau_s");
  for (const auto& s : fig.series) t.header.push_back(s.label);
  std::map<double, std::size_t> row_of;
  for (double x : xs) {
    row_of[x] = t.rows.size();
    std::vector<double> r(t.header.size(), std::numeric_limits<double>::quiet_NaN());
    r[0] = x;
    t.rows.push_back(std::move(r));
  }
  for (std::size_t k = 0; k < fig.series.size(); ++k) {
    const auto& s = fig.series[k];
    for (std::size_t i = 0; i < s.x.size(); ++i) t.rows[row_of[s.x[i]]][k + 1] = s.y[i];
  }
  return t;
}

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const Figure& fig, int width, int height) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : fig.series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  if (x1 == x0) x1 = x0 + 1.0;
  if (y1 == y0) y1 = y0 + 1e-3;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;

  const double left = 70, right = 20, top = 30, bottom = 45;
  const double pw = width - left - right, ph = height - top - bottom;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
         std::to_string(height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fmt("%.1f", left) + "\" y=\"18\" font-size=\"13\">" + escape(fig.title) + "</text>\n";
  svg += "<rect x=\"" + fmt("%.1f", left) + "\" y=\"" + fmt("%.1f", top) + "\" width=\"" + fmt("%.1f", pw) +
         "\" height=\"" + fmt("%.1f", ph) + "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0;
    const double yv = y0 + (y1 - y0) * k / 4.0;
    svg += "<text x=\"" + fmt("%.1f", px(xv)) + "\" y=\"" + fmt("%.1f", top + ph + 15) +
           "\" text-anchor=\"middle\">" + fmt("%g", xv) + "</text>\n";
    svg += "<text x=\"" + fmt("%.1f", left - 5) + "\" y=\"" + fmt("%.1f", py(yv) + 4) + "\" text-anchor=\"end\">" +
           fmt("%.4g", yv) + "</text>\n";
  }
  svg += "<text x=\"" + fmt("%.1f", left + pw / 2) + "\" y=\"" + std::to_string(height - 8) +
         "\" text-anchor=\"middle\">" + escape(fig.x_label) + "</text>\n";
  svg += "<text transform=\"translate(14," + fmt("%.1f", top + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
         escape(fig.y_label) + "</text>\n";

  auto draw = [&](const PlotSeries& s) {
    std::string stroke = "#1f77b4", extra;
    double w = 2.0;
    if (s.style == LineStyle::member) {
      stroke = "#7f7f7f";
      w = 0.8;
      extra = " stroke-opacity=\"0.35\"";
    } else if (s.style == LineStyle::truth) {
      stroke = "#000000";
      w = 1.5;
      extra = " stroke-dasharray=\"5,3\"";
    }
    std::string pts;
    auto flush = [&] {
      if (!pts.empty()) {
        svg += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + fmt("%.1f", w) + "\"" + extra +
               " points=\"" + pts + "\"><title>" + escape(s.label) + "</title></polyline>\n";
      }
      pts.clear();
    };
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        flush();
        continue;
      }
      if (!pts.empty()) pts += ' ';
      pts += fmt("%.2f", px(s.x[i])) + "," + fmt("%.2f", py(s.y[i]));
    }
    flush();
  };
  for (auto style : {LineStyle::member, LineStyle::mean, LineStyle::truth}) {
    for (const auto& s : fig.series) {
      if (s.style == style) draw(s);
    }
  }
  svg += "</svg>\n";
  return svg;
}

std::vector<std::filesystem::path> plot_run(const std::filesystem::path& run_dir,
                                            const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(run_dir)) fail(ErrorCategory::io, "plot: run directory not found: " + run_dir.string());
  std::vector<fs::path> inputs;
  for (const auto& e : fs::directory_iterator(run_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") inputs.push_back(e.path());
  }
  std::sort(inputs.begin(), inputs.end());
  fs::create_directories(out_dir);

  static const std::vector<std::string> variables{"h_hp_m", "h_dp_m", "q_bot_m3s", "q_top_m3s"};
  std::vector<fs::path> written;
  for (const auto& in : inputs) {
    const CsvTable t = read_csv(in);
    const auto c_member = t.find("member");
    if (!c_member) continue;
    const std::size_t c_tau = t.index("tau_s");
    for (const auto& var : variables) {
      const auto c_var = t.find(var);
      if (!c_var) continue;
      const auto c_true = t.find("true_" + var);
      std::map<int, PlotSeries> by_member;
      PlotSeries truth{"truth", LineStyle::truth, {}, {}};
      for (const auto& r : t.rows) {
        const int m = static_cast<int>(r[*c_member]);
        auto& s = by_member[m];
        s.x.push_back(r[c_tau]);
        s.y.push_back(r[*c_var]);
        if (m == -1 && c_true) {
          truth.x.push_back(r[c_tau]);
          truth.y.push_back(r[*c_true]);
        }
      }
      Figure fig;
      fig.title = in.stem().string() + ": " + var;
      fig.x_label = "tau [s]";
      fig.y_label = var;
      for (auto& [m, s] : by_member) {
        if (m < 0) continue;
        s.label = "member_" + std::to_string(m);
        s.style = LineStyle::member;
        fig.series.push_back(std::move(s));
      }
      if (by_member.count(-1)) {
        auto& s = by_member[-1];
        s.label = "mean";
        s.style = LineStyle::mean;
        fig.series.push_back(std::move(s));
      }
      const bool has_truth = std::any_of(truth.y.begin(), truth.y.end(), [](double v) { return std::isfinite(v); });
      if (has_truth) fig.series.push_back(std::move(truth));

      const fs::path stem = out_dir / (in.stem().string() + "_" + var);
      fs::path csv = stem, svg = stem;
      csv += ".csv";
      svg += ".svg";
      write_csv(csv, figure_table(fig));
      write_file_atomic(svg, render_svg(fig));
      written.push_back(csv);
      written.push_back(svg);
    }
  }
  std::sort(written.begin(), written.end());
  return written;
}

}  // namespace settler::io
