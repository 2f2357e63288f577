#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "settler/io/csv.hpp"

namespace settler::io {

enum class LineStyle { truth, member, mean };

struct PlotSeries {
  std::string label;
  LineStyle style = LineStyle::member;
  std::vector<double> x;
  std::vector<double> y;
};

struct Figure {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
};

/// Wide table: the union of x stamps as tau_s plus one column per series.
CsvTable figure_table(const Figure& figure);
/// Polyline chart: members thin and translucent, then the mean, then the
/// truth on top. NaN samples break the line.
std::string render_svg(const Figure& figure, int width = 720, int height = 360);

/// One figure per variable for every long prediction CSV (member column,
/// -1 = mean, optional true_<var>) in `run_dir`. Writes <stem>_<var>.csv and
/// .svg into `out_dir`; returns the written paths in sorted order.
std::vector<std::filesystem::path> plot_run(const std::filesystem::path& run_dir,
                                            const std::filesystem::path& out_dir);

}  // namespace settler::io
