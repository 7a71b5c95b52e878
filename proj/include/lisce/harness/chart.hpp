#pragma once

// Self-contained SVG line charts from experiment CSVs. No scripts, no
// external assets; one polyline per series.

#include <string>

namespace lisce::harness {

struct ChartSpec {
  std::string x_col;
  std::string y_col;
  std::string series_col;  // empty = single unnamed series
  bool log_y = false;      // log10 y axis; requires positive values
  bool db_y = false;       // plot 10*log10(y) instead of y
  std::string title;
  std::string x_label;     // empty = x_col
  std::string y_label;     // empty = y_col (suffixed when db_y)
};

void emit_chart(const std::string& csv_path, const ChartSpec& spec,
                const std::string& svg_path);

}  // namespace lisce::harness
