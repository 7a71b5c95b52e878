#include "lisce/harness/chart.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "lisce/errors.hpp"
#include "lisce/harness/csv.hpp"

namespace lisce::harness {

namespace {

struct Series {
  std::string name;
  std::vector<double> x, y;
};

double parse_cell(const std::string& s) {
  double v = 0;
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e)
    throw SchemaMismatch("non-numeric cell '" + s + "' in plotted column");
  return v;
}

std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Step sizes restricted to 1/2/5 powers so tick labels stay short.
double nice_step(double range, int target_ticks) {
  const double raw = range / std::max(target_ticks - 1, 1);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double mult : {1.0, 2.0, 5.0, 10.0})
    if (raw <= mult * mag * (1 + 1e-12)) return mult * mag;
  return 10 * mag;
}

const char* kPalette[] = {"#1f6fb2", "#d95f02", "#1b9e77", "#7570b3",
                          "#e7298a", "#66a61e", "#4d4d4d"};

}  // namespace

void emit_chart(const std::string& csv_path, const ChartSpec& spec,
                const std::string& svg_path) {
  const CsvTable t = read_csv(csv_path);
  const int xi = t.column_index(spec.x_col);
  const int yi = t.column_index(spec.y_col);
  if (xi < 0) throw SchemaMismatch("csv lacks x column '" + spec.x_col + "'");
  if (yi < 0) throw SchemaMismatch("csv lacks y column '" + spec.y_col + "'");
  int si = -1;
  if (!spec.series_col.empty()) {
    si = t.column_index(spec.series_col);
    if (si < 0) throw SchemaMismatch("csv lacks series column '" + spec.series_col + "'");
  }
  if (t.rows.empty()) throw SchemaMismatch("csv has no data rows: " + csv_path);

  std::vector<Series> series;
  std::map<std::string, std::size_t> by_name;
  for (const auto& row : t.rows) {
    const std::string name = si >= 0 ? row[si] : "";
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      it = by_name.emplace(name, series.size()).first;
      series.push_back(Series{name, {}, {}});
    }
    double y = parse_cell(row[yi]);
    if (spec.db_y) {
      if (!(y > 0)) throw SchemaMismatch("dB transform requires positive values");
      y = 10.0 * std::log10(y);
    }
    if (spec.log_y && !(y > 0))
      throw SchemaMismatch("log scale requires positive values");
    series[it->second].x.push_back(parse_cell(row[xi]));
    series[it->second].y.push_back(spec.log_y ? std::log10(y) : y);
  }

  double xmin = series[0].x[0], xmax = xmin;
  double ymin = series[0].y[0], ymax = ymin;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  if (xmax == xmin) { xmin -= 0.5; xmax += 0.5; }
  if (ymax == ymin) { ymin -= 0.5; ymax += 0.5; }

  // Plot geometry.
  const double W = 860, H = 520;
  const double L = 72, R = W - 170, T = 48, B = H - 56;
  const auto sx = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (R - L); };
  const auto sy = [&](double y) { return B - (y - ymin) / (ymax - ymin) * (B - T); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  o << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"#ffffff\"/>\n";
  if (!spec.title.empty())
    o << "<text x=\"" << (L + (R - L) / 2) << "\" y=\"26\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">" << spec.title << "</text>\n";

  // Gridlines and ticks.
  o << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333333\">\n";
  if (spec.log_y) {
    const int d0 = static_cast<int>(std::floor(ymin));
    const int d1 = static_cast<int>(std::ceil(ymax));
    for (int d = d0; d <= d1; ++d) {
      if (d < ymin - 1e-9 || d > ymax + 1e-9) continue;
      const double py = sy(d);
      o << "<line x1=\"" << L << "\" y1=\"" << py << "\" x2=\"" << R << "\" y2=\"" << py
        << "\" stroke=\"#dddddd\"/>\n";
      o << "<text x=\"" << (L - 6) << "\" y=\"" << (py + 4)
        << "\" text-anchor=\"end\">1e" << d << "</text>\n";
    }
  } else {
    const double step = nice_step(ymax - ymin, 6);
    for (double v = std::ceil(ymin / step) * step; v <= ymax + 1e-9 * step; v += step) {
      const double py = sy(v);
      o << "<line x1=\"" << L << "\" y1=\"" << py << "\" x2=\"" << R << "\" y2=\"" << py
        << "\" stroke=\"#dddddd\"/>\n";
      o << "<text x=\"" << (L - 6) << "\" y=\"" << (py + 4) << "\" text-anchor=\"end\">"
        << fmt_tick(v) << "</text>\n";
    }
  }
  {
    const double step = nice_step(xmax - xmin, 8);
    for (double v = std::ceil(xmin / step) * step; v <= xmax + 1e-9 * step; v += step) {
      const double px = sx(v);
      o << "<line x1=\"" << px << "\" y1=\"" << T << "\" x2=\"" << px << "\" y2=\"" << B
        << "\" stroke=\"#eeeeee\"/>\n";
      o << "<text x=\"" << px << "\" y=\"" << (B + 16) << "\" text-anchor=\"middle\">"
        << fmt_tick(v) << "</text>\n";
    }
  }
  o << "</g>\n";

  // Axes.
  o << "<line x1=\"" << L << "\" y1=\"" << B << "\" x2=\"" << R << "\" y2=\"" << B
    << "\" stroke=\"#000000\"/>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << B
    << "\" stroke=\"#000000\"/>\n";
  const std::string xlabel = spec.x_label.empty() ? spec.x_col : spec.x_label;
  std::string ylabel = spec.y_label.empty() ? spec.y_col : spec.y_label;
  if (spec.db_y && spec.y_label.empty()) ylabel += " (dB)";
  o << "<text x=\"" << (L + (R - L) / 2) << "\" y=\"" << (H - 14)
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << xlabel
    << "</text>\n";
  o << "<text x=\"18\" y=\"" << (T + (B - T) / 2)
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
       "transform=\"rotate(-90 18 " << (T + (B - T) / 2) << ")\">" << ylabel
    << "</text>\n";

  // Data.
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % (sizeof kPalette / sizeof kPalette[0])];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < series[s].x.size(); ++i)
      o << sx(series[s].x[i]) << "," << sy(series[s].y[i]) << " ";
    o << "\"/>\n";
    for (std::size_t i = 0; i < series[s].x.size(); ++i)
      o << "<circle cx=\"" << sx(series[s].x[i]) << "\" cy=\"" << sy(series[s].y[i])
        << "\" r=\"2.6\" fill=\"" << color << "\"/>\n";
  }

  // Legend.
  if (!series.empty() && !(series.size() == 1 && series[0].name.empty())) {
    double ly = T + 8;
    o << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
      const char* color = kPalette[s % (sizeof kPalette / sizeof kPalette[0])];
      o << "<line x1=\"" << (R + 14) << "\" y1=\"" << ly << "\" x2=\"" << (R + 38)
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
      o << "<text x=\"" << (R + 44) << "\" y=\"" << (ly + 4) << "\">" << series[s].name
        << "</text>\n";
      ly += 20;
    }
    o << "</g>\n";
  }
  o << "</svg>\n";

  std::ofstream f(svg_path, std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + svg_path);
  f << o.str();
  if (!f) throw IoError("short write: " + svg_path);
}

}  // namespace lisce::harness
