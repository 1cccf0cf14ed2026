#include "epx/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "epx/csv.hpp"

namespace epx {

void write_hit_curve_svg(const std::string& path, const HitCurve& curve) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write file: " + path);
  const int width = 640;
  const int height = 480;
  const int margin = 50;
  const double sx = static_cast<double>(width - 2 * margin) / curve.n_obs;
  const double sy = static_cast<double>(height - 2 * margin) / curve.n_active;

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // axes
  out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin
      << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
      << height - margin << "\" stroke=\"black\"/>\n";
  // diagonal reference: expected hits under random ranking
  out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin
      << "\" y2=\"" << margin << "\" stroke=\"lightgray\" stroke-dasharray=\"4\"/>\n";
  out << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"";
  out << margin << ',' << height - margin << ' ';
  for (int n = 1; n <= curve.n_obs; ++n) {
    const double x = margin + sx * n;
    const double y = height - margin - sy * curve.hits[n - 1];
    out << format_double(x) << ',' << format_double(y) << ' ';
  }
  out << "\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">n</text>\n";
  out << "<text x=\"14\" y=\"" << height / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << height / 2 << ")\">H(n)</text>\n";
  out << "</svg>\n";
  if (!out) throw IoError("write failed: " + path);
}

void write_diversity_svg(const std::string& path, const DiversityMap& map, int n_obs) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write file: " + path);
  const int cell = 14;
  const int label_h = 70;
  const int margin = 10;
  const int cols = static_cast<int>(map.column_names.size());
  const int rows = static_cast<int>(map.active_rows.size());
  const int width = 2 * margin + cols * cell;
  const int height = margin + label_h + rows * cell + margin;

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      // darker = smaller rank (higher probability of activity)
      const double frac = (map.ranks[r][c] - 1.0) / std::max(1, n_obs - 1);
      const int shade = static_cast<int>(std::lround(235.0 * frac));
      out << "<rect x=\"" << margin + c * cell << "\" y=\"" << margin + label_h + r * cell
          << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"rgb(" << shade << ','
          << shade << ',' << shade << ")\"/>\n";
    }
  }
  for (int c = 0; c < cols; ++c) {
    const int x = margin + c * cell + cell / 2;
    out << "<text x=\"" << x << "\" y=\"" << margin + label_h - 28
        << "\" text-anchor=\"start\" font-size=\"11\" transform=\"rotate(-60 " << x << ' '
        << margin + label_h - 28 << ")\">" << map.column_names[c] << "</text>\n";
    out << "<text x=\"" << x << "\" y=\"" << margin + label_h - 8
        << "\" text-anchor=\"middle\" font-size=\"9\">"
        << format_double(std::round(map.column_avep[c] * 1000.0) / 1000.0) << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace epx
